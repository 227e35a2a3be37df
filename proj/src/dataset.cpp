#include "radiotwin/dataset.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "radiotwin/errors.hpp"

namespace radiotwin::dataset {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

uint64_t fnv1a64(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = 0xcbf29ce484222325ull;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

void write_atomic(const fs::path& path, const std::vector<char>& bytes) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::vector<char> read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IntegrityError("missing file: " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    return bytes;
}

void push_f32(std::vector<char>& out, double v) {
    const float f = static_cast<float>(v);
    const char* p = reinterpret_cast<const char*>(&f);
    out.insert(out.end(), p, p + sizeof(float));
}

float pull_f32(const std::vector<char>& in, size_t idx) {
    float f;
    std::memcpy(&f, in.data() + idx * sizeof(float), sizeof(float));
    return f;
}

void check_size(const fs::path& file, size_t actual, size_t expected) {
    if (actual != expected)
        throw IntegrityError("size mismatch for " + file.string() + ": expected " +
                             std::to_string(expected) + " bytes, found " +
                             std::to_string(actual));
}

}  // namespace

void save_dataset(const std::string& dir,
                  const std::vector<physio::SubjectData>& subjects) {
    fs::create_directories(dir);
    ordered_json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["subjects"] = ordered_json::array();

    for (const auto& s : subjects) {
        const std::string& id = s.profile.subject_id;
        if (id.empty()) throw std::invalid_argument("save_dataset: empty subject_id");
        fs::create_directories(fs::path(dir) / id);

        const int n_sub = s.radio.frames.empty()
                              ? 64
                              : static_cast<int>(s.radio.frames[0].h.size());
        std::vector<char> radio_bytes;
        radio_bytes.reserve(s.radio.frames.size() * n_sub * 2 * sizeof(float));
        for (const auto& f : s.radio.frames)
            for (const auto& v : f.h) {
                push_f32(radio_bytes, v.real());
                push_f32(radio_bytes, v.imag());
            }

        std::vector<char> ppg_bytes;
        ppg_bytes.reserve(s.ppg.samples.size() * sizeof(float));
        for (double v : s.ppg.samples) push_f32(ppg_bytes, v);

        std::vector<char> vitals_bytes;
        vitals_bytes.reserve(s.vitals.size() * 3 * sizeof(float));
        for (const auto& v : s.vitals) {
            push_f32(vitals_bytes, v.hr);
            push_f32(vitals_bytes, v.spo2);
            push_f32(vitals_bytes, v.rr);
        }

        write_atomic(fs::path(dir) / id / "radio.bin", radio_bytes);
        write_atomic(fs::path(dir) / id / "ppg.bin", ppg_bytes);
        write_atomic(fs::path(dir) / id / "vitals.bin", vitals_bytes);

        ordered_json entry;
        entry["subject_id"] = id;
        entry["radio"] = {{"file", id + "/radio.bin"},
                          {"frames", s.radio.frames.size()},
                          {"n_subcarriers", n_sub},
                          {"rate_hz", s.radio.rate},
                          {"checksum", fnv1a64(radio_bytes.data(), radio_bytes.size())}};
        entry["ppg"] = {{"file", id + "/ppg.bin"},
                        {"samples", s.ppg.samples.size()},
                        {"rate_hz", s.ppg.rate},
                        {"checksum", fnv1a64(ppg_bytes.data(), ppg_bytes.size())}};
        entry["vitals"] = {{"file", id + "/vitals.bin"},
                           {"records", s.vitals.size()},
                           {"checksum", fnv1a64(vitals_bytes.data(), vitals_bytes.size())}};
        manifest["subjects"].push_back(entry);
    }

    const std::string text = manifest.dump(2) + "\n";
    write_atomic(fs::path(dir) / "manifest.json",
                 std::vector<char>(text.begin(), text.end()));
}

std::vector<physio::SubjectData> load_dataset(const std::string& dir) {
    const fs::path manifest_path = fs::path(dir) / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw IntegrityError("missing manifest: " + manifest_path.string());
    ordered_json manifest;
    try {
        in >> manifest;
    } catch (const std::exception& e) {
        throw IntegrityError("unparseable manifest " + manifest_path.string() + ": " +
                             e.what());
    }

    const int version = manifest.value("format_version", -1);
    if (version != kFormatVersion)
        throw IntegrityError("unsupported format_version " + std::to_string(version) +
                             " in " + manifest_path.string() + " (supported: " +
                             std::to_string(kFormatVersion) + ")");

    std::vector<physio::SubjectData> subjects;
    for (const auto& entry : manifest.at("subjects")) {
        physio::SubjectData s;
        s.profile.subject_id = entry.at("subject_id").get<std::string>();

        const auto& rj = entry.at("radio");
        const size_t frames = rj.at("frames").get<size_t>();
        const int n_sub = rj.at("n_subcarriers").get<int>();
        const fs::path radio_file = fs::path(dir) / rj.at("file").get<std::string>();
        auto radio_bytes = read_all(radio_file);
        check_size(radio_file, radio_bytes.size(), frames * n_sub * 2 * sizeof(float));
        if (rj.contains("checksum") &&
            rj.at("checksum").get<uint64_t>() !=
                fnv1a64(radio_bytes.data(), radio_bytes.size()))
            throw IntegrityError("checksum mismatch for " + radio_file.string());
        s.radio.rate = rj.at("rate_hz").get<double>();
        s.radio.subject_id = s.profile.subject_id;
        s.radio.frames.resize(frames);
        for (size_t f = 0; f < frames; ++f) {
            auto& h = s.radio.frames[f].h;
            h.resize(n_sub);
            for (int k = 0; k < n_sub; ++k) {
                const size_t base = (f * n_sub + k) * 2;
                h[k] = {pull_f32(radio_bytes, base), pull_f32(radio_bytes, base + 1)};
            }
            s.radio.frames[f].symbol_index = static_cast<int64_t>(f);
            s.radio.frames[f].timestamp = f / s.radio.rate;
        }

        const auto& pj = entry.at("ppg");
        const size_t samples = pj.at("samples").get<size_t>();
        const fs::path ppg_file = fs::path(dir) / pj.at("file").get<std::string>();
        auto ppg_bytes = read_all(ppg_file);
        check_size(ppg_file, ppg_bytes.size(), samples * sizeof(float));
        if (pj.contains("checksum") &&
            pj.at("checksum").get<uint64_t>() !=
                fnv1a64(ppg_bytes.data(), ppg_bytes.size()))
            throw IntegrityError("checksum mismatch for " + ppg_file.string());
        s.ppg.rate = pj.at("rate_hz").get<double>();
        s.ppg.samples.resize(samples);
        for (size_t i = 0; i < samples; ++i) s.ppg.samples[i] = pull_f32(ppg_bytes, i);

        const auto& vj = entry.at("vitals");
        const size_t records = vj.at("records").get<size_t>();
        const fs::path vitals_file = fs::path(dir) / vj.at("file").get<std::string>();
        auto vitals_bytes = read_all(vitals_file);
        check_size(vitals_file, vitals_bytes.size(), records * 3 * sizeof(float));
        if (vj.contains("checksum") &&
            vj.at("checksum").get<uint64_t>() !=
                fnv1a64(vitals_bytes.data(), vitals_bytes.size()))
            throw IntegrityError("checksum mismatch for " + vitals_file.string());
        s.vitals.resize(records);
        for (size_t i = 0; i < records; ++i) {
            s.vitals[i].hr = pull_f32(vitals_bytes, i * 3);
            s.vitals[i].spo2 = pull_f32(vitals_bytes, i * 3 + 1);
            s.vitals[i].rr = pull_f32(vitals_bytes, i * 3 + 2);
            s.vitals[i].timestamp = static_cast<double>(i);
        }
        subjects.push_back(std::move(s));
    }
    return subjects;
}

}  // namespace radiotwin::dataset
