#include "radiotwin/config.hpp"

#include <cstdlib>
#include <stdexcept>

namespace radiotwin::config {

models::ModelKind ExperimentConfig::model_kind() const {
    if (model == "dct_mlp") return models::ModelKind::dct_mlp;
    if (model == "unet_cascade") return models::ModelKind::unet_cascade;
    if (model == "vitals_cnn") return models::ModelKind::vitals_cnn;
    throw std::invalid_argument("unknown model '" + model +
                                "' (expected dct_mlp|unet_cascade|vitals_cnn)");
}

models::GeluMode ExperimentConfig::gelu_mode() const {
    if (gelu == "exact") return models::GeluMode::exact;
    if (gelu == "tanh") return models::GeluMode::tanh_approx;
    throw std::invalid_argument("unknown gelu mode '" + gelu + "' (expected exact|tanh)");
}

models::TrainConfig ExperimentConfig::train_config() const {
    models::TrainConfig tc;
    tc.model = model_kind();
    tc.epochs = epochs;
    tc.seed = seed;
    tc.lr = lr;
    tc.weight_decay = weight_decay;
    tc.lambda1 = lambda1;
    tc.lambda2 = lambda2;
    tc.batch_size = batch_size;
    tc.gelu_mode = gelu_mode();
    tc.k_streams = k;
    tc.joint_cascade = joint_cascade;
    tc.base_width = base_width;
    return tc;
}

void ExperimentConfig::validate() const {
    model_kind();
    gelu_mode();
    if (split != "pooled" && split != "ltso")
        throw std::invalid_argument("unknown split '" + split + "'");
    if (n_ch < 1 || n_ch > 64)
        throw std::invalid_argument("n_ch must be in [1, 64]");
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (lr <= 0.0) throw std::invalid_argument("lr must be > 0");
    if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
    if (k != 1 && k != 2) throw std::invalid_argument("k must be 1 or 2");
    if (subjects < 1) throw std::invalid_argument("subjects must be >= 1");
    if (duration <= 0.0) throw std::invalid_argument("duration must be > 0");
    if (noise_var < 0.0) throw std::invalid_argument("noise_var must be >= 0");
    if (augment_noise < 0.0) throw std::invalid_argument("augment_noise must be >= 0");
}

void apply_env_seed(ExperimentConfig& cfg) {
    if (const char* env = std::getenv("RADIO_TWIN_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0')
            throw std::invalid_argument("RADIO_TWIN_SEED is not an integer: " +
                                        std::string(env));
        cfg.seed = static_cast<uint64_t>(v);
    }
}

}  // namespace radiotwin::config
