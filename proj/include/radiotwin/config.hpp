#pragma once

#include <cstdint>
#include <string>

#include "radiotwin/models.hpp"

namespace radiotwin::config {

// Every published hyperparameter appears here with its stated value as the
// default; experiment scripts override via config file or flags.
struct ExperimentConfig {
    std::string dataset;
    std::string output_dir = "out";
    std::string model = "unet_cascade";  // dct_mlp | unet_cascade | vitals_cnn
    int n_ch = 16;
    std::string split = "pooled";  // pooled | ltso
    uint64_t seed = 1;
    int epochs = 10;
    int batch_size = 32;
    double lr = 1e-4;
    double weight_decay = 1e-6;
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    std::string gelu = "exact";  // exact | tanh
    int k = 1;                   // DCT+MLP input streams: 1 magnitude, 2 re/im
    int base_width = 16;
    double augment_noise = 0.01;
    bool joint_cascade = true;
    int threads = 0;  // 0 = library default; 1 = serial mode

    // simulate
    int subjects = 6;
    double duration = 120.0;
    double noise_var = 1e-6;

    models::ModelKind model_kind() const;
    models::GeluMode gelu_mode() const;
    models::TrainConfig train_config() const;
    void validate() const;
};

// RADIO_TWIN_SEED, when set, overrides the configured seed.
void apply_env_seed(ExperimentConfig& cfg);

}  // namespace radiotwin::config
