#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace seqcls {

// Architecture selector plus the full hyperparameter surface of the three
// classifiers. Presets fill this struct; the CLI can override single fields.
struct ModelConfig {
    std::string arch = "transformer"; // lstm | transformer | xlstm

    // training
    int epochs = 60;
    int batch_size = 16;
    double learning_rate = 1e-3;
    double noise_prob = 0.0;
    double noise_std = 0.0;
    double resize_prob = 0.0;
    double resize_std = 0.0;

    // regularization
    double dropout = 0.0;
    double recurrent_dropout = 0.0; // lstm only
    double dense_dropout = 0.0;

    // lstm
    int lstm_units = 32;

    // transformer
    int heads = 4;
    int head_dim = 8;
    int blocks = 2;
    int conv_width = 2;
    bool positional_encoding = true;
    bool mask_padding = true;

    // xlstm
    int xl_blocks = 3;
    int xl_heads = 4;
    int xl_head_dim = 8;
    std::vector<int> slstm_positions = {2}; // 1-based block indices
    std::string forget_mode = "sigmoid";    // sigmoid | exp
    bool stabilized_gates = true;
    std::string block_style = "residual-prenorm"; // residual-prenorm | bare

    // readout
    int dense_units = 128;
    int num_classes = 6;

    std::string pad_kind = "zero"; // zero | idle | random | real
    uint64_t seed = 1;
    std::string preset; // provenance label, informational

    double ln_eps = 1e-5;

    int xl_model_dim() const { return xl_heads * xl_head_dim; }
};

// Throws ConfigError on out-of-range fields.
void validate(const ModelConfig& cfg);

std::string to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& json_text);
// Fields present in json_text replace the matching base fields.
ModelConfig model_config_overrides(ModelConfig base, const std::string& json_text);

} // namespace seqcls
