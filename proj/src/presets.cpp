#include "seqcls/presets.hpp"

#include "seqcls/errors.hpp"

namespace seqcls {

namespace {

ModelConfig paper_zero_lstm() {
    ModelConfig c;
    c.arch = "lstm";
    c.epochs = 500;
    c.batch_size = 64;
    c.learning_rate = 1e-5;
    c.noise_prob = 0.0;
    c.resize_prob = 0.0;
    c.dropout = 0.0;
    c.recurrent_dropout = 0.0;
    c.lstm_units = 256;
    c.dense_units = 128;
    c.dense_dropout = 0.0;
    c.pad_kind = "zero";
    return c;
}

ModelConfig paper_zero_transformer() {
    ModelConfig c;
    c.arch = "transformer";
    c.epochs = 1000;
    c.batch_size = 32;
    c.learning_rate = 2.5e-5;
    c.noise_prob = 0.3;
    c.noise_std = 0.05;
    c.resize_prob = 0.3;
    c.resize_std = 0.1;
    c.dropout = 0.2;
    c.heads = 4;
    c.head_dim = 256;
    c.blocks = 2;
    c.conv_width = 2;
    c.dense_units = 128;
    c.dense_dropout = 0.0;
    c.pad_kind = "zero";
    return c;
}

ModelConfig paper_zero_xlstm() {
    ModelConfig c;
    c.arch = "xlstm";
    c.epochs = 300;
    c.batch_size = 32;
    c.learning_rate = 2.5e-5;
    c.noise_prob = 0.2;
    c.noise_std = 0.05;
    c.resize_prob = 0.0;
    c.dropout = 0.0;
    c.xl_heads = 4;
    c.xl_head_dim = 256;
    c.xl_blocks = 7;
    c.slstm_positions = {3, 5};
    c.dense_units = 128;
    c.dense_dropout = 0.0;
    c.pad_kind = "zero";
    return c;
}

// Real-padded rows: only the published deltas change.
ModelConfig paper_real_lstm() {
    ModelConfig c = paper_zero_lstm();
    c.noise_prob = 0.2;
    c.noise_std = 0.025;
    c.resize_prob = 0.2;
    c.resize_std = 0.025;
    c.recurrent_dropout = 0.2;
    c.pad_kind = "real";
    return c;
}

ModelConfig paper_real_transformer() {
    ModelConfig c = paper_zero_transformer();
    c.noise_prob = 0.2;
    c.noise_std = 0.05;
    c.resize_prob = 0.2;
    c.resize_std = 0.05;
    c.pad_kind = "real";
    return c;
}

ModelConfig paper_real_xlstm() {
    ModelConfig c = paper_zero_xlstm();
    c.noise_prob = 0.2;
    c.noise_std = 0.01;
    c.resize_prob = 0.2;
    c.resize_std = 0.005;
    c.dropout = 0.2;
    c.pad_kind = "real";
    return c;
}

// Desk-scale rows: same shape, smaller dims, epochs that finish in minutes.
ModelConfig desk_lstm() {
    ModelConfig c = paper_zero_lstm();
    c.epochs = 90;
    c.batch_size = 16;
    c.learning_rate = 1.5e-3;
    c.lstm_units = 32;
    return c;
}

ModelConfig desk_transformer() {
    ModelConfig c = paper_zero_transformer();
    c.epochs = 60;
    c.batch_size = 16;
    c.learning_rate = 3e-3;
    c.head_dim = 8;
    c.blocks = 2;
    return c;
}

ModelConfig desk_xlstm() {
    ModelConfig c = paper_zero_xlstm();
    c.epochs = 50;
    c.batch_size = 16;
    c.learning_rate = 3e-3;
    c.xl_head_dim = 8;
    c.xl_blocks = 3;
    c.slstm_positions = {2};
    return c;
}

ModelConfig desk_real_deltas(ModelConfig c, const std::string& arch) {
    c.pad_kind = "real";
    c.noise_prob = 0.2;
    c.resize_prob = 0.2;
    if (arch == "lstm") {
        c.noise_std = 0.025;
        c.resize_std = 0.025;
        c.recurrent_dropout = 0.2;
    } else if (arch == "transformer") {
        c.noise_std = 0.05;
        c.resize_std = 0.05;
    } else {
        c.noise_std = 0.01;
        c.resize_std = 0.005;
        c.dropout = 0.2;
    }
    return c;
}

} // namespace

std::vector<std::string> preset_names() {
    return {
        "paper-zero-lstm",   "paper-zero-transformer",   "paper-zero-xlstm",
        "paper-real-lstm",   "paper-real-transformer",   "paper-real-xlstm",
        "zero-lstm-desk",    "zero-transformer-desk",    "zero-xlstm-desk",
        "real-lstm-desk",    "real-transformer-desk",    "real-xlstm-desk",
    };
}

ModelConfig preset(const std::string& name) {
    ModelConfig c;
    if (name == "paper-zero-lstm") c = paper_zero_lstm();
    else if (name == "paper-zero-transformer") c = paper_zero_transformer();
    else if (name == "paper-zero-xlstm") c = paper_zero_xlstm();
    else if (name == "paper-real-lstm") c = paper_real_lstm();
    else if (name == "paper-real-transformer") c = paper_real_transformer();
    else if (name == "paper-real-xlstm") c = paper_real_xlstm();
    else if (name == "zero-lstm-desk") c = desk_lstm();
    else if (name == "zero-transformer-desk") c = desk_transformer();
    else if (name == "zero-xlstm-desk") c = desk_xlstm();
    else if (name == "real-lstm-desk") c = desk_real_deltas(desk_lstm(), "lstm");
    else if (name == "real-transformer-desk") c = desk_real_deltas(desk_transformer(), "transformer");
    else if (name == "real-xlstm-desk") c = desk_real_deltas(desk_xlstm(), "xlstm");
    else throw ConfigError("unknown preset: " + name);
    c.preset = name;
    validate(c);
    return c;
}

std::string default_preset_name(const std::string& arch, const std::string& pad_kind) {
    if (arch != "lstm" && arch != "transformer" && arch != "xlstm")
        throw ConfigError("unknown architecture: " + arch);
    const std::string pad = pad_kind.empty() ? "zero" : pad_kind;
    // idle/random share the zero-padded hyperparameter rows
    const std::string base = pad == "real" ? "real" : "zero";
    return base + "-" + arch + "-desk";
}

ModelConfig apply_overrides(ModelConfig base, const std::string& json_text) {
    return model_config_overrides(std::move(base), json_text);
}

} // namespace seqcls
