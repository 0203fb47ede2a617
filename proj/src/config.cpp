#include "seqcls/config.hpp"

#include <json.hpp>

#include "seqcls/errors.hpp"

namespace seqcls {

using json = nlohmann::json;

namespace {

void check_rate(double v, const char* name) {
    if (v < 0.0 || v > 1.0) throw ConfigError(std::string(name) + " must be in [0,1], got " + std::to_string(v));
}

} // namespace

void validate(const ModelConfig& cfg) {
    if (cfg.arch != "lstm" && cfg.arch != "transformer" && cfg.arch != "xlstm")
        throw ConfigError("unknown architecture: " + cfg.arch);
    if (cfg.epochs <= 0) throw ConfigError("epochs must be positive");
    if (cfg.batch_size <= 0) throw ConfigError("batch_size must be positive");
    if (cfg.learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    check_rate(cfg.noise_prob, "noise_prob");
    check_rate(cfg.resize_prob, "resize_prob");
    check_rate(cfg.dropout, "dropout");
    check_rate(cfg.recurrent_dropout, "recurrent_dropout");
    check_rate(cfg.dense_dropout, "dense_dropout");
    if (cfg.noise_std < 0.0 || cfg.resize_std < 0.0) throw ConfigError("augmentation stds must be >= 0");
    if (cfg.lstm_units <= 0 || cfg.heads <= 0 || cfg.head_dim <= 0 || cfg.blocks <= 0 || cfg.conv_width <= 0 ||
        cfg.xl_blocks <= 0 || cfg.xl_heads <= 0 || cfg.xl_head_dim <= 0 || cfg.dense_units <= 0 ||
        cfg.num_classes <= 1)
        throw ConfigError("architecture dimensions must be positive");
    if (cfg.forget_mode != "sigmoid" && cfg.forget_mode != "exp")
        throw ConfigError("forget_mode must be sigmoid|exp, got " + cfg.forget_mode);
    if (cfg.block_style != "residual-prenorm" && cfg.block_style != "bare")
        throw ConfigError("block_style must be residual-prenorm|bare, got " + cfg.block_style);
    if (cfg.pad_kind != "zero" && cfg.pad_kind != "idle" && cfg.pad_kind != "random" && cfg.pad_kind != "real")
        throw ConfigError("pad_kind must be zero|idle|random|real, got " + cfg.pad_kind);
    for (int pos : cfg.slstm_positions)
        if (pos < 1 || pos > cfg.xl_blocks)
            throw ConfigError("slstm position " + std::to_string(pos) + " outside 1.." +
                              std::to_string(cfg.xl_blocks));
    if (cfg.ln_eps <= 0.0) throw ConfigError("ln_eps must be positive");
}

std::string to_json(const ModelConfig& c) {
    json j;
    j["arch"] = c.arch;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["learning_rate"] = c.learning_rate;
    j["noise_prob"] = c.noise_prob;
    j["noise_std"] = c.noise_std;
    j["resize_prob"] = c.resize_prob;
    j["resize_std"] = c.resize_std;
    j["dropout"] = c.dropout;
    j["recurrent_dropout"] = c.recurrent_dropout;
    j["dense_dropout"] = c.dense_dropout;
    j["lstm_units"] = c.lstm_units;
    j["heads"] = c.heads;
    j["head_dim"] = c.head_dim;
    j["blocks"] = c.blocks;
    j["conv_width"] = c.conv_width;
    j["positional_encoding"] = c.positional_encoding;
    j["mask_padding"] = c.mask_padding;
    j["xl_blocks"] = c.xl_blocks;
    j["xl_heads"] = c.xl_heads;
    j["xl_head_dim"] = c.xl_head_dim;
    j["slstm_positions"] = c.slstm_positions;
    j["forget_mode"] = c.forget_mode;
    j["stabilized_gates"] = c.stabilized_gates;
    j["block_style"] = c.block_style;
    j["dense_units"] = c.dense_units;
    j["num_classes"] = c.num_classes;
    j["pad_kind"] = c.pad_kind;
    j["seed"] = c.seed;
    j["preset"] = c.preset;
    j["ln_eps"] = c.ln_eps;
    return j.dump(2);
}

ModelConfig model_config_from_json(const std::string& text) { return model_config_overrides(ModelConfig{}, text); }

ModelConfig model_config_overrides(ModelConfig c, const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config JSON parse error: ") + e.what());
    }
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("arch", c.arch);
    get("epochs", c.epochs);
    get("batch_size", c.batch_size);
    get("learning_rate", c.learning_rate);
    get("noise_prob", c.noise_prob);
    get("noise_std", c.noise_std);
    get("resize_prob", c.resize_prob);
    get("resize_std", c.resize_std);
    get("dropout", c.dropout);
    get("recurrent_dropout", c.recurrent_dropout);
    get("dense_dropout", c.dense_dropout);
    get("lstm_units", c.lstm_units);
    get("heads", c.heads);
    get("head_dim", c.head_dim);
    get("blocks", c.blocks);
    get("conv_width", c.conv_width);
    get("positional_encoding", c.positional_encoding);
    get("mask_padding", c.mask_padding);
    get("xl_blocks", c.xl_blocks);
    get("xl_heads", c.xl_heads);
    get("xl_head_dim", c.xl_head_dim);
    get("slstm_positions", c.slstm_positions);
    get("forget_mode", c.forget_mode);
    get("stabilized_gates", c.stabilized_gates);
    get("block_style", c.block_style);
    get("dense_units", c.dense_units);
    get("num_classes", c.num_classes);
    get("pad_kind", c.pad_kind);
    get("seed", c.seed);
    get("preset", c.preset);
    get("ln_eps", c.ln_eps);
    validate(c);
    return c;
}

} // namespace seqcls
