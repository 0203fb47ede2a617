#include "seqcls/models.hpp"

#include <json.hpp>

#include "seqcls/attention.hpp"
#include "seqcls/cells.hpp"
#include "seqcls/errors.hpp"
#include "seqcls/xlstm.hpp"

namespace seqcls::model {

using namespace seqcls::ad;
using json = nlohmann::json;

Tensor make_dropout_mask(int rows, int cols, double rate, Rng& rng) {
    Tensor mask(rows, cols);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (size_t i = 0; i < mask.size(); ++i) mask[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    return mask;
}

Tensor Classifier::predict(const ForwardInput& in) const {
    Tape tape;
    BoundParams bound = bind_params(tape, params_);
    return forward(tape, bound, in, false, nullptr).val();
}

namespace {

void check_input(const ForwardInput& in, int input_dim) {
    if (!in.frames) throw ContractError("forward: null input");
    if (in.frames->cols() != input_dim)
        throw ShapeError("forward: input width " + std::to_string(in.frames->cols()) + " != model input dim " +
                         std::to_string(input_dim));
    if (!in.mask.empty() && static_cast<int>(in.mask.size()) != in.frames->rows())
        throw ShapeError("forward: mask length " + std::to_string(in.mask.size()) + " vs sequence length " +
                         std::to_string(in.frames->rows()));
}

// dense(dense_units) + ReLU (+ dropout) -> logits -> softmax
Value readout_head(const BoundParams& bound, Value pooled, const ModelConfig& cfg, bool training, Rng* rng) {
    Value hidden = relu(add_rowvec(matmul(pooled, bound.at("head.w1")), bound.at("head.b1")));
    if (training && cfg.dense_dropout > 0.0) {
        if (!rng) throw ContractError("forward: dropout requires an rng in training mode");
        hidden = dropout(hidden, make_dropout_mask(1, cfg.dense_units, cfg.dense_dropout, *rng));
    }
    Value logits = add_rowvec(matmul(hidden, bound.at("head.w2")), bound.at("head.b2"));
    return softmax_rows(logits);
}

void add_head_params(ParamStore& ps, int feature_dim, const ModelConfig& cfg, Rng& rng) {
    ps.add("head.w1", Tensor::init_uniform(feature_dim, cfg.dense_units, feature_dim, rng));
    ps.add("head.b1", Tensor::zeros(1, cfg.dense_units));
    ps.add("head.w2", Tensor::init_uniform(cfg.dense_units, cfg.num_classes, cfg.dense_units, rng));
    ps.add("head.b2", Tensor::zeros(1, cfg.num_classes));
}

// --- LSTM ---------------------------------------------------------------------

class LstmClassifier final : public Classifier {
  public:
    LstmClassifier(ModelConfig cfg, int input_dim, uint64_t init_seed) : Classifier(std::move(cfg), input_dim) {
        Rng rng(init_seed);
        const int d = input_dim_, h = cfg_.lstm_units;
        for (const char* g : {"f", "i", "o", "c"})
            params_.add(std::string("lstm.w") + g, Tensor::init_uniform(d, h, d, rng));
        for (const char* g : {"f", "i", "o", "c"})
            params_.add(std::string("lstm.r") + g, Tensor::init_uniform(h, h, h, rng));
        for (const char* g : {"f", "i", "o", "c"}) params_.add(std::string("lstm.b") + g, Tensor::zeros(1, h));
        add_head_params(params_, h, cfg_, rng);
    }

    Value forward(Tape& tape, const BoundParams& bound, const ForwardInput& in, bool training,
                  Rng* rng) const override {
        check_input(in, input_dim_);
        cells::LstmParams p{bound.at("lstm.wf"), bound.at("lstm.wi"), bound.at("lstm.wo"), bound.at("lstm.wc"),
                            bound.at("lstm.rf"), bound.at("lstm.ri"), bound.at("lstm.ro"), bound.at("lstm.rc"),
                            bound.at("lstm.bf"), bound.at("lstm.bi"), bound.at("lstm.bo"), bound.at("lstm.bc")};
        cells::LstmUnrollOptions unroll_opt;
        if (training && (cfg_.dropout > 0.0 || cfg_.recurrent_dropout > 0.0)) {
            if (!rng) throw ContractError("forward: dropout requires an rng in training mode");
            if (cfg_.dropout > 0.0)
                unroll_opt.input_dropout_mask = make_dropout_mask(1, input_dim_, cfg_.dropout, *rng);
            if (cfg_.recurrent_dropout > 0.0)
                unroll_opt.recurrent_dropout_mask = make_dropout_mask(1, cfg_.lstm_units, cfg_.recurrent_dropout, *rng);
        }
        Value xs = tape.leaf(*in.frames);
        auto res = cells::lstm_unroll(p, xs, cells::lstm_zero_state(tape, cfg_.lstm_units), unroll_opt);
        // Padding is a prefix, so the last position is always module data.
        Value last = slice_rows(res.hs, in.frames->rows() - 1, in.frames->rows());
        return readout_head(bound, last, cfg_, training, rng);
    }

    std::string architecture_description() const override {
        json j{{"arch", "lstm"}, {"input_dim", input_dim_}, {"units", cfg_.lstm_units},
               {"dense_units", cfg_.dense_units}, {"num_classes", cfg_.num_classes}};
        return j.dump();
    }
};

// --- Transformer ----------------------------------------------------------------

class TransformerClassifier final : public Classifier {
  public:
    TransformerClassifier(ModelConfig cfg, int input_dim, uint64_t init_seed)
        : Classifier(std::move(cfg), input_dim) {
        Rng rng(init_seed);
        const int d = input_dim_; // model width stays at the feature width
        const int dk = cfg_.head_dim;
        for (int b = 0; b < cfg_.blocks; ++b) {
            const std::string pre = "enc" + std::to_string(b) + ".";
            for (int h = 0; h < cfg_.heads; ++h) {
                const std::string hp = pre + "h" + std::to_string(h) + ".";
                params_.add(hp + "wq", Tensor::init_uniform(d, dk, d, rng));
                params_.add(hp + "wk", Tensor::init_uniform(d, dk, d, rng));
                params_.add(hp + "wv", Tensor::init_uniform(d, dk, d, rng));
            }
            params_.add(pre + "wo", Tensor::init_uniform(cfg_.heads * dk, d, cfg_.heads * dk, rng));
            for (int t = 0; t < cfg_.conv_width; ++t)
                params_.add(pre + "conv" + std::to_string(t) + ".w", Tensor::init_uniform(d, dk, d, rng));
            params_.add(pre + "conv.b", Tensor::zeros(1, dk));
            params_.add(pre + "proj.w", Tensor::init_uniform(dk, d, dk, rng));
            params_.add(pre + "proj.b", Tensor::zeros(1, d));
            params_.add(pre + "ln1.g", Tensor::full(1, d, 1.0));
            params_.add(pre + "ln1.b", Tensor::zeros(1, d));
            params_.add(pre + "ln2.g", Tensor::full(1, d, 1.0));
            params_.add(pre + "ln2.b", Tensor::zeros(1, d));
        }
        add_head_params(params_, d, cfg_, rng);
    }

    Value forward(Tape& tape, const BoundParams& bound, const ForwardInput& in, bool training,
                  Rng* rng) const override {
        check_input(in, input_dim_);
        const int t_len = in.frames->rows();
        std::vector<uint8_t> mask = cfg_.mask_padding ? in.mask : std::vector<uint8_t>{};

        Value x = tape.leaf(*in.frames);
        if (cfg_.positional_encoding) x = attn::positional_encode(x);

        for (int b = 0; b < cfg_.blocks; ++b) {
            const std::string pre = "enc" + std::to_string(b) + ".";
            attn::EncoderBlockParams blk;
            blk.attention.heads = cfg_.heads;
            blk.attention.d_k = cfg_.head_dim;
            for (int h = 0; h < cfg_.heads; ++h) {
                const std::string hp = pre + "h" + std::to_string(h) + ".";
                blk.attention.wq.push_back(bound.at(hp + "wq"));
                blk.attention.wk.push_back(bound.at(hp + "wk"));
                blk.attention.wv.push_back(bound.at(hp + "wv"));
            }
            blk.attention.wo = bound.at(pre + "wo");
            for (int t = 0; t < cfg_.conv_width; ++t)
                blk.ffn.conv_w.push_back(bound.at(pre + "conv" + std::to_string(t) + ".w"));
            blk.ffn.conv_b = bound.at(pre + "conv.b");
            blk.ffn.proj_w = bound.at(pre + "proj.w");
            blk.ffn.proj_b = bound.at(pre + "proj.b");
            blk.ln1_gain = bound.at(pre + "ln1.g");
            blk.ln1_bias = bound.at(pre + "ln1.b");
            blk.ln2_gain = bound.at(pre + "ln2.g");
            blk.ln2_bias = bound.at(pre + "ln2.b");
            blk.ln_eps = cfg_.ln_eps;

            attn::EncoderBlockOptions opt;
            Tensor mask_attn, mask_ffn;
            if (training && cfg_.dropout > 0.0) {
                if (!rng) throw ContractError("forward: dropout requires an rng in training mode");
                mask_attn = make_dropout_mask(t_len, input_dim_, cfg_.dropout, *rng);
                mask_ffn = make_dropout_mask(t_len, input_dim_, cfg_.dropout, *rng);
                opt.dropout_mask_attn = &mask_attn;
                opt.dropout_mask_ffn = &mask_ffn;
            }
            x = attn::encoder_block(blk, x, mask, opt);
        }
        Value pooled = mean_rows_masked(x, mask);
        return readout_head(bound, pooled, cfg_, training, rng);
    }

    std::string architecture_description() const override {
        json j{{"arch", "transformer"},    {"input_dim", input_dim_},
               {"heads", cfg_.heads},      {"head_dim", cfg_.head_dim},
               {"blocks", cfg_.blocks},    {"conv_width", cfg_.conv_width},
               {"positional_encoding", cfg_.positional_encoding},
               {"mask_padding", cfg_.mask_padding},
               {"dense_units", cfg_.dense_units}, {"num_classes", cfg_.num_classes}};
        return j.dump();
    }
};

// --- xLSTM ----------------------------------------------------------------------

class XlstmClassifier final : public Classifier {
  public:
    XlstmClassifier(ModelConfig cfg, int input_dim, uint64_t init_seed) : Classifier(std::move(cfg), input_dim) {
        kinds_ = xlstm::block_kinds(cfg_.xl_blocks, cfg_.slstm_positions);
        Rng rng(init_seed);
        const int d = cfg_.xl_model_dim();
        const int heads = cfg_.xl_heads;
        const int hd = cfg_.xl_head_dim;
        params_.add("embed.w", Tensor::init_uniform(input_dim_, d, input_dim_, rng));
        params_.add("embed.b", Tensor::zeros(1, d));
        for (int b = 0; b < cfg_.xl_blocks; ++b) {
            const std::string pre = "blk" + std::to_string(b) + ".";
            if (residual()) {
                params_.add(pre + "ln.g", Tensor::full(1, d, 1.0));
                params_.add(pre + "ln.b", Tensor::zeros(1, d));
            }
            params_.add(pre + "in.w", Tensor::init_uniform(d, d, d, rng));
            params_.add(pre + "in.b", Tensor::zeros(1, d));
            if (kinds_[b] == 's') {
                for (const char* g : {"f", "i", "o", "c"})
                    params_.add(pre + "s.w" + std::string(g), Tensor::init_uniform(d, d, d, rng));
                for (const char* g : {"f", "i", "o", "c"})
                    for (int h = 0; h < heads; ++h)
                        params_.add(pre + "s.r" + std::string(g) + std::to_string(h),
                                    Tensor::init_uniform(hd, hd, hd, rng));
                for (const char* g : {"f", "i", "o", "c"})
                    params_.add(pre + "s.b" + std::string(g), Tensor::zeros(1, d));
            } else {
                for (const char* g : {"q", "k", "v", "o"})
                    params_.add(pre + "m.w" + std::string(g), Tensor::init_uniform(d, d, d, rng));
                for (const char* g : {"q", "k", "v", "o"})
                    params_.add(pre + "m.b" + std::string(g), Tensor::zeros(1, d));
                params_.add(pre + "m.wi", Tensor::init_uniform(d, 1, d, rng));
                params_.add(pre + "m.wf", Tensor::init_uniform(d, 1, d, rng));
                params_.add(pre + "m.bi", Tensor::zeros(1, 1));
                params_.add(pre + "m.bf", Tensor::zeros(1, 1));
            }
            params_.add(pre + "out.w", Tensor::init_uniform(d, d, d, rng));
            params_.add(pre + "out.b", Tensor::zeros(1, d));
        }
        add_head_params(params_, d, cfg_, rng);
    }

    Value forward(Tape& tape, const BoundParams& bound, const ForwardInput& in, bool training,
                  Rng* rng) const override {
        check_input(in, input_dim_);
        const int t_len = in.frames->rows();
        const int d = cfg_.xl_model_dim();
        const cells::ForgetMode fmode = cells::forget_mode_from_string(cfg_.forget_mode);

        Value x = add_rowvec(matmul(tape.leaf(*in.frames), bound.at("embed.w")), bound.at("embed.b"));
        for (int b = 0; b < cfg_.xl_blocks; ++b) {
            const std::string pre = "blk" + std::to_string(b) + ".";
            Value y = x;
            if (residual()) y = layer_norm_rows(y, bound.at(pre + "ln.g"), bound.at(pre + "ln.b"), cfg_.ln_eps);
            y = add_rowvec(matmul(y, bound.at(pre + "in.w")), bound.at(pre + "in.b"));

            Value cell_out;
            if (kinds_[b] == 's') {
                cells::SLstmParams p;
                p.heads = cfg_.xl_heads;
                p.wf = bound.at(pre + "s.wf");
                p.wi = bound.at(pre + "s.wi");
                p.wo = bound.at(pre + "s.wo");
                p.wc = bound.at(pre + "s.wc");
                for (int h = 0; h < cfg_.xl_heads; ++h) {
                    p.rf.push_back(bound.at(pre + "s.rf" + std::to_string(h)));
                    p.ri.push_back(bound.at(pre + "s.ri" + std::to_string(h)));
                    p.ro.push_back(bound.at(pre + "s.ro" + std::to_string(h)));
                    p.rc.push_back(bound.at(pre + "s.rc" + std::to_string(h)));
                }
                p.bf = bound.at(pre + "s.bf");
                p.bi = bound.at(pre + "s.bi");
                p.bo = bound.at(pre + "s.bo");
                p.bc = bound.at(pre + "s.bc");
                cell_out = cells::slstm_unroll(p, y, cells::slstm_zero_state(tape, d),
                                               {fmode, cfg_.stabilized_gates})
                               .hs;
            } else {
                cells::MLstmParams p{bound.at(pre + "m.wq"), bound.at(pre + "m.wk"), bound.at(pre + "m.wv"),
                                     bound.at(pre + "m.bq"), bound.at(pre + "m.bk"), bound.at(pre + "m.bv"),
                                     bound.at(pre + "m.wi"), bound.at(pre + "m.wf"), bound.at(pre + "m.bi"),
                                     bound.at(pre + "m.bf"), bound.at(pre + "m.wo"), bound.at(pre + "m.bo")};
                cell_out = cells::mlstm_unroll(p, y, cells::mlstm_zero_state(tape, d), {fmode}).hs;
            }

            Value z = add_rowvec(matmul(cell_out, bound.at(pre + "out.w")), bound.at(pre + "out.b"));
            if (training && cfg_.dropout > 0.0) {
                if (!rng) throw ContractError("forward: dropout requires an rng in training mode");
                z = dropout(z, make_dropout_mask(t_len, d, cfg_.dropout, *rng));
            }
            x = residual() ? add(x, z) : z;
        }
        Value pooled = mean_rows_masked(x, in.mask);
        return readout_head(bound, pooled, cfg_, training, rng);
    }

    std::string architecture_description() const override {
        json j{{"arch", "xlstm"},
               {"input_dim", input_dim_},
               {"model_dim", cfg_.xl_model_dim()},
               {"heads", cfg_.xl_heads},
               {"head_dim", cfg_.xl_head_dim},
               {"blocks", xlstm::kinds_to_string(kinds_)},
               {"forget_mode", cfg_.forget_mode},
               {"block_style", cfg_.block_style},
               {"dense_units", cfg_.dense_units},
               {"num_classes", cfg_.num_classes}};
        return j.dump();
    }

  private:
    bool residual() const { return cfg_.block_style == "residual-prenorm"; }

    std::vector<char> kinds_;
};

} // namespace

std::unique_ptr<Classifier> build_classifier(const ModelConfig& cfg, int input_dim, uint64_t init_seed) {
    validate(cfg);
    if (cfg.arch == "lstm") return std::make_unique<LstmClassifier>(cfg, input_dim, init_seed);
    if (cfg.arch == "transformer") return std::make_unique<TransformerClassifier>(cfg, input_dim, init_seed);
    if (cfg.arch == "xlstm") return std::make_unique<XlstmClassifier>(cfg, input_dim, init_seed);
    throw ConfigError("unknown architecture: " + cfg.arch + " (expected lstm|transformer|xlstm)");
}

} // namespace seqcls::model
