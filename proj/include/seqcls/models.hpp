#pragma once

#include <memory>
#include <string>
#include <vector>

#include "seqcls/autodiff.hpp"
#include "seqcls/config.hpp"
#include "seqcls/params.hpp"
#include "seqcls/rng.hpp"

namespace seqcls::model {

// One padded window ready for a forward pass. mask[t] == 1 marks real stream
// content (module data or true history), 0 marks synthetic padding (zeros,
// idle samples, random tails, zero backfill). Empty mask = everything real.
struct ForwardInput {
    const Tensor* frames = nullptr; // [T, input_dim]
    std::vector<uint8_t> mask;
};

class Classifier {
  public:
    virtual ~Classifier() = default;

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    int input_dim() const { return input_dim_; }

    // Builds the forward graph; returns the class posterior [1, num_classes].
    // With training == true, dropout masks are drawn from rng (required when
    // any dropout rate is nonzero).
    virtual ad::Value forward(ad::Tape& tape, const BoundParams& bound, const ForwardInput& in, bool training,
                              Rng* rng) const = 0;

    // Eval-mode convenience: fresh tape, no dropout.
    Tensor predict(const ForwardInput& in) const;

    // Compact JSON description (architecture, dims, block layout) stored in
    // checkpoints.
    virtual std::string architecture_description() const = 0;

  protected:
    Classifier(ModelConfig cfg, int input_dim) : cfg_(std::move(cfg)), input_dim_(input_dim) {}

    ModelConfig cfg_;
    ParamStore params_;
    int input_dim_ = 0;
};

// Builds the classifier named by cfg.arch with freshly initialized parameters
// (uniform [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero, LN gains one).
std::unique_ptr<Classifier> build_classifier(const ModelConfig& cfg, int input_dim, uint64_t init_seed);

// Inverted-dropout mask: entries are 0 with probability rate, else 1/(1-rate).
Tensor make_dropout_mask(int rows, int cols, double rate, Rng& rng);

} // namespace seqcls::model
