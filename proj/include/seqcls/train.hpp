#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "seqcls/config.hpp"
#include "seqcls/data.hpp"
#include "seqcls/models.hpp"

namespace seqcls::train {

// Adam over a ParamStore; moment buffers align with store order. A step with
// lr == 0 leaves parameters bitwise unchanged.
class Adam {
  public:
    Adam(ParamStore& params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    // grads must align with the store entries (same order, same shapes);
    void step(const std::vector<Tensor>& grads);

    double learning_rate() const { return lr_; }

  private:
    ParamStore& params_;
    std::vector<Tensor> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
};

// Task modules plus the padding context they need: the idle pool for idle
// padding and the donor corpus for random padding.
struct SequenceSet {
    std::vector<data::TaskModuleSequence> modules;
    data::FrameSeq idle_pool;
    int t_max = 0;
};

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0, train_acc = 0;
    double val_loss = 0, val_acc = 0;
};

struct TrainReport {
    std::vector<EpochMetrics> epochs;
    int best_epoch = -1; // epoch with the highest val accuracy (earliest on ties)
    double best_val_acc = 0.0;
    double wall_seconds = 0.0;
    uint64_t seed = 0;
    int fold_id = 0;
    data::AugmentStats train_augment;
    data::AugmentStats eval_augment; // audited to stay identically zero
};

struct FitResult {
    TrainReport report;
    std::unique_ptr<model::Classifier> best_model; // parameters from the best epoch
};

// Minibatch Adam with the augmentation policy applied per epoch to the train
// set only; training sequences are re-padded each epoch (idle/random draws
// vary per epoch), validation is padded once with a fixed seed and evaluated
// clean. Deterministic in (cfg, sets, seed): reruns give identical reports.
// jobs > 1 parallelizes batch items; the gradient reduction order is fixed by
// item index, so results do not depend on jobs. Throws TrainError when the
// loss goes non-finite.
FitResult fit(const ModelConfig& cfg, const SequenceSet& train_set, const SequenceSet& val_set, int input_dim,
              uint64_t seed, int jobs = 1, int fold_id = 0);

// Assembly-level folds: fold i takes every ~k-th assembly of the shuffled
// pool as validation. Deterministic in (seed, ids) only.
struct FoldPlan {
    std::vector<std::vector<int>> val_assemblies; // per fold
    uint64_t fold_hash = 0;                       // audit: equal plans hash equal
};

FoldPlan make_folds(std::vector<int> assembly_ids, int k, uint64_t seed);

struct KfoldResult {
    std::vector<FitResult> folds;
    FoldPlan plan;
};

// Runs fit() once per fold over the operator-1 pool of the dataset.
KfoldResult kfold(const ModelConfig& cfg, const data::Dataset& ds, const std::vector<int>& pool, int k,
                  uint64_t seed, int jobs);

// argmax with ties broken toward the lowest class index.
int argmax_class(const Tensor& posterior);

struct PerOperatorAccuracy {
    std::map<int, double> by_operator; // averaged across folds
    std::map<int, int> counts;         // sequences per operator
    double overall = 0.0;
    double new_operators = 0.0; // operators != 1
    int n_sequences = 0;
};

// Per-fold accuracies averaged across fold models (not pooled predictions).
PerOperatorAccuracy evaluate(const std::vector<const model::Classifier*>& fold_models,
                             const std::vector<data::PaddedSequence>& test);

// Helpers shared by the CLI and the acceptance suite.
std::vector<data::TaskModuleSequence> modules_of_assemblies(const data::Dataset& ds, const std::vector<int>& ids);
SequenceSet make_sequence_set(const data::Dataset& ds, const std::vector<int>& ids, int t_max);
std::vector<data::PaddedSequence> pad_set(const SequenceSet& set, data::PadKind kind, uint64_t seed);

void write_metrics_csv(const std::vector<std::pair<int, TrainReport>>& fold_reports, const std::string& path);

} // namespace seqcls::train
