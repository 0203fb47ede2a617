#include "seqcls/train.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "seqcls/errors.hpp"
#include "seqcls/rng.hpp"

namespace seqcls::train {

using data::PadKind;
using data::PaddedSequence;
using data::TaskModuleSequence;

Adam::Adam(ParamStore& params, double lr, double beta1, double beta2, double eps)
    : params_(params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& [name, t] : params.entries()) {
        m_.push_back(Tensor::zeros(t.rows(), t.cols()));
        v_.push_back(Tensor::zeros(t.rows(), t.cols()));
    }
}

void Adam::step(const std::vector<Tensor>& grads) {
    if (grads.size() != params_.entries().size()) throw ContractError("Adam::step: gradient count mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t p = 0; p < grads.size(); ++p) {
        Tensor& theta = params_.entries()[p].second;
        const Tensor& g = grads[p];
        check_same_shape(theta, g, "Adam::step");
        Tensor& m = m_[p];
        Tensor& v = v_[p];
        for (size_t i = 0; i < theta.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            theta[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

int argmax_class(const Tensor& posterior) {
    int best = 0;
    for (int j = 1; j < posterior.cols(); ++j)
        if (posterior[j] > posterior[best]) best = j;
    return best;
}

std::vector<TaskModuleSequence> modules_of_assemblies(const data::Dataset& ds, const std::vector<int>& ids) {
    std::vector<TaskModuleSequence> out;
    for (int id : ids) {
        auto mods = data::segment(ds.recording(id));
        out.insert(out.end(), std::make_move_iterator(mods.begin()), std::make_move_iterator(mods.end()));
    }
    return out;
}

SequenceSet make_sequence_set(const data::Dataset& ds, const std::vector<int>& ids, int t_max) {
    SequenceSet set;
    set.modules = modules_of_assemblies(ds, ids);
    std::vector<data::Recording> recs;
    for (int id : ids) recs.push_back(ds.recording(id));
    set.idle_pool = data::build_idle_pool(recs);
    set.t_max = t_max;
    return set;
}

std::vector<PaddedSequence> pad_set(const SequenceSet& set, PadKind kind, uint64_t seed) {
    std::vector<PaddedSequence> out;
    out.reserve(set.modules.size());
    for (size_t i = 0; i < set.modules.size(); ++i)
        out.push_back(data::pad(set.modules[i], kind, set.t_max, set.idle_pool, set.modules,
                                Rng::derive(seed, "pad", i)));
    return out;
}

namespace {

struct ItemResult {
    std::vector<Tensor> grads;
    double loss = 0.0;
    bool correct = false;
};

// One padded sequence through forward/backward on its own tape.
ItemResult run_item(const model::Classifier& cls, const PaddedSequence& padded, bool training, uint64_t dropout_seed) {
    ad::Tape tape;
    BoundParams bound = bind_params(tape, cls.params());
    model::ForwardInput in;
    in.frames = &padded.frames;
    in.mask = padded.content_mask();
    Rng dropout_rng(dropout_seed);
    ad::Value posterior = cls.forward(tape, bound, in, training, &dropout_rng);
    ad::Value loss = ad::cross_entropy(posterior, padded.label);

    ItemResult res;
    res.loss = loss.val()[0];
    res.correct = argmax_class(posterior.val()) == padded.label;
    if (training) {
        tape.backward(loss);
        res.grads.reserve(cls.params().count());
        for (const auto& [name, tensor] : cls.params().entries()) res.grads.push_back(tape.grad(bound.at(name)));
    }
    return res;
}

// Items run independently (optionally on jobs threads); reduction order is
// fixed by item index regardless of the thread count.
std::vector<ItemResult> run_items(const model::Classifier& cls, const std::vector<const PaddedSequence*>& items,
                                  bool training, uint64_t seed_base, int jobs) {
    std::vector<ItemResult> results(items.size());
    if (jobs <= 1 || items.size() <= 1) {
        for (size_t i = 0; i < items.size(); ++i)
            results[i] = run_item(cls, *items[i], training, Rng::derive(seed_base, "dropout", i));
        return results;
    }
    std::vector<std::thread> workers;
    std::atomic<size_t> next{0};
    const int nw = std::min<int>(jobs, static_cast<int>(items.size()));
    for (int w = 0; w < nw; ++w)
        workers.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < items.size(); i = next.fetch_add(1))
                results[i] = run_item(cls, *items[i], training, Rng::derive(seed_base, "dropout", i));
        });
    for (auto& t : workers) t.join();
    return results;
}

double clean_accuracy(const model::Classifier& cls, const std::vector<PaddedSequence>& set, double* mean_loss) {
    if (set.empty()) {
        if (mean_loss) *mean_loss = 0.0;
        return 0.0;
    }
    int correct = 0;
    double loss_sum = 0.0;
    for (const PaddedSequence& p : set) {
        model::ForwardInput in;
        in.frames = &p.frames;
        in.mask = p.content_mask();
        Tensor posterior = cls.predict(in);
        if (argmax_class(posterior) == p.label) ++correct;
        loss_sum += -std::log(std::max(posterior[p.label], 1e-12));
    }
    if (mean_loss) *mean_loss = loss_sum / set.size();
    return static_cast<double>(correct) / set.size();
}

} // namespace

FitResult fit(const ModelConfig& cfg, const SequenceSet& train_set, const SequenceSet& val_set, int input_dim,
              uint64_t seed, int jobs, int fold_id) {
    validate(cfg);
    if (train_set.modules.empty()) throw ContractError("fit: empty training set");
    const auto t_start = std::chrono::steady_clock::now();

    auto cls = model::build_classifier(cfg, input_dim, Rng::derive(seed, "init"));
    Adam opt(cls->params(), cfg.learning_rate);
    const PadKind kind = data::pad_kind_from_string(cfg.pad_kind);

    FitResult out;
    out.report.seed = seed;
    out.report.fold_id = fold_id;

    // validation is padded once, deterministically, and never augmented
    std::vector<PaddedSequence> val_padded = pad_set(val_set, kind, Rng::derive(seed, "valpad"));

    const data::AugmentPolicy policy{cfg.noise_prob, cfg.noise_std, cfg.resize_prob, cfg.resize_std};
    std::vector<std::pair<std::string, Tensor>> best_params;
    const size_t n_train = train_set.modules.size();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // epoch-derived shuffle
        std::vector<size_t> order(n_train);
        for (size_t i = 0; i < n_train; ++i) order[i] = i;
        Rng shuffle_rng(Rng::derive(seed, "shuffle", epoch));
        for (size_t i = n_train; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_int(static_cast<int>(i))]);

        double loss_sum = 0.0;
        int correct = 0;
        for (size_t b = 0; b < n_train; b += cfg.batch_size) {
            const size_t b_end = std::min(n_train, b + cfg.batch_size);
            // augment + pad this batch (per-epoch seeds)
            std::vector<PaddedSequence> batch;
            batch.reserve(b_end - b);
            for (size_t i = b; i < b_end; ++i) {
                const size_t idx = order[i];
                const uint64_t item_tag = static_cast<uint64_t>(epoch) * 1000003ull + idx;
                const TaskModuleSequence& m = train_set.modules[idx];
                data::FrameSeq frames = data::apply_augmentation_policy(
                    m.frames, policy, train_set.t_max, Rng::derive(seed, "augment", item_tag),
                    &out.report.train_augment);
                TaskModuleSequence aug = m;
                aug.frames = std::move(frames);
                batch.push_back(data::pad(aug, kind, train_set.t_max, train_set.idle_pool, train_set.modules,
                                          Rng::derive(seed, "padtrain", item_tag)));
            }
            std::vector<const PaddedSequence*> items;
            for (const PaddedSequence& p : batch) items.push_back(&p);
            auto results =
                run_items(*cls, items, true, Rng::derive(seed, "batch", static_cast<uint64_t>(epoch) * 1000003ull + b),
                          jobs);

            // reduce gradients in item order, then average
            std::vector<Tensor> grads;
            grads.reserve(cls->params().count());
            for (const auto& [name, tensor] : cls->params().entries())
                grads.push_back(Tensor::zeros(tensor.rows(), tensor.cols()));
            for (const ItemResult& r : results) {
                if (!std::isfinite(r.loss))
                    throw TrainError("training diverged (non-finite loss) at epoch " + std::to_string(epoch) +
                                     ", seed " + std::to_string(seed));
                loss_sum += r.loss;
                correct += r.correct ? 1 : 0;
                for (size_t p = 0; p < grads.size(); ++p)
                    for (size_t i = 0; i < grads[p].size(); ++i) grads[p][i] += r.grads[p][i];
            }
            const double inv = 1.0 / static_cast<double>(results.size());
            for (Tensor& g : grads)
                for (size_t i = 0; i < g.size(); ++i) g[i] *= inv;
            opt.step(grads);
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = loss_sum / static_cast<double>(n_train);
        m.train_acc = static_cast<double>(correct) / static_cast<double>(n_train);
        m.val_acc = clean_accuracy(*cls, val_padded, &m.val_loss);
        out.report.epochs.push_back(m);

        if (out.report.best_epoch < 0 || m.val_acc > out.report.best_val_acc) {
            out.report.best_epoch = epoch;
            out.report.best_val_acc = m.val_acc;
            best_params = cls->params().entries();
        }
    }

    // restore the best-validation parameters
    for (const auto& [name, tensor] : best_params) cls->params().get(name) = tensor;
    out.best_model = std::move(cls);
    out.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

FoldPlan make_folds(std::vector<int> assembly_ids, int k, uint64_t seed) {
    if (k < 2) throw ContractError("kfold: k must be >= 2");
    if (static_cast<int>(assembly_ids.size()) < k)
        throw ContractError("kfold: k = " + std::to_string(k) + " exceeds pool of " +
                            std::to_string(assembly_ids.size()) + " assemblies");
    std::sort(assembly_ids.begin(), assembly_ids.end());
    Rng rng(Rng::derive(seed, "folds"));
    for (size_t i = assembly_ids.size(); i > 1; --i)
        std::swap(assembly_ids[i - 1], assembly_ids[rng.uniform_int(static_cast<int>(i))]);

    FoldPlan plan;
    plan.val_assemblies.assign(k, {});
    for (size_t i = 0; i < assembly_ids.size(); ++i)
        plan.val_assemblies[i % k].push_back(assembly_ids[i]);
    for (auto& fold : plan.val_assemblies) std::sort(fold.begin(), fold.end());

    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& fold : plan.val_assemblies) {
        for (int id : fold) {
            h ^= static_cast<uint64_t>(id) + 0x9e37;
            h *= 0x100000001b3ull;
        }
        h ^= 0xff;
        h *= 0x100000001b3ull;
    }
    plan.fold_hash = h;
    return plan;
}

KfoldResult kfold(const ModelConfig& cfg, const data::Dataset& ds, const std::vector<int>& pool, int k,
                  uint64_t seed, int jobs) {
    KfoldResult out;
    out.plan = make_folds(pool, k, seed);
    const int t_max = ds.t_max();

    for (int f = 0; f < k; ++f) {
        const std::vector<int>& val_ids = out.plan.val_assemblies[f];
        std::vector<int> train_ids;
        for (int id : pool)
            if (std::find(val_ids.begin(), val_ids.end(), id) == val_ids.end()) train_ids.push_back(id);
        SequenceSet train_set = make_sequence_set(ds, train_ids, t_max);
        SequenceSet val_set = make_sequence_set(ds, val_ids, t_max);
        out.folds.push_back(fit(cfg, train_set, val_set, data::kLandmarkDims, Rng::derive(seed, "fold", f), jobs, f));
    }
    return out;
}

PerOperatorAccuracy evaluate(const std::vector<const model::Classifier*>& fold_models,
                             const std::vector<PaddedSequence>& test) {
    if (fold_models.empty()) throw ContractError("evaluate: no fold models");
    PerOperatorAccuracy out;
    out.n_sequences = static_cast<int>(test.size());

    std::map<int, double> acc_sum;
    std::map<int, int> counts;
    double overall_sum = 0.0, new_sum = 0.0;
    for (const model::Classifier* cls : fold_models) {
        std::map<int, int> correct_by_op, count_by_op;
        int correct_all = 0, correct_new = 0, n_new = 0;
        for (const PaddedSequence& p : test) {
            model::ForwardInput in;
            in.frames = &p.frames;
            in.mask = p.content_mask();
            const bool ok = argmax_class(cls->predict(in)) == p.label;
            count_by_op[p.operator_id] += 1;
            if (ok) {
                correct_by_op[p.operator_id] += 1;
                ++correct_all;
            }
            if (p.operator_id != 1) {
                ++n_new;
                if (ok) ++correct_new;
            }
        }
        for (const auto& [op, cnt] : count_by_op) {
            acc_sum[op] += static_cast<double>(correct_by_op[op]) / cnt;
            counts[op] = cnt;
        }
        overall_sum += test.empty() ? 0.0 : static_cast<double>(correct_all) / test.size();
        new_sum += n_new > 0 ? static_cast<double>(correct_new) / n_new : 0.0;
    }
    const double nf = static_cast<double>(fold_models.size());
    for (const auto& [op, sum] : acc_sum) out.by_operator[op] = sum / nf;
    out.counts = counts;
    out.overall = overall_sum / nf;
    out.new_operators = new_sum / nf;
    return out;
}

void write_metrics_csv(const std::vector<std::pair<int, TrainReport>>& fold_reports, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + tmp);
        out << "fold,epoch,train_loss,train_acc,val_loss,val_acc\n";
        char buf[256];
        for (const auto& [fold, report] : fold_reports) {
            for (const EpochMetrics& m : report.epochs) {
                std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g\n", fold, m.epoch, m.train_loss,
                              m.train_acc, m.val_loss, m.val_acc);
                out << buf;
            }
        }
        if (!out) throw DataError("write failure on " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw DataError("cannot move " + tmp + " into place");
}

} // namespace seqcls::train
