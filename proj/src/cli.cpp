#include "seqcls/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "seqcls/checkpoint.hpp"
#include "seqcls/errors.hpp"
#include "seqcls/presets.hpp"
#include "seqcls/stream.hpp"
#include "seqcls/synth.hpp"
#include "seqcls/train.hpp"

namespace seqcls::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void prepare_out_dir(const std::string& out, bool force) {
    fs::path dir(out);
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) throw ConfigError(out + " exists and is not a directory");
        if (!fs::is_empty(dir) && !force)
            throw ConfigError("output directory " + out + " is not empty (use --force to write anyway)");
    } else {
        fs::create_directories(dir);
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Preset resolution: explicit --preset wins; otherwise the desk preset for
// (arch, pad). --pad always overrides the preset's pad kind; --seed is
// mandatory for stochastic commands and lands in the config.
ModelConfig resolve_config(const std::string& preset_name, const std::string& arch, const std::string& pad,
                           const std::string& config_file, uint64_t seed) {
    ModelConfig cfg;
    if (!preset_name.empty()) {
        cfg = preset(preset_name);
        if (!arch.empty() && arch != cfg.arch)
            throw ConfigError("--arch " + arch + " conflicts with preset " + preset_name);
    } else {
        cfg = preset(default_preset_name(arch.empty() ? "transformer" : arch, pad));
    }
    if (!pad.empty()) cfg.pad_kind = pad;
    if (!config_file.empty()) cfg = apply_overrides(cfg, read_file(config_file));
    cfg.seed = seed;
    validate(cfg);
    return cfg;
}

struct LoadedDataset {
    data::Dataset ds;
    std::vector<data::ModuleMeta> meta;
    int t_max = 0;
};

LoadedDataset load_with_meta(const std::string& dataset_path) {
    LoadedDataset out;
    out.ds = data::load_dataset(dataset_path);
    const fs::path meta_path = fs::path(dataset_path).parent_path() / "modules.csv";
    if (fs::exists(meta_path)) {
        out.meta = data::load_metadata(meta_path.string());
    } else {
        for (const data::Recording& rec : out.ds.recordings)
            for (const auto& seq : data::segment(rec)) {
                data::ModuleMeta m;
                m.assembly_id = seq.assembly_id;
                m.operator_id = seq.operator_id;
                m.module_ordinal = seq.module_ordinal;
                m.label = seq.label;
                m.start_frame = seq.start_frame;
                m.end_frame = seq.start_frame + static_cast<int>(seq.frames.size());
                out.meta.push_back(m);
            }
    }
    out.t_max = out.ds.t_max();
    return out;
}

std::vector<data::PaddedSequence> pad_test_set(const data::Dataset& ds, const std::vector<int>& ids,
                                               data::PadKind kind, int t_max, uint64_t seed) {
    train::SequenceSet set = train::make_sequence_set(ds, ids, t_max);
    return train::pad_set(set, kind, seed);
}

void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + tmp);
        out << text;
        if (!out) throw DataError("write failure on " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw DataError("cannot move " + tmp + " into place");
}

std::vector<std::unique_ptr<model::Classifier>> load_fold_checkpoints(const std::string& dir) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("fold", 0) == 0 && name.size() > 5 && name.substr(name.size() - 5) == ".ckpt")
            files.push_back(entry.path().string());
    }
    if (files.empty()) throw DataError("no fold*.ckpt checkpoints under " + dir);
    std::sort(files.begin(), files.end());
    std::vector<std::unique_ptr<model::Classifier>> out;
    for (const std::string& f : files) out.push_back(train::load_checkpoint(f));
    return out;
}

std::string eval_csv(const train::PerOperatorAccuracy& acc, const std::string& arch) {
    std::ostringstream out;
    out << "arch";
    for (const auto& [op, a] : acc.by_operator) out << ",op" << op;
    out << ",average,new_operators\n" << arch;
    char buf[32];
    for (const auto& [op, a] : acc.by_operator) {
        std::snprintf(buf, sizeof buf, "%.17g", a);
        out << ',' << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", acc.overall);
    out << ',' << buf;
    std::snprintf(buf, sizeof buf, "%.17g", acc.new_operators);
    out << ',' << buf << '\n';
    return out.str();
}

// --- commands ---------------------------------------------------------------

int cmd_generate(const std::string& out_dir, uint64_t seed, int op1, int others, int module_min, int module_max,
                 int classes, bool force) {
    synth::GeneratorSpec spec = synth::default_generator_spec();
    spec.operators[0].assemblies = op1;
    for (size_t i = 1; i < spec.operators.size(); ++i) spec.operators[i].assemblies = others;
    spec.module_len_min = module_min;
    spec.module_len_max = module_max;
    spec.num_classes = classes;
    prepare_out_dir(out_dir, force);

    synth::GeneratedData gen = synth_generate(spec, seed);
    data::save_dataset(gen.dataset, (fs::path(out_dir) / "dataset.csv").string());
    data::save_metadata(gen.metadata, (fs::path(out_dir) / "modules.csv").string());

    std::map<int, int> per_class;
    for (const auto& m : gen.metadata) per_class[m.label] += 1;
    std::cout << "assemblies: " << gen.dataset.recordings.size() << "\n";
    std::cout << "modules per class:";
    for (const auto& [cls, n] : per_class) std::cout << " " << cls << ":" << n;
    std::cout << "\nT_max: " << gen.t_max << "\n";
    return kExitOk;
}

int cmd_train(const std::string& dataset_path, const std::string& out_dir, const ModelConfig& cfg, int folds,
              int jobs, int test_op1, bool dry_run, bool force) {
    if (dry_run) {
        std::cout << to_json(cfg) << "\n";
        return kExitOk;
    }
    prepare_out_dir(out_dir, force);
    LoadedDataset loaded = load_with_meta(dataset_path);
    data::DatasetSplit split = data::split_dataset(loaded.ds, 0, test_op1, cfg.seed);

    train::KfoldResult result = train::kfold(cfg, loaded.ds, split.train_assemblies, folds, cfg.seed, jobs);

    std::vector<std::pair<int, train::TrainReport>> reports;
    json fold_summaries = json::array();
    for (size_t f = 0; f < result.folds.size(); ++f) {
        const auto& fr = result.folds[f];
        train::save_checkpoint(*fr.best_model,
                               (fs::path(out_dir) / ("fold" + std::to_string(f) + ".ckpt")).string());
        reports.emplace_back(static_cast<int>(f), fr.report);
        fold_summaries.push_back({{"fold", f},
                                  {"best_epoch", fr.report.best_epoch},
                                  {"best_val_acc", fr.report.best_val_acc},
                                  {"val_assemblies", result.plan.val_assemblies[f]}});
        std::cout << "fold " << f << ": best epoch " << fr.report.best_epoch << ", val acc "
                  << fr.report.best_val_acc << " (" << fr.report.wall_seconds << "s)\n";
    }
    train::write_metrics_csv(reports, (fs::path(out_dir) / "metrics.csv").string());

    json summary;
    summary["config"] = json::parse(to_json(cfg));
    summary["folds"] = fold_summaries;
    summary["fold_hash"] = result.plan.fold_hash;
    summary["test_assemblies"] = split.test_assemblies;
    write_text_atomic((fs::path(out_dir) / "summary.json").string(), summary.dump(2) + "\n");
    return kExitOk;
}

int cmd_eval(const std::string& dataset_path, const std::string& ckpt_dir, const std::string& out_dir,
             uint64_t seed, const std::string& pad_override, int test_op1, bool force) {
    prepare_out_dir(out_dir, force);
    LoadedDataset loaded = load_with_meta(dataset_path);
    auto models = load_fold_checkpoints(ckpt_dir);
    const ModelConfig& cfg = models[0]->config();
    data::DatasetSplit split = data::split_dataset(loaded.ds, 0, test_op1, seed);
    const data::PadKind kind =
        data::pad_kind_from_string(pad_override.empty() ? cfg.pad_kind : pad_override);
    auto test = pad_test_set(loaded.ds, split.test_assemblies, kind, loaded.t_max, Rng::derive(seed, "testpad"));
    std::vector<const model::Classifier*> views;
    for (const auto& m : models) views.push_back(m.get());
    train::PerOperatorAccuracy acc = train::evaluate(views, test);
    write_text_atomic((fs::path(out_dir) / "eval.csv").string(), eval_csv(acc, cfg.arch));
    std::cout << eval_csv(acc, cfg.arch);
    return kExitOk;
}

int cmd_compare_padding(const std::string& dataset_path, const std::string& out_dir, const std::string& arch,
                        const std::string& config_file, uint64_t seed, int folds, int jobs, int test_op1,
                        bool force) {
    prepare_out_dir(out_dir, force);
    LoadedDataset loaded = load_with_meta(dataset_path);
    data::DatasetSplit split = data::split_dataset(loaded.ds, 0, test_op1, seed);

    std::ostringstream csv;
    csv << "pad,batch_acc,streaming_acc,fold_hash\n";
    char buf[32];
    for (const std::string pad : {"zero", "idle", "random", "real"}) {
        ModelConfig cfg = resolve_config("", arch, pad, config_file, seed);
        train::KfoldResult result = train::kfold(cfg, loaded.ds, split.train_assemblies, folds, seed, jobs);
        std::vector<const model::Classifier*> views;
        for (const auto& fr : result.folds) views.push_back(fr.best_model.get());

        auto batch_test = pad_test_set(loaded.ds, split.test_assemblies, data::pad_kind_from_string(pad),
                                       loaded.t_max, Rng::derive(seed, "testpad"));
        // module-final streaming windows are exactly the real-padded windows
        auto stream_test = pad_test_set(loaded.ds, split.test_assemblies, data::PadKind::kReal, loaded.t_max,
                                        Rng::derive(seed, "testpad"));
        const double batch_acc = train::evaluate(views, batch_test).overall;
        const double stream_acc = train::evaluate(views, stream_test).overall;
        csv << pad << ',';
        std::snprintf(buf, sizeof buf, "%.17g", batch_acc);
        csv << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", stream_acc);
        csv << buf << ',' << result.plan.fold_hash << '\n';
        std::cout << pad << ": batch " << batch_acc << ", streaming " << stream_acc << "\n";
    }
    write_text_atomic((fs::path(out_dir) / "compare_padding.csv").string(), csv.str());
    return kExitOk;
}

int cmd_replay(const std::string& dataset_path, const std::string& ckpt_path, int assembly,
               const std::string& out_dir, bool paced, bool force) {
    prepare_out_dir(out_dir, force);
    LoadedDataset loaded = load_with_meta(dataset_path);
    auto model = train::load_checkpoint(ckpt_path);
    stream::ReplayResult trace = stream::replay(loaded.ds.recording(assembly), loaded.meta, *model, loaded.t_max,
                                                paced ? data::kFrameRateHz : 0.0);
    stream::write_trace_csv(trace, (fs::path(out_dir) / ("trace_" + std::to_string(assembly) + ".csv")).string());
    std::cout << "trace rows: " << trace.rows.size() << "\n";
    return kExitOk;
}

int cmd_curve(const std::string& dataset_path, const std::string& ckpt_path, const std::string& trace_path,
              const std::string& out_dir, int bins, uint64_t seed, int test_op1, bool force) {
    prepare_out_dir(out_dir, force);
    LoadedDataset loaded = load_with_meta(dataset_path);
    stream::ProportionCurve curve;
    if (!trace_path.empty()) {
        stream::ReplayResult trace = stream::read_trace_csv(trace_path);
        // trace files carry no assembly id; match by frame count
        for (const data::Recording& rec : loaded.ds.recordings)
            if (rec.frames.size() == trace.rows.size()) {
                trace.assembly_id = rec.assembly_id;
                break;
            }
        if (trace.assembly_id == 0) throw DataError("trace does not match any recording in the dataset");
        curve = stream::curve_from_traces({trace}, loaded.meta, bins);
    } else {
        if (ckpt_path.empty()) throw ConfigError("curve: need --checkpoint or --trace");
        auto model = train::load_checkpoint(ckpt_path);
        data::DatasetSplit split = data::split_dataset(loaded.ds, 0, test_op1, seed);
        curve = stream::proportion_curve(*model, loaded.ds, loaded.meta, split.test_assemblies, loaded.t_max, bins);
    }
    stream::write_curve_csv(curve, (fs::path(out_dir) / "curve.csv").string());
    for (size_t b = 0; b < curve.accuracy.size(); ++b)
        std::cout << "[" << curve.bin_lo[b] << "," << curve.bin_hi[b] << ") acc " << curve.accuracy[b] << " n "
                  << curve.count[b] << "\n";
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"sequence classifiers for hand-landmark task recognition"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "synthesize a labeled landmark dataset");
    std::string gen_out;
    uint64_t gen_seed = 0;
    int gen_op1 = 14, gen_others = 2, gen_mmin = 40, gen_mmax = 70, gen_classes = 6;
    bool gen_force = false;
    gen->add_option("--out", gen_out)->required();
    gen->add_option("--seed", gen_seed)->required();
    gen->add_option("--op1", gen_op1);
    gen->add_option("--others", gen_others);
    gen->add_option("--module-min", gen_mmin);
    gen->add_option("--module-max", gen_mmax);
    gen->add_option("--classes", gen_classes);
    gen->add_flag("--force", gen_force);

    // train
    auto* tr = app.add_subcommand("train", "k-fold training run");
    std::string tr_dataset, tr_out, tr_preset, tr_arch, tr_pad, tr_config;
    uint64_t tr_seed = 0;
    int tr_folds = 5, tr_jobs = 1, tr_test_op1 = 2;
    bool tr_dry = false, tr_force = false;
    tr->add_option("--dataset", tr_dataset)->required();
    tr->add_option("--out", tr_out);
    tr->add_option("--preset", tr_preset);
    tr->add_option("--arch", tr_arch);
    tr->add_option("--pad", tr_pad);
    tr->add_option("--config", tr_config);
    tr->add_option("--seed", tr_seed)->required();
    tr->add_option("--folds", tr_folds);
    tr->add_option("--jobs", tr_jobs);
    tr->add_option("--test-op1", tr_test_op1);
    tr->add_flag("--dry-run", tr_dry);
    tr->add_flag("--force", tr_force);

    // eval
    auto* ev = app.add_subcommand("eval", "per-operator accuracy table");
    std::string ev_dataset, ev_ckpts, ev_out, ev_pad;
    uint64_t ev_seed = 0;
    int ev_test_op1 = 2;
    bool ev_force = false;
    ev->add_option("--dataset", ev_dataset)->required();
    ev->add_option("--checkpoints", ev_ckpts)->required();
    ev->add_option("--out", ev_out)->required();
    ev->add_option("--pad", ev_pad);
    ev->add_option("--seed", ev_seed)->required();
    ev->add_option("--test-op1", ev_test_op1);
    ev->add_flag("--force", ev_force);

    // compare-padding
    auto* cp = app.add_subcommand("compare-padding", "train one config under all four pad kinds");
    std::string cp_dataset, cp_out, cp_arch = "transformer", cp_config;
    uint64_t cp_seed = 0;
    int cp_folds = 5, cp_jobs = 1, cp_test_op1 = 2;
    bool cp_force = false;
    cp->add_option("--dataset", cp_dataset)->required();
    cp->add_option("--out", cp_out)->required();
    cp->add_option("--arch", cp_arch);
    cp->add_option("--config", cp_config);
    cp->add_option("--seed", cp_seed)->required();
    cp->add_option("--folds", cp_folds);
    cp->add_option("--jobs", cp_jobs);
    cp->add_option("--test-op1", cp_test_op1);
    cp->add_flag("--force", cp_force);

    // replay
    auto* rp = app.add_subcommand("replay", "stream one recording through a checkpoint");
    std::string rp_dataset, rp_ckpt, rp_out;
    int rp_assembly = 0;
    bool rp_paced = false, rp_force = false;
    rp->add_option("--dataset", rp_dataset)->required();
    rp->add_option("--checkpoint", rp_ckpt)->required();
    rp->add_option("--assembly", rp_assembly)->required();
    rp->add_option("--out", rp_out)->required();
    rp->add_flag("--paced", rp_paced);
    rp->add_flag("--force", rp_force);

    // curve
    auto* cv = app.add_subcommand("curve", "accuracy vs proportion-observed curve");
    std::string cv_dataset, cv_ckpt, cv_trace, cv_out;
    uint64_t cv_seed = 0;
    int cv_bins = 10, cv_test_op1 = 2;
    bool cv_force = false;
    cv->add_option("--dataset", cv_dataset)->required();
    cv->add_option("--checkpoint", cv_ckpt);
    cv->add_option("--trace", cv_trace);
    cv->add_option("--out", cv_out)->required();
    cv->add_option("--bins", cv_bins);
    cv->add_option("--seed", cv_seed);
    cv->add_option("--test-op1", cv_test_op1);
    cv->add_flag("--force", cv_force);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) { // --help
            std::cout << app.help();
            return kExitOk;
        }
        std::cerr << e.what() << "\n";
        return kExitConfigError;
    }

    try {
        if (gen->parsed())
            return cmd_generate(gen_out, gen_seed, gen_op1, gen_others, gen_mmin, gen_mmax, gen_classes, gen_force);
        if (tr->parsed()) {
            ModelConfig cfg = resolve_config(tr_preset, tr_arch, tr_pad, tr_config, tr_seed);
            if (!tr_dry && tr_out.empty()) throw ConfigError("train: --out is required unless --dry-run");
            return cmd_train(tr_dataset, tr_out, cfg, tr_folds, tr_jobs, tr_test_op1, tr_dry, tr_force);
        }
        if (ev->parsed()) return cmd_eval(ev_dataset, ev_ckpts, ev_out, ev_seed, ev_pad, ev_test_op1, ev_force);
        if (cp->parsed())
            return cmd_compare_padding(cp_dataset, cp_out, cp_arch, cp_config, cp_seed, cp_folds, cp_jobs,
                                       cp_test_op1, cp_force);
        if (rp->parsed()) return cmd_replay(rp_dataset, rp_ckpt, rp_assembly, rp_out, rp_paced, rp_force);
        if (cv->parsed())
            return cmd_curve(cv_dataset, cv_ckpt, cv_trace, cv_out, cv_bins, cv_seed, cv_test_op1, cv_force);
        throw ConfigError("no subcommand");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const TrainError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return kExitTrainError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternalError;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

} // namespace seqcls::cli
