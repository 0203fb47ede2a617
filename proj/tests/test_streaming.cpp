#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "seqcls/errors.hpp"
#include "seqcls/rng.hpp"
#include "seqcls/stream.hpp"
#include "seqcls/synth.hpp"
#include "seqcls/train.hpp"

using namespace seqcls;
using namespace seqcls::stream;
using data::kLandmarkDims;

namespace {

data::LandmarkFrame class_frame(int cls, int index, Rng& rng) {
    data::LandmarkFrame f;
    f.frame_index = index;
    f.coords.resize(kLandmarkDims);
    for (int c = 0; c < kLandmarkDims; ++c)
        f.coords[c] = (cls >= 0 && c % 6 == cls ? 0.8 : 0.1) + rng.gaussian(0.0, 0.02);
    return f;
}

// recording with labeled runs whose frames encode the class
data::Recording class_recording(int assembly, const std::vector<std::pair<int, int>>& runs, uint64_t seed) {
    Rng rng(seed);
    data::Recording rec;
    rec.assembly_id = assembly;
    rec.operator_id = 1;
    int idx = 0;
    for (auto [label, len] : runs)
        for (int i = 0; i < len; ++i) {
            rec.frames.push_back(class_frame(label, idx++, rng));
            rec.labels.push_back(label);
        }
    return rec;
}

std::vector<data::ModuleMeta> meta_of(const data::Recording& rec) {
    std::vector<data::ModuleMeta> meta;
    for (const auto& m : data::segment(rec)) {
        data::ModuleMeta mm;
        mm.assembly_id = m.assembly_id;
        mm.operator_id = m.operator_id;
        mm.module_ordinal = m.module_ordinal;
        mm.label = m.label;
        mm.start_frame = m.start_frame;
        mm.end_frame = m.start_frame + static_cast<int>(m.frames.size());
        meta.push_back(mm);
    }
    return meta;
}

ModelConfig tiny_config(const std::string& arch) {
    ModelConfig cfg;
    cfg.arch = arch;
    cfg.lstm_units = 6;
    cfg.heads = 2;
    cfg.head_dim = 3;
    cfg.blocks = 1;
    cfg.xl_blocks = 2;
    cfg.xl_heads = 1;
    cfg.xl_head_dim = 4;
    cfg.slstm_positions = {2};
    cfg.dense_units = 8;
    cfg.pad_kind = "real";
    return cfg;
}

// reads the class block of the newest frame; perfect on class-encoded data
class OracleClassifier final : public model::Classifier {
  public:
    OracleClassifier() : model::Classifier(tiny_config("transformer"), kLandmarkDims) {}

    ad::Value forward(ad::Tape& tape, const BoundParams&, const model::ForwardInput& in, bool,
                      Rng*) const override {
        const Tensor& x = *in.frames;
        int best = 0;
        double best_v = -1e300;
        for (int c = 0; c < 6; ++c)
            if (x.at(x.rows() - 1, c) > best_v) {
                best_v = x.at(x.rows() - 1, c);
                best = c;
            }
        Tensor onehot(1, 6);
        onehot[best] = 1.0;
        return tape.leaf(std::move(onehot));
    }

    std::string architecture_description() const override { return "{\"arch\":\"oracle\"}"; }
};

// pseudo-random posterior derived from the newest frame's noise bits
class NoiseClassifier final : public model::Classifier {
  public:
    NoiseClassifier() : model::Classifier(tiny_config("transformer"), kLandmarkDims) {}

    ad::Value forward(ad::Tape& tape, const BoundParams&, const model::ForwardInput& in, bool,
                      Rng*) const override {
        const Tensor& x = *in.frames;
        const double v = x.at(x.rows() - 1, 7) * 1e9;
        const int pick = static_cast<int>(std::llabs(static_cast<long long>(v))) % 6;
        Tensor onehot(1, 6);
        onehot[pick] = 1.0;
        return tape.leaf(std::move(onehot));
    }

    std::string architecture_description() const override { return "{\"arch\":\"noise\"}"; }
};

} // namespace

TEST_CASE("stream: ring-buffer window equals a naive list-slicing reference") {
    Rng rng(17);
    const int t_max = 7;
    StreamState state(t_max, 6);
    OracleClassifier oracle;
    std::vector<data::LandmarkFrame> all;
    for (int t = 0; t < 40; ++t) {
        all.push_back(class_frame(t % 6, t, rng));
        state.ingest(all.back(), oracle);

        Tensor window = state.window_tensor();
        std::vector<uint8_t> mask = state.window_mask();
        const int avail = std::min<int>(t + 1, t_max);
        for (int r = 0; r < t_max; ++r) {
            if (r < t_max - avail) {
                CHECK(!mask[r]);
                for (int c = 0; c < kLandmarkDims; ++c) CHECK(window.at(r, c) == 0.0);
            } else {
                CHECK(mask[r]);
                const auto& want = all[t + 1 - avail + (r - (t_max - avail))].coords;
                for (int c = 0; c < kLandmarkDims; ++c) CHECK(window.at(r, c) == want[c]);
            }
        }
    }
}

TEST_CASE("stream: stride one means exactly one posterior per ingested frame") {
    Rng rng(18);
    StreamState state(5, 6);
    OracleClassifier oracle;
    for (int t = 0; t < 23; ++t) {
        state.ingest(class_frame(2, t, rng), oracle);
        CHECK(state.trace().size() == static_cast<size_t>(t + 1));
    }
    CHECK(state.frames_seen() == 23);
}

TEST_CASE("stream: suppression reports the all-zero vector") {
    Rng rng(19);
    StreamState state(5, 6);
    OracleClassifier oracle;
    state.set_suppressed(true);
    Tensor p = state.ingest(class_frame(3, 0, rng), oracle);
    for (int j = 0; j < 6; ++j) CHECK(p[j] == 0.0);
    state.set_suppressed(false);
    Tensor q = state.ingest(class_frame(3, 1, rng), oracle);
    CHECK(q[3] == 1.0);
}

TEST_CASE("stream: first window of a zero-backfilled session is mostly zero rows") {
    Rng rng(20);
    const int t_max = 12;
    StreamState state(t_max, 6);
    OracleClassifier oracle;
    state.ingest(class_frame(1, 0, rng), oracle);
    Tensor w = state.window_tensor();
    for (int r = 0; r < t_max - 1; ++r)
        for (int c = 0; c < kLandmarkDims; ++c) CHECK(w.at(r, c) == 0.0);
    // the single real frame sits at the bottom
    CHECK(w.at(t_max - 1, 1) > 0.5);
}

TEST_CASE("stream: batch and stream posteriors agree bitwise at module-final frames") {
    synth::GeneratorSpec spec = synth::default_generator_spec();
    spec.operators = {{1, 1.0, 1.0, 0.004, 2}};
    spec.module_len_min = 12;
    spec.module_len_max = 20;
    spec.idle_len_min = 4;
    spec.idle_len_max = 8;
    auto gen = synth::synth_generate(spec, 31);
    const int t_max = gen.t_max;

    for (const std::string arch : {"lstm", "transformer", "xlstm"}) {
        CAPTURE(arch);
        auto cls = model::build_classifier(tiny_config(arch), kLandmarkDims, 91);
        for (const data::Recording& rec : gen.dataset.recordings) {
            auto modules = data::segment(rec);
            // stream the full recording, remembering posteriors by frame
            StreamState state(t_max, 6);
            std::vector<Tensor> by_frame;
            for (const auto& frame : rec.frames) by_frame.push_back(state.ingest(frame, *cls));

            for (const auto& m : modules) {
                data::PaddedSequence p = data::pad(m, data::PadKind::kReal, t_max, {}, modules, 1);
                model::ForwardInput in;
                in.frames = &p.frames;
                in.mask = p.content_mask();
                Tensor batch = cls->predict(in);
                const Tensor& streamed = by_frame[m.start_frame + m.frames.size() - 1];
                for (int j = 0; j < 6; ++j) CHECK(batch[j] == streamed[j]); // bitwise
            }
        }
    }
}

TEST_CASE("replay: trace rows match frames, argmax stays consistent, reruns are identical") {
    data::Recording rec = class_recording(
        4, {{data::kIdleLabel, 6}, {2, 9}, {data::kIdleLabel, 4}, {5, 11}, {data::kIdleLabel, 3}}, 77);
    auto meta = meta_of(rec);
    OracleClassifier oracle;
    ReplayResult a = replay(rec, meta, oracle, 10);
    ReplayResult b = replay(rec, meta, oracle, 10);
    REQUIRE(a.rows.size() == rec.frames.size());
    for (size_t t = 0; t < a.rows.size(); ++t) {
        const TraceRow& row = a.rows[t];
        // argmax recomputed from the posterior columns matches the column
        int best = 0;
        for (int j = 1; j < 6; ++j)
            if (row.posterior[j] > row.posterior[best]) best = j;
        CHECK(best == row.argmax);
        CHECK(row.suppressed == (rec.labels[t] == data::kIdleLabel));
        if (row.suppressed)
            for (double p : row.posterior) CHECK(p == 0.0);
        CHECK(row.posterior == b.rows[t].posterior);
    }
    // missing metadata is an error
    CHECK_THROWS_AS(replay(rec, {}, oracle, 10), DataError);
}

TEST_CASE("replay: trace csv round-trips") {
    data::Recording rec = class_recording(9, {{1, 8}, {data::kIdleLabel, 3}, {4, 7}}, 123);
    auto meta = meta_of(rec);
    OracleClassifier oracle;
    ReplayResult a = replay(rec, meta, oracle, 6);
    const std::string path = "/tmp/seqcls_trace_test.csv";
    write_trace_csv(a, path);
    ReplayResult b = read_trace_csv(path);
    REQUIRE(b.rows.size() == a.rows.size());
    for (size_t t = 0; t < a.rows.size(); ++t) {
        CHECK(b.rows[t].frame_index == a.rows[t].frame_index);
        CHECK(b.rows[t].true_label == a.rows[t].true_label);
        CHECK(b.rows[t].suppressed == a.rows[t].suppressed);
        CHECK(b.rows[t].argmax == a.rows[t].argmax);
        CHECK(b.rows[t].posterior == a.rows[t].posterior);
    }
    std::remove(path.c_str());
}

TEST_CASE("curve: perfect oracle is flat at one, counts sum to total module frames") {
    std::vector<std::pair<int, int>> runs{{data::kIdleLabel, 4}};
    long total = 0;
    Rng rng(5);
    for (int m = 0; m < 30; ++m) {
        const int len = 8 + rng.uniform_int(10);
        runs.push_back({m % 6, len});
        runs.push_back({data::kIdleLabel, 3 + rng.uniform_int(4)});
        total += len;
    }
    data::Recording rec = class_recording(1, runs, 99);
    auto meta = meta_of(rec);
    data::Dataset ds{{rec}};
    OracleClassifier oracle;
    ProportionCurve curve = proportion_curve(oracle, ds, meta, {1}, 12, 10);
    long counted = 0;
    for (size_t b = 0; b < curve.accuracy.size(); ++b) {
        CHECK(curve.accuracy[b] == 1.0);
        counted += curve.count[b];
    }
    CHECK(counted == total);
    CHECK_THROWS_AS(proportion_curve(oracle, ds, meta, {1}, 12, 1), ContractError);
}

TEST_CASE("curve: chance-level model lands near one sixth in every bin") {
    std::vector<std::pair<int, int>> runs{{data::kIdleLabel, 3}};
    Rng rng(6);
    for (int m = 0; m < 60; ++m) {
        runs.push_back({m % 6, 10 + rng.uniform_int(12)});
        runs.push_back({data::kIdleLabel, 2 + rng.uniform_int(3)});
    }
    data::Recording rec = class_recording(2, runs, 111);
    auto meta = meta_of(rec);
    data::Dataset ds{{rec}};
    NoiseClassifier noise;
    ProportionCurve curve = proportion_curve(noise, ds, meta, {2}, 16, 6);
    for (size_t b = 0; b < curve.accuracy.size(); ++b) {
        REQUIRE(curve.count[b] > 30);
        const double sigma = std::sqrt((1.0 / 6) * (5.0 / 6) / curve.count[b]);
        CHECK(std::abs(curve.accuracy[b] - 1.0 / 6) < 3.5 * sigma);
    }
}
