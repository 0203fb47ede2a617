#include "seqcls/stream.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <thread>

#include "seqcls/errors.hpp"
#include "seqcls/train.hpp"

namespace seqcls::stream {

using data::kLandmarkDims;

StreamState::StreamState(int t_max, int num_classes) : t_max_(t_max), num_classes_(num_classes) {
    if (t_max < 1) throw ContractError("StreamState: t_max must be >= 1");
    ring_.resize(t_max);
}

Tensor StreamState::window_tensor() const {
    Tensor w(t_max_, kLandmarkDims);
    const long avail = std::min<long>(count_, t_max_);
    const int backfill = t_max_ - static_cast<int>(avail);
    for (long i = 0; i < avail; ++i) {
        // oldest first: frames count_-avail .. count_-1
        const long global = count_ - avail + i;
        const data::LandmarkFrame& f = ring_[global % t_max_];
        std::memcpy(w.data() + (backfill + i) * kLandmarkDims, f.coords.data(), sizeof(double) * kLandmarkDims);
    }
    return w;
}

std::vector<uint8_t> StreamState::window_mask() const {
    std::vector<uint8_t> mask(t_max_, 1);
    const long avail = std::min<long>(count_, t_max_);
    for (int i = 0; i < t_max_ - static_cast<int>(avail); ++i) mask[i] = 0;
    return mask;
}

Tensor StreamState::ingest(const data::LandmarkFrame& frame, const model::Classifier& cls) {
    if (static_cast<int>(frame.coords.size()) != kLandmarkDims)
        throw DataError("ingest: frame has " + std::to_string(frame.coords.size()) + " coordinates");
    ring_[count_ % t_max_] = frame;
    ++count_;

    Tensor posterior;
    if (suppressed_) {
        posterior = Tensor::zeros(1, num_classes_);
    } else {
        Tensor window = window_tensor();
        model::ForwardInput in;
        in.frames = &window;
        in.mask = window_mask();
        posterior = cls.predict(in);
    }
    trace_.push_back(posterior);
    return posterior;
}

ReplayResult replay(const data::Recording& rec, const std::vector<data::ModuleMeta>& meta,
                    const model::Classifier& cls, int t_max, double paced_fps) {
    std::vector<const data::ModuleMeta*> mine;
    for (const data::ModuleMeta& m : meta)
        if (m.assembly_id == rec.assembly_id) mine.push_back(&m);
    if (mine.empty())
        throw DataError("replay: no module metadata for assembly " + std::to_string(rec.assembly_id));

    ReplayResult out;
    out.assembly_id = rec.assembly_id;
    StreamState state(t_max, cls.config().num_classes);
    for (size_t t = 0; t < rec.frames.size(); ++t) {
        int label = data::kIdleLabel;
        for (const data::ModuleMeta* m : mine)
            if (static_cast<int>(t) >= m->start_frame && static_cast<int>(t) < m->end_frame) label = m->label;
        state.set_suppressed(label == data::kIdleLabel);
        Tensor posterior = state.ingest(rec.frames[t], cls);

        TraceRow row;
        row.frame_index = static_cast<int>(t);
        row.true_label = label;
        row.suppressed = state.suppressed();
        row.posterior.assign(posterior.data(), posterior.data() + posterior.size());
        row.argmax = train::argmax_class(posterior);
        out.rows.push_back(std::move(row));
        if (paced_fps > 0.0)
            std::this_thread::sleep_for(std::chrono::duration<double>(1.0 / paced_fps));
    }
    return out;
}

void write_trace_csv(const ReplayResult& res, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + tmp);
        const int classes = res.rows.empty() ? 0 : static_cast<int>(res.rows[0].posterior.size());
        out << "frame_index,true_label,suppressed";
        for (int c = 0; c < classes; ++c) out << ",p" << c;
        out << ",argmax\n";
        char buf[32];
        for (const TraceRow& row : res.rows) {
            out << row.frame_index << ',' << row.true_label << ',' << (row.suppressed ? 1 : 0);
            for (double p : row.posterior) {
                std::snprintf(buf, sizeof buf, "%.17g", p);
                out << ',' << buf;
            }
            out << ',' << row.argmax << '\n';
        }
        if (!out) throw DataError("write failure on " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw DataError("cannot move " + tmp + " into place");
}

ReplayResult read_trace_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("frame_index,true_label,suppressed", 0) != 0)
        throw DataError(path + ": not a trace file");
    ReplayResult out;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        TraceRow row;
        const char* p = line.c_str();
        char* end = nullptr;
        auto next_field = [&]() {
            double v = std::strtod(p, &end);
            if (end == p) throw DataError(path + ":" + std::to_string(line_no) + ": malformed trace row");
            p = *end == ',' ? end + 1 : end;
            return v;
        };
        row.frame_index = static_cast<int>(next_field());
        row.true_label = static_cast<int>(next_field());
        row.suppressed = next_field() != 0.0;
        std::vector<double> rest;
        while (true) {
            rest.push_back(next_field());
            if (*end == '\0') break;
        }
        if (rest.size() < 2) throw DataError(path + ":" + std::to_string(line_no) + ": malformed trace row");
        row.argmax = static_cast<int>(rest.back());
        rest.pop_back();
        row.posterior = std::move(rest);
        out.rows.push_back(std::move(row));
    }
    return out;
}

ProportionCurve curve_from_traces(const std::vector<ReplayResult>& traces,
                                  const std::vector<data::ModuleMeta>& meta, int bins) {
    if (bins < 2) throw ContractError("proportion_curve: bins must be >= 2");
    ProportionCurve curve;
    curve.bin_lo.resize(bins);
    curve.bin_hi.resize(bins);
    curve.accuracy.assign(bins, 0.0);
    curve.count.assign(bins, 0);
    std::vector<long> correct(bins, 0);
    for (int b = 0; b < bins; ++b) {
        curve.bin_lo[b] = static_cast<double>(b) / bins;
        curve.bin_hi[b] = static_cast<double>(b + 1) / bins;
    }

    for (const ReplayResult& trace : traces) {
        for (const data::ModuleMeta& m : meta) {
            if (m.assembly_id != trace.assembly_id) continue;
            const int len = m.end_frame - m.start_frame;
            for (int t = m.start_frame; t < m.end_frame; ++t) {
                if (t < 0 || t >= static_cast<int>(trace.rows.size()))
                    throw DataError("curve: module metadata exceeds trace length");
                const TraceRow& row = trace.rows[t];
                const double fraction = static_cast<double>(t - m.start_frame + 1) / len;
                const int bin = std::min(bins - 1, static_cast<int>(fraction * bins));
                curve.count[bin] += 1;
                if (!row.suppressed && row.argmax == m.label) correct[bin] += 1;
            }
        }
    }
    for (int b = 0; b < bins; ++b)
        curve.accuracy[b] = curve.count[b] > 0 ? static_cast<double>(correct[b]) / curve.count[b] : 0.0;
    return curve;
}

ProportionCurve proportion_curve(const model::Classifier& cls, const data::Dataset& ds,
                                 const std::vector<data::ModuleMeta>& meta, const std::vector<int>& assembly_ids,
                                 int t_max, int bins) {
    if (bins < 2) throw ContractError("proportion_curve: bins must be >= 2");
    std::vector<ReplayResult> traces;
    for (int id : assembly_ids) traces.push_back(replay(ds.recording(id), meta, cls, t_max));
    return curve_from_traces(traces, meta, bins);
}

void write_curve_csv(const ProportionCurve& curve, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + tmp);
        out << "bin_lo,bin_hi,accuracy,count\n";
        char buf[128];
        for (size_t b = 0; b < curve.accuracy.size(); ++b) {
            std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.17g,%ld\n", curve.bin_lo[b], curve.bin_hi[b],
                          curve.accuracy[b], curve.count[b]);
            out << buf;
        }
        if (!out) throw DataError("write failure on " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw DataError("cannot move " + tmp + " into place");
}

} // namespace seqcls::stream
