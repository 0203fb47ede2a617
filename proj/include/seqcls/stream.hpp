#pragma once

#include <string>
#include <vector>

#include "seqcls/data.hpp"
#include "seqcls/models.hpp"

namespace seqcls::stream {

// Sliding-window session with stride 1: exactly one posterior per ingested
// frame. The window is the last min(t, t_max) frames, left-completed with
// zero frames (marked synthetic in the mask) until the stream has filled the
// buffer. While the suppression flag is set the recorded posterior is the
// all-zero vector.
class StreamState {
  public:
    StreamState(int t_max, int num_classes);

    Tensor ingest(const data::LandmarkFrame& frame, const model::Classifier& cls);

    void set_suppressed(bool on) { suppressed_ = on; }
    bool suppressed() const { return suppressed_; }
    long frames_seen() const { return count_; }
    const std::vector<Tensor>& trace() const { return trace_; }

    // Current window contents (zero-backfilled) and its content mask.
    Tensor window_tensor() const;
    std::vector<uint8_t> window_mask() const;

  private:
    int t_max_;
    int num_classes_;
    std::vector<data::LandmarkFrame> ring_;
    long count_ = 0;
    bool suppressed_ = false;
    std::vector<Tensor> trace_;
};

struct TraceRow {
    int frame_index = 0;
    int true_label = data::kIdleLabel;
    bool suppressed = false;
    std::vector<double> posterior;
    int argmax = 0;
};

struct ReplayResult {
    int assembly_id = 0;
    std::vector<TraceRow> rows;
};

// Drives a full recording through a stream session. Suppression follows the
// module metadata: frames outside every human module (idle/robot segments)
// are suppressed. Throws DataError when the recording has no metadata rows.
// paced_fps > 0 sleeps to simulate the nominal frame rate.
ReplayResult replay(const data::Recording& rec, const std::vector<data::ModuleMeta>& meta,
                    const model::Classifier& cls, int t_max, double paced_fps = 0.0);

// CSV: frame_index,true_label,suppressed,p0..p{C-1},argmax
void write_trace_csv(const ReplayResult& res, const std::string& path);
ReplayResult read_trace_csv(const std::string& path);

struct ProportionCurve {
    std::vector<double> bin_lo, bin_hi;
    std::vector<double> accuracy;
    std::vector<long> count;
};

// Accuracy as a function of the observed fraction of a module: the prediction
// after j of L module frames scores into the bin holding j/L. Throws
// ContractError when bins < 2.
ProportionCurve proportion_curve(const model::Classifier& cls, const data::Dataset& ds,
                                 const std::vector<data::ModuleMeta>& meta, const std::vector<int>& assembly_ids,
                                 int t_max, int bins);

// Same aggregation from already-computed replay traces.
ProportionCurve curve_from_traces(const std::vector<ReplayResult>& traces,
                                  const std::vector<data::ModuleMeta>& meta, int bins);

void write_curve_csv(const ProportionCurve& curve, const std::string& path);

} // namespace seqcls::stream
