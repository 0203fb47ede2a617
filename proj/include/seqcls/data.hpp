#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqcls/tensor.hpp"

namespace seqcls::data {

// 2 hands x 21 landmarks x (x,y,z), left hand first, xyz interleaved per
// landmark.
constexpr int kLandmarkDims = 126;
constexpr double kFrameRateHz = 10.0;
constexpr int kIdleLabel = -1; // idle/robot segments carry no class

struct LandmarkFrame {
    std::vector<double> coords; // exactly kLandmarkDims values
    int frame_index = 0;
};

using FrameSeq = std::vector<LandmarkFrame>;

// One assembly's continuous stream with per-frame labels (class id or
// kIdleLabel).
struct Recording {
    int assembly_id = 0;
    int operator_id = 0;
    FrameSeq frames;
    std::vector<int> labels;
};

// A labeled human task module cut out of a recording. `preceding` holds the
// full stream history back to the start of the recording; real-padding and the
// streaming equivalence contract both need the true history, not just the gap
// since the previous module.
struct TaskModuleSequence {
    FrameSeq frames;
    int label = 0;
    int operator_id = 0;
    int assembly_id = 0;
    int module_ordinal = 0;
    int start_frame = 0;
    FrameSeq preceding;
};

enum class PadKind : uint8_t { kZero, kIdle, kRandom, kReal };

PadKind pad_kind_from_string(const std::string& s);
std::string to_string(PadKind k);

enum class FrameOrigin : uint8_t {
    kData,      // the module's own frames
    kHistory,   // true preceding stream content (real padding)
    kSynthetic, // zeros, idle samples, random tails, zero backfill
};

// Fixed-length window, padding as a prefix before the data.
struct PaddedSequence {
    Tensor frames; // [t_max, kLandmarkDims]
    int valid_length = 0;
    PadKind kind = PadKind::kZero;
    std::vector<FrameOrigin> origin; // one entry per row
    int label = 0;
    int operator_id = 0;
    int assembly_id = 0;

    // 1 where the row is real stream content (data or history).
    std::vector<uint8_t> content_mask() const;
};

Tensor frames_to_tensor(const FrameSeq& frames);

// Cuts contiguous equal-label runs (label != kIdleLabel) into task modules.
// Throws DataError if frame and label counts disagree.
std::vector<TaskModuleSequence> segment(const Recording& rec);

// Frames labeled kIdleLabel across all recordings, in stream order.
FrameSeq build_idle_pool(const std::vector<Recording>& recs);

// The four padding strategies. idle_pool is required for kIdle, corpus (other
// modules) for kRandom. Throws DataError when t_max < len(seq).
PaddedSequence pad(const TaskModuleSequence& seq, PadKind kind, int t_max, const FrameSeq& idle_pool,
                   const std::vector<TaskModuleSequence>& corpus, uint64_t rng_seed);

// Linear time resampling; first and last frames are preserved bitwise. The
// new length is round((len-1) * factor) + 1; throws DataError when it falls
// outside [2, t_max].
FrameSeq augment_resize(const FrameSeq& frames, double factor, int t_max);

// I.i.d. zero-mean Gaussian noise on every coordinate.
FrameSeq augment_noise(const FrameSeq& frames, double std, uint64_t rng_seed);

struct AugmentPolicy {
    double noise_prob = 0.0;
    double noise_std = 0.0;
    double resize_prob = 0.0;
    double resize_std = 0.0;
};

// Application counters; evaluation paths assert these stay at zero.
struct AugmentStats {
    long sequences = 0;
    long noise_applied = 0;
    long resize_applied = 0;
};

// Each augmentation fires independently with its configured probability; the
// resize factor is drawn from Normal(1, resize_std), truncated to [0.5, 1.5]
// and further clamped so the result stays within [2, t_max].
FrameSeq apply_augmentation_policy(const FrameSeq& frames, const AugmentPolicy& policy, int t_max,
                                   uint64_t rng_seed, AugmentStats* stats = nullptr);

// --- dataset container and file formats -----------------------------------------

struct Dataset {
    std::vector<Recording> recordings;

    // Longest task module across all recordings (the padding target).
    int t_max() const;
    std::vector<int> assembly_ids() const;
    const Recording& recording(int assembly_id) const;
};

// Ground-truth module boundaries (generator metadata or derived by segment()).
struct ModuleMeta {
    int assembly_id = 0;
    int operator_id = 0;
    int module_ordinal = 0;
    int label = 0;
    int start_frame = 0;
    int end_frame = 0; // exclusive
};

// Line-delimited UTF-8, one frame per line:
//   assembly_id,operator_id,frame_index,module_label,c0,...,c125
// with a versioned header line. Round-trips doubles exactly (%.17g).
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

// Sidecar: header line then assembly_id,operator_id,module_ordinal,label,start_frame,end_frame.
void save_metadata(const std::vector<ModuleMeta>& meta, const std::string& path);
std::vector<ModuleMeta> load_metadata(const std::string& path);

// Train/val from operator 1 only; test = all other operators plus
// test_op1_count held-out operator-1 assemblies. Deterministic in (seed, ids).
struct DatasetSplit {
    std::vector<int> train_assemblies;
    std::vector<int> val_assemblies;
    std::vector<int> test_assemblies;
};

DatasetSplit split_dataset(const Dataset& ds, int val_count, int test_op1_count, uint64_t seed);

} // namespace seqcls::data
