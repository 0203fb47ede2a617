#include "seqcls/data.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "seqcls/errors.hpp"
#include "seqcls/rng.hpp"

namespace seqcls::data {

PadKind pad_kind_from_string(const std::string& s) {
    if (s == "zero") return PadKind::kZero;
    if (s == "idle") return PadKind::kIdle;
    if (s == "random") return PadKind::kRandom;
    if (s == "real") return PadKind::kReal;
    throw ConfigError("unknown pad kind: " + s + " (expected zero|idle|random|real)");
}

std::string to_string(PadKind k) {
    switch (k) {
        case PadKind::kZero: return "zero";
        case PadKind::kIdle: return "idle";
        case PadKind::kRandom: return "random";
        case PadKind::kReal: return "real";
    }
    return "?";
}

std::vector<uint8_t> PaddedSequence::content_mask() const {
    std::vector<uint8_t> mask(origin.size());
    for (size_t i = 0; i < origin.size(); ++i) mask[i] = origin[i] != FrameOrigin::kSynthetic ? 1 : 0;
    return mask;
}

Tensor frames_to_tensor(const FrameSeq& frames) {
    Tensor t(static_cast<int>(frames.size()), kLandmarkDims);
    for (size_t r = 0; r < frames.size(); ++r) {
        if (static_cast<int>(frames[r].coords.size()) != kLandmarkDims)
            throw DataError("frame " + std::to_string(frames[r].frame_index) + " has " +
                            std::to_string(frames[r].coords.size()) + " coordinates, expected " +
                            std::to_string(kLandmarkDims));
        std::memcpy(t.data() + r * kLandmarkDims, frames[r].coords.data(), sizeof(double) * kLandmarkDims);
    }
    return t;
}

std::vector<TaskModuleSequence> segment(const Recording& rec) {
    if (rec.frames.size() != rec.labels.size())
        throw DataError("recording " + std::to_string(rec.assembly_id) + ": " + std::to_string(rec.frames.size()) +
                        " frames vs " + std::to_string(rec.labels.size()) + " labels");
    std::vector<TaskModuleSequence> out;
    const int n = static_cast<int>(rec.frames.size());
    int t = 0, ordinal = 0;
    while (t < n) {
        const int label = rec.labels[t];
        int end = t;
        while (end < n && rec.labels[end] == label) ++end;
        if (label != kIdleLabel) {
            TaskModuleSequence seq;
            seq.label = label;
            seq.operator_id = rec.operator_id;
            seq.assembly_id = rec.assembly_id;
            seq.module_ordinal = ordinal++;
            seq.start_frame = t;
            seq.frames.assign(rec.frames.begin() + t, rec.frames.begin() + end);
            seq.preceding.assign(rec.frames.begin(), rec.frames.begin() + t);
            out.push_back(std::move(seq));
        }
        t = end;
    }
    return out;
}

FrameSeq build_idle_pool(const std::vector<Recording>& recs) {
    FrameSeq pool;
    for (const Recording& rec : recs) {
        if (rec.frames.size() != rec.labels.size())
            throw DataError("recording " + std::to_string(rec.assembly_id) + ": frame/label count mismatch");
        for (size_t i = 0; i < rec.frames.size(); ++i)
            if (rec.labels[i] == kIdleLabel) pool.push_back(rec.frames[i]);
    }
    return pool;
}

namespace {

LandmarkFrame zero_frame() {
    LandmarkFrame f;
    f.coords.assign(kLandmarkDims, 0.0);
    f.frame_index = -1;
    return f;
}

} // namespace

PaddedSequence pad(const TaskModuleSequence& seq, PadKind kind, int t_max, const FrameSeq& idle_pool,
                   const std::vector<TaskModuleSequence>& corpus, uint64_t rng_seed) {
    const int len = static_cast<int>(seq.frames.size());
    if (len > t_max)
        throw DataError("pad: sequence length " + std::to_string(len) + " exceeds t_max " + std::to_string(t_max));
    if (len < 1) throw DataError("pad: empty sequence");
    const int need = t_max - len;

    FrameSeq prefix;
    prefix.reserve(need);
    std::vector<FrameOrigin> prefix_origin(need, FrameOrigin::kSynthetic);
    Rng rng(rng_seed);

    switch (kind) {
        case PadKind::kZero: {
            for (int i = 0; i < need; ++i) prefix.push_back(zero_frame());
            break;
        }
        case PadKind::kIdle: {
            if (need > 0 && idle_pool.empty()) throw DataError("pad: idle padding requested with an empty idle pool");
            // contiguous chunk with a random start, wrapping around the pool
            const int start = need > 0 ? rng.uniform_int(static_cast<int>(idle_pool.size())) : 0;
            for (int i = 0; i < need; ++i) prefix.push_back(idle_pool[(start + i) % idle_pool.size()]);
            break;
        }
        case PadKind::kRandom: {
            // tails of uniformly chosen other sequences, filled right to left;
            // one tail is rarely long enough, so draws repeat until full
            std::vector<const TaskModuleSequence*> others;
            for (const TaskModuleSequence& c : corpus)
                if (!(c.assembly_id == seq.assembly_id && c.module_ordinal == seq.module_ordinal &&
                      c.operator_id == seq.operator_id))
                    others.push_back(&c);
            if (need > 0 && others.empty())
                throw DataError("pad: random padding needs at least one other sequence in the corpus");
            FrameSeq reversed;
            reversed.reserve(need);
            while (static_cast<int>(reversed.size()) < need) {
                const TaskModuleSequence& donor = *others[rng.uniform_int(static_cast<int>(others.size()))];
                const int take = std::min<int>(need - static_cast<int>(reversed.size()),
                                               static_cast<int>(donor.frames.size()));
                for (int i = 0; i < take; ++i)
                    reversed.push_back(donor.frames[donor.frames.size() - 1 - i]);
            }
            prefix.assign(reversed.rbegin(), reversed.rend());
            break;
        }
        case PadKind::kReal: {
            const int have = std::min<int>(need, static_cast<int>(seq.preceding.size()));
            const int backfill = need - have;
            for (int i = 0; i < backfill; ++i) prefix.push_back(zero_frame());
            for (int i = 0; i < have; ++i) prefix.push_back(seq.preceding[seq.preceding.size() - have + i]);
            for (int i = backfill; i < need; ++i) prefix_origin[i] = FrameOrigin::kHistory;
            break;
        }
    }

    PaddedSequence out;
    out.valid_length = len;
    out.kind = kind;
    out.label = seq.label;
    out.operator_id = seq.operator_id;
    out.assembly_id = seq.assembly_id;
    out.origin = std::move(prefix_origin);
    out.origin.insert(out.origin.end(), len, FrameOrigin::kData);
    FrameSeq all = std::move(prefix);
    all.insert(all.end(), seq.frames.begin(), seq.frames.end());
    out.frames = frames_to_tensor(all);
    return out;
}

FrameSeq augment_resize(const FrameSeq& frames, double factor, int t_max) {
    if (factor <= 0.0) throw DataError("augment_resize: factor must be positive");
    const int len = static_cast<int>(frames.size());
    if (len < 2) throw DataError("augment_resize: needs at least 2 frames");
    const int new_len = static_cast<int>(std::lround((len - 1) * factor)) + 1;
    if (new_len < 2 || new_len > t_max)
        throw DataError("augment_resize: resulting length " + std::to_string(new_len) + " outside [2," +
                        std::to_string(t_max) + "]");
    FrameSeq out(new_len);
    out[0] = frames[0];
    out[new_len - 1] = frames[len - 1];
    for (int j = 1; j < new_len - 1; ++j) {
        const double pos = static_cast<double>(j) * (len - 1) / (new_len - 1);
        const int lo = static_cast<int>(pos);
        const double w = pos - lo;
        LandmarkFrame f;
        f.coords.resize(kLandmarkDims);
        const auto& a = frames[lo].coords;
        const auto& b = frames[std::min(lo + 1, len - 1)].coords;
        for (int c = 0; c < kLandmarkDims; ++c) f.coords[c] = a[c] + w * (b[c] - a[c]);
        out[j] = std::move(f);
    }
    for (int j = 0; j < new_len; ++j) out[j].frame_index = j;
    return out;
}

FrameSeq augment_noise(const FrameSeq& frames, double std, uint64_t rng_seed) {
    if (std < 0.0) throw DataError("augment_noise: std must be >= 0");
    if (std == 0.0) return frames;
    Rng rng(rng_seed);
    FrameSeq out = frames;
    for (LandmarkFrame& f : out)
        for (double& c : f.coords) c += rng.gaussian(0.0, std);
    return out;
}

FrameSeq apply_augmentation_policy(const FrameSeq& frames, const AugmentPolicy& policy, int t_max,
                                   uint64_t rng_seed, AugmentStats* stats) {
    Rng rng(rng_seed);
    FrameSeq out = frames;
    if (stats) stats->sequences += 1;
    if (policy.resize_prob > 0.0 && rng.uniform() < policy.resize_prob) {
        double factor = rng.gaussian(1.0, policy.resize_std);
        factor = std::clamp(factor, 0.5, 1.5);
        // clamp further so the result stays a legal module length
        const int len = static_cast<int>(out.size());
        const double max_factor = static_cast<double>(t_max - 1) / (len - 1);
        const double min_factor = 1.5 / (len - 1); // new_len >= 2
        factor = std::clamp(factor, min_factor, max_factor);
        out = augment_resize(out, factor, t_max);
        if (stats) stats->resize_applied += 1;
    }
    if (policy.noise_prob > 0.0 && rng.uniform() < policy.noise_prob) {
        out = augment_noise(out, policy.noise_std, rng.next_u64());
        if (stats) stats->noise_applied += 1;
    }
    return out;
}

// --- dataset container ------------------------------------------------------------

int Dataset::t_max() const {
    int best = 0;
    for (const Recording& rec : recordings)
        for (const TaskModuleSequence& seq : segment(rec)) best = std::max(best, static_cast<int>(seq.frames.size()));
    if (best == 0) throw DataError("dataset holds no labeled task modules");
    return best;
}

std::vector<int> Dataset::assembly_ids() const {
    std::vector<int> ids;
    ids.reserve(recordings.size());
    for (const Recording& rec : recordings) ids.push_back(rec.assembly_id);
    return ids;
}

const Recording& Dataset::recording(int assembly_id) const {
    for (const Recording& rec : recordings)
        if (rec.assembly_id == assembly_id) return rec;
    throw DataError("unknown assembly id " + std::to_string(assembly_id));
}

// --- file formats -------------------------------------------------------------------

namespace {

constexpr const char* kDatasetHeader = "seqcls_dataset_v1";
constexpr const char* kMetaHeader = "seqcls_modules_v1";

} // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + tmp);
        out << kDatasetHeader << "\n";
        char num[32];
        for (const Recording& rec : ds.recordings) {
            if (rec.frames.size() != rec.labels.size())
                throw DataError("recording " + std::to_string(rec.assembly_id) + ": frame/label count mismatch");
            for (size_t i = 0; i < rec.frames.size(); ++i) {
                const LandmarkFrame& f = rec.frames[i];
                if (static_cast<int>(f.coords.size()) != kLandmarkDims)
                    throw DataError("frame " + std::to_string(f.frame_index) + " has " +
                                    std::to_string(f.coords.size()) + " coordinates");
                out << rec.assembly_id << ',' << rec.operator_id << ',' << f.frame_index << ',' << rec.labels[i];
                for (double c : f.coords) {
                    std::snprintf(num, sizeof num, "%.17g", c);
                    out << ',' << num;
                }
                out << '\n';
            }
        }
        if (!out) throw DataError("write failure on " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw DataError("cannot move " + tmp + " into place");
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != kDatasetHeader)
        throw DataError(path + ": missing or unknown header (expected " + std::string(kDatasetHeader) + ")");

    Dataset ds;
    Recording* current = nullptr;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const char* p = line.c_str();
        char* end = nullptr;
        auto next_int = [&](const char* what) {
            long v = std::strtol(p, &end, 10);
            if (end == p || *end != ',')
                throw DataError(path + ":" + std::to_string(line_no) + ": malformed " + what);
            p = end + 1;
            return static_cast<int>(v);
        };
        const int assembly_id = next_int("assembly_id");
        const int operator_id = next_int("operator_id");
        const int frame_index = next_int("frame_index");
        const int label = next_int("module_label");

        LandmarkFrame f;
        f.frame_index = frame_index;
        f.coords.reserve(kLandmarkDims);
        while (true) {
            double v = std::strtod(p, &end);
            if (end == p) throw DataError(path + ":" + std::to_string(line_no) + ": malformed coordinate");
            f.coords.push_back(v);
            if (*end == '\0') break;
            if (*end != ',') throw DataError(path + ":" + std::to_string(line_no) + ": malformed coordinate list");
            p = end + 1;
        }
        if (static_cast<int>(f.coords.size()) != kLandmarkDims)
            throw DataError(path + ":" + std::to_string(line_no) + ": frame " + std::to_string(frame_index) +
                            " has " + std::to_string(f.coords.size()) + " coordinates, expected " +
                            std::to_string(kLandmarkDims));
        for (double c : f.coords)
            if (!std::isfinite(c))
                throw DataError(path + ":" + std::to_string(line_no) + ": non-finite coordinate");

        if (!current || current->assembly_id != assembly_id) {
            for (const Recording& rec : ds.recordings)
                if (rec.assembly_id == assembly_id)
                    throw DataError(path + ":" + std::to_string(line_no) + ": assembly " +
                                    std::to_string(assembly_id) + " is not contiguous");
            ds.recordings.push_back(Recording{assembly_id, operator_id, {}, {}});
            current = &ds.recordings.back();
        }
        if (current->operator_id != operator_id)
            throw DataError(path + ":" + std::to_string(line_no) + ": operator id changed mid-recording");
        current->frames.push_back(std::move(f));
        current->labels.push_back(label);
    }
    if (ds.recordings.empty()) throw DataError(path + ": no frame records");
    return ds;
}

void save_metadata(const std::vector<ModuleMeta>& meta, const std::string& path) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + tmp);
        out << kMetaHeader << "\n";
        for (const ModuleMeta& m : meta)
            out << m.assembly_id << ',' << m.operator_id << ',' << m.module_ordinal << ',' << m.label << ','
                << m.start_frame << ',' << m.end_frame << '\n';
        if (!out) throw DataError("write failure on " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw DataError("cannot move " + tmp + " into place");
}

std::vector<ModuleMeta> load_metadata(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != kMetaHeader)
        throw DataError(path + ": missing or unknown header (expected " + std::string(kMetaHeader) + ")");
    std::vector<ModuleMeta> out;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ModuleMeta m;
        if (std::sscanf(line.c_str(), "%d,%d,%d,%d,%d,%d", &m.assembly_id, &m.operator_id, &m.module_ordinal,
                        &m.label, &m.start_frame, &m.end_frame) != 6)
            throw DataError(path + ":" + std::to_string(line_no) + ": malformed module record");
        out.push_back(m);
    }
    return out;
}

DatasetSplit split_dataset(const Dataset& ds, int val_count, int test_op1_count, uint64_t seed) {
    std::vector<int> op1, rest;
    for (const Recording& rec : ds.recordings)
        (rec.operator_id == 1 ? op1 : rest).push_back(rec.assembly_id);
    std::sort(op1.begin(), op1.end());
    std::sort(rest.begin(), rest.end());
    if (static_cast<int>(op1.size()) < val_count + test_op1_count + 1)
        throw DataError("split: operator 1 has " + std::to_string(op1.size()) + " assemblies, need more than " +
                        std::to_string(val_count + test_op1_count));

    Rng rng(Rng::derive(seed, "split"));
    for (size_t i = op1.size(); i > 1; --i) std::swap(op1[i - 1], op1[rng.uniform_int(static_cast<int>(i))]);

    DatasetSplit split;
    int idx = 0;
    for (int i = 0; i < test_op1_count; ++i) split.test_assemblies.push_back(op1[idx++]);
    for (int i = 0; i < val_count; ++i) split.val_assemblies.push_back(op1[idx++]);
    while (idx < static_cast<int>(op1.size())) split.train_assemblies.push_back(op1[idx++]);
    for (int id : rest) split.test_assemblies.push_back(id);
    std::sort(split.train_assemblies.begin(), split.train_assemblies.end());
    std::sort(split.val_assemblies.begin(), split.val_assemblies.end());
    std::sort(split.test_assemblies.begin(), split.test_assemblies.end());
    return split;
}

} // namespace seqcls::data
