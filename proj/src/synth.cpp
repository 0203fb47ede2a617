#include "seqcls/synth.hpp"

#include <algorithm>
#include <cmath>

#include "seqcls/errors.hpp"
#include "seqcls/rng.hpp"

namespace seqcls::synth {

using data::kLandmarkDims;
using data::LandmarkFrame;

namespace {

struct Point {
    double x, y;
};

// Right-hand center paths, one distinct shape per sub-assembly class, in a
// normalized image-space workspace.
const std::vector<std::vector<Point>> kClassPaths = {
    {{0.20, 0.30}, {0.40, 0.62}, {0.60, 0.28}, {0.80, 0.60}},                  // sweep with dips
    {{0.50, 0.28}, {0.72, 0.50}, {0.50, 0.72}, {0.28, 0.50}, {0.50, 0.28}},    // loop
    {{0.30, 0.20}, {0.30, 0.70}, {0.50, 0.22}, {0.50, 0.72}, {0.70, 0.20}},    // vertical zigzag
    {{0.22, 0.22}, {0.22, 0.75}, {0.75, 0.75}},                                // L
    {{0.25, 0.25}, {0.75, 0.70}, {0.45, 0.45}, {0.80, 0.25}},                  // diagonal with return
    {{0.20, 0.50}, {0.45, 0.80}, {0.70, 0.50}, {0.45, 0.32}, {0.25, 0.62}},    // high arc
};

const Point kRestRight{0.55, 0.85};
const Point kRestLeft{0.18, 0.55};

// Piecewise-linear position along a polyline at parameter s in [0,1].
Point polyline_at(const std::vector<Point>& pts, double s) {
    const int segs = static_cast<int>(pts.size()) - 1;
    const double u = std::clamp(s, 0.0, 1.0) * segs;
    const int i = std::min(static_cast<int>(u), segs - 1);
    const double w = u - i;
    return {pts[i].x + w * (pts[i + 1].x - pts[i].x), pts[i].y + w * (pts[i + 1].y - pts[i].y)};
}

double smoothstep(double s) { return s * s * (3.0 - 2.0 * s); }

// Canonical 21-landmark layout around the hand center: wrist plus four
// landmarks per finger, fanned out. Index l in [0,21).
Point landmark_offset(int l) {
    if (l == 0) return {0.0, 0.035}; // wrist below the center
    const int finger = (l - 1) / 4;    // 0..4
    const int joint = (l - 1) % 4 + 1; // 1..4 toward the tip
    const double angle = (-0.5 + 0.25 * finger) * M_PI * 0.55;
    const double radius = 0.012 * joint * (finger == 0 ? 0.8 : 1.0);
    return {radius * std::sin(angle), -radius * std::cos(angle)};
}

void emit_frame(data::Recording& rec, int label, double scale, Point right, Point left, double z_base,
                double articulation, Rng& rng, double noise_floor) {
    LandmarkFrame f;
    f.frame_index = static_cast<int>(rec.frames.size());
    f.coords.resize(kLandmarkDims);
    int idx = 0;
    for (int hand = 0; hand < 2; ++hand) {
        const Point center = hand == 0 ? left : right;
        for (int l = 0; l < 21; ++l) {
            const Point off = landmark_offset(l);
            const double spread = 1.0 + 0.18 * articulation;
            const double x = center.x + off.x * spread + rng.gaussian(0.0, noise_floor);
            const double y = center.y + off.y * spread + rng.gaussian(0.0, noise_floor);
            const double z = z_base + 0.004 * l / 21.0 + rng.gaussian(0.0, noise_floor);
            f.coords[idx++] = scale * x;
            f.coords[idx++] = scale * y;
            f.coords[idx++] = scale * z;
        }
    }
    rec.frames.push_back(std::move(f));
    rec.labels.push_back(label);
}

void emit_idle(data::Recording& rec, int frames, double scale, Rng& rng, double noise_floor) {
    Point right = kRestRight, left = kRestLeft;
    for (int t = 0; t < frames; ++t) {
        // slow wander around the rest pose
        right.x += 0.25 * (kRestRight.x - right.x) + rng.gaussian(0.0, 0.004);
        right.y += 0.25 * (kRestRight.y - right.y) + rng.gaussian(0.0, 0.004);
        left.x += 0.25 * (kRestLeft.x - left.x) + rng.gaussian(0.0, 0.003);
        left.y += 0.25 * (kRestLeft.y - left.y) + rng.gaussian(0.0, 0.003);
        emit_frame(rec, data::kIdleLabel, scale, right, left, 0.04, 0.0, rng, noise_floor);
    }
}

void emit_module(data::Recording& rec, int cls, int frames, double scale, Rng& rng, double noise_floor) {
    // per-module jitter of the class waypoints
    std::vector<Point> path = kClassPaths[cls];
    for (Point& p : path) {
        p.x += rng.gaussian(0.0, 0.015);
        p.y += rng.gaussian(0.0, 0.015);
    }
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    for (int t = 0; t < frames; ++t) {
        const double progress = frames > 1 ? static_cast<double>(t) / (frames - 1) : 0.0;
        const Point right = polyline_at(path, smoothstep(progress));
        // the left hand trails toward the work area at reduced amplitude
        const Point left{kRestLeft.x + 0.25 * (right.x - kRestLeft.x), kRestLeft.y + 0.2 * (right.y - kRestLeft.y)};
        const double z = 0.05 + 0.025 * std::sin(2.0 * M_PI * progress + phase);
        const double articulation = std::sin(2.0 * M_PI * progress * (1.0 + cls * 0.3) + phase);
        emit_frame(rec, cls, scale, right, left, z, articulation, rng, noise_floor);
    }
}

void check_spec(const GeneratorSpec& spec) {
    if (spec.operators.empty()) throw ConfigError("generator: no operators");
    if (spec.num_classes < 2 || spec.num_classes > static_cast<int>(kClassPaths.size()))
        throw ConfigError("generator: num_classes must be in 2.." + std::to_string(kClassPaths.size()));
    if (spec.module_len_min < 8 || spec.module_len_max < spec.module_len_min)
        throw ConfigError("generator: bad module length range");
    if (spec.idle_len_min < 1 || spec.idle_len_max < spec.idle_len_min)
        throw ConfigError("generator: bad idle length range");
    if (spec.modules_per_class < 1) throw ConfigError("generator: modules_per_class must be >= 1");
    for (const OperatorSpec& op : spec.operators) {
        if (op.hand_scale <= 0.0 || op.speed <= 0.0) throw ConfigError("generator: scales must be positive");
        if (op.assemblies < 1) throw ConfigError("generator: every operator needs at least one assembly");
        if (op.noise_floor < 0.0) throw ConfigError("generator: noise_floor must be >= 0");
    }
    // class template separation: mean pointwise L2 between resampled paths
    const int grid = 50;
    for (int a = 0; a < spec.num_classes; ++a) {
        for (int b = a + 1; b < spec.num_classes; ++b) {
            double acc = 0.0;
            for (int g = 0; g < grid; ++g) {
                const double s = static_cast<double>(g) / (grid - 1);
                const Point pa = polyline_at(kClassPaths[a], s);
                const Point pb = polyline_at(kClassPaths[b], s);
                acc += std::sqrt((pa.x - pb.x) * (pa.x - pb.x) + (pa.y - pb.y) * (pa.y - pb.y));
            }
            if (acc / grid < spec.class_separation)
                throw ConfigError("generator: class templates " + std::to_string(a) + " and " + std::to_string(b) +
                                  " are closer than the configured separation");
        }
    }
}

} // namespace

GeneratorSpec default_generator_spec() {
    GeneratorSpec spec;
    // hand-length ratios 20.5 : 17.0 : 18.0 : 20.0 cm
    spec.operators = {
        {1, 1.00, 1.00, 0.004, 14},
        {2, 0.83, 0.93, 0.004, 2},
        {3, 0.88, 1.05, 0.004, 2},
        {4, 0.98, 0.97, 0.004, 2},
    };
    return spec;
}

GeneratedData synth_generate(const GeneratorSpec& spec, uint64_t seed) {
    check_spec(spec);
    GeneratedData out;
    out.t_max = spec.module_len_max;

    int assembly_id = 0;
    int stream_index = 0;
    for (const OperatorSpec& op : spec.operators) {
        for (int a = 0; a < op.assemblies; ++a, ++stream_index) {
            Rng rng(Rng::derive(seed, "assembly", static_cast<uint64_t>(stream_index)));
            data::Recording rec;
            rec.assembly_id = ++assembly_id;
            rec.operator_id = op.id;

            // class order shuffles per assembly
            std::vector<int> order;
            for (int r = 0; r < spec.modules_per_class; ++r)
                for (int c = 0; c < spec.num_classes; ++c) order.push_back(c);
            for (size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[rng.uniform_int(static_cast<int>(i))]);

            emit_idle(rec, spec.idle_len_min + rng.uniform_int(spec.idle_len_max - spec.idle_len_min + 1),
                      op.hand_scale, rng, op.noise_floor);
            for (int cls : order) {
                const int base_len =
                    spec.module_len_min + rng.uniform_int(spec.module_len_max - spec.module_len_min + 1);
                const int len = std::clamp(static_cast<int>(std::lround(base_len / op.speed)),
                                           spec.module_len_min / 2 + 1, spec.module_len_max);
                const int start = static_cast<int>(rec.frames.size());
                emit_module(rec, cls, len, op.hand_scale, rng, op.noise_floor);
                data::ModuleMeta meta;
                meta.assembly_id = rec.assembly_id;
                meta.operator_id = op.id;
                meta.module_ordinal = static_cast<int>(out.metadata.size());
                meta.label = cls;
                meta.start_frame = start;
                meta.end_frame = static_cast<int>(rec.frames.size());
                out.metadata.push_back(meta);
                emit_idle(rec, spec.idle_len_min + rng.uniform_int(spec.idle_len_max - spec.idle_len_min + 1),
                          op.hand_scale, rng, op.noise_floor);
            }
            out.dataset.recordings.push_back(std::move(rec));
        }
    }

    // module_ordinal counts within a recording, not globally
    int last_assembly = -1, ordinal = 0;
    for (data::ModuleMeta& m : out.metadata) {
        if (m.assembly_id != last_assembly) {
            last_assembly = m.assembly_id;
            ordinal = 0;
        }
        m.module_ordinal = ordinal++;
    }
    return out;
}

} // namespace seqcls::synth
