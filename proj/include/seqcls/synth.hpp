#pragma once

#include <cstdint>
#include <vector>

#include "seqcls/data.hpp"

namespace seqcls::synth {

// One synthetic operator. hand_scale multiplies every coordinate (hand size),
// speed divides module durations (tempo), noise_floor is per-coordinate
// Gaussian jitter before scaling.
struct OperatorSpec {
    int id = 1;
    double hand_scale = 1.0;
    double speed = 1.0;
    double noise_floor = 0.004;
    int assemblies = 1;
};

struct GeneratorSpec {
    std::vector<OperatorSpec> operators;
    int module_len_min = 40;
    int module_len_max = 70; // defines the padding target t_max
    int idle_len_min = 12;
    int idle_len_max = 24;
    int modules_per_class = 1; // human modules per class per assembly
    int num_classes = 6;
    // Minimum mean L2 distance between any two class template paths.
    double class_separation = 0.08;
};

// Four operators mirroring the recorded hand-length ratios (operator 1 is the
// training operator; 2..4 appear only in the test split).
GeneratorSpec default_generator_spec();

struct GeneratedData {
    data::Dataset dataset;
    std::vector<data::ModuleMeta> metadata;
    int t_max = 0;
};

// Deterministic in (spec, seed): same inputs give a bit-identical dataset.
// Throws ConfigError on an invalid spec (bad ranges, class templates closer
// than class_separation).
GeneratedData synth_generate(const GeneratorSpec& spec, uint64_t seed);

} // namespace seqcls::synth
