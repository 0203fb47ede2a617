#pragma once

#include <memory>
#include <string>

#include "seqcls/models.hpp"

namespace seqcls::train {

// Versioned binary container: magic line, JSON header (config, architecture
// description, tensor directory, parameter hash), then raw little-endian
// doubles in store order. load(save(m)) reproduces forward outputs bitwise.
void save_checkpoint(const model::Classifier& cls, const std::string& path);
std::unique_ptr<model::Classifier> load_checkpoint(const std::string& path);

// FNV-1a over the raw parameter bytes in store order.
uint64_t param_hash(const ParamStore& params);

} // namespace seqcls::train
