#pragma once

#include <string>
#include <vector>

#include "seqcls/config.hpp"

namespace seqcls {

// Named hyperparameter presets. paper-* presets carry the published
// zero-padded and real-padded hyperparameter sets verbatim; *-desk presets
// are scaled down (smaller dims, fewer epochs) so full experiments finish in
// minutes on a laptop, and are the defaults.
std::vector<std::string> preset_names();
ModelConfig preset(const std::string& name);

// The desk preset for an architecture/pad combination, e.g. ("transformer",
// "real") -> "real-transformer-desk".
std::string default_preset_name(const std::string& arch, const std::string& pad_kind);

// Applies JSON field overrides on top of a base config.
ModelConfig apply_overrides(ModelConfig base, const std::string& json_text);

} // namespace seqcls
