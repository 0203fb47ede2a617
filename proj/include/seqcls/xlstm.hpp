#pragma once

#include <string>
#include <vector>

#include "seqcls/config.hpp"

namespace seqcls::xlstm {

// Block kind layout for an xLSTM stack: 'm' for mLSTM, 's' for sLSTM.
// Positions are 1-based. Throws ConfigError on out-of-range positions.
std::vector<char> block_kinds(int num_blocks, const std::vector<int>& slstm_positions);

std::string kinds_to_string(const std::vector<char>& kinds);

} // namespace seqcls::xlstm
