#include "seqcls/xlstm.hpp"

#include <algorithm>

#include "seqcls/errors.hpp"

namespace seqcls::xlstm {

std::vector<char> block_kinds(int num_blocks, const std::vector<int>& slstm_positions) {
    if (num_blocks < 1) throw ConfigError("xlstm: num_blocks must be >= 1");
    std::vector<char> kinds(num_blocks, 'm');
    for (int pos : slstm_positions) {
        if (pos < 1 || pos > num_blocks)
            throw ConfigError("xlstm: sLSTM position " + std::to_string(pos) + " outside 1.." +
                              std::to_string(num_blocks));
        kinds[pos - 1] = 's';
    }
    return kinds;
}

std::string kinds_to_string(const std::vector<char>& kinds) { return std::string(kinds.begin(), kinds.end()); }

} // namespace seqcls::xlstm
