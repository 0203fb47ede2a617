#include "seqcls/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace seqcls::kern {

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
#if defined(__GNUC__) || defined(__clang__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
#else
    return false;
#endif
}

namespace {

struct Selection {
    const Kernels* table;
    std::string name;
};

Selection select() {
    const char* env = std::getenv("SEQCLS_SIMD");
    std::string mode = env ? env : "auto";
    if (mode == "scalar") return {&kScalar, "scalar"};
#if defined(__x86_64__) || defined(_M_X64)
    if (mode == "avx2") {
        if (!avx2_available()) throw std::runtime_error("SEQCLS_SIMD=avx2 requested but CPU lacks AVX2/FMA");
        return {&kAvx2, "avx2"};
    }
    if (mode == "auto") {
        if (avx2_available()) return {&kAvx2, "avx2"};
        return {&kScalar, "scalar"};
    }
#else
    if (mode == "auto") return {&kScalar, "scalar"};
    if (mode == "avx2") throw std::runtime_error("SEQCLS_SIMD=avx2 requested on a non-x86 build");
#endif
    throw std::runtime_error("unknown SEQCLS_SIMD value: " + mode + " (expected scalar|avx2|auto)");
}

const Selection& selection() {
    static const Selection s = select();
    return s;
}

} // namespace

const Kernels& active() { return *selection().table; }

const std::string& active_name() { return selection().name; }

} // namespace seqcls::kern
