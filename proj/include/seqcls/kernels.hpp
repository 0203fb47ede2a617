#pragma once

#include <cstddef>
#include <string>

namespace seqcls::kern {

// Low-level dense kernels behind the tensor/autodiff layer. Each operation has
// a scalar reference implementation and, on x86-64, an AVX2+FMA variant. The
// active table is picked once at startup from CPUID, overridable with the
// environment variable SEQCLS_SIMD=scalar|avx2|auto.
//
// Determinism contract: every kernel uses a fixed reduction order, so results
// are bit-stable run to run for a fixed table. The AVX2 gemm contracts k in
// the same order as the scalar one but uses FMA, so the two tables agree to a
// few ulp rather than bitwise; the equivalence tests pin that bound.
// Transcendentals (exp/tanh/sigmoid) are shared scalar libm code on both
// tables, keeping model outputs independent of the SIMD level.

struct Kernels {
    // gemm_nn: C[m,n] (+)= A[m,k] * B[k,n]
    void (*gemm_nn)(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
    // gemm_tn: C[m,n] (+)= A^T * B where A is [k,m]
    void (*gemm_tn)(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
    // gemm_nt: C[m,n] (+)= A * B^T where B is [n,k]
    void (*gemm_nt)(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);

    void (*add)(const double* a, const double* b, double* out, size_t n);
    void (*sub)(const double* a, const double* b, double* out, size_t n);
    void (*mul)(const double* a, const double* b, double* out, size_t n);
    // out += a * b
    void (*mul_acc)(const double* a, const double* b, double* out, size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, size_t n);
    void (*scale)(double alpha, double* x, size_t n);

    double (*sum)(const double* x, size_t n);
    double (*dot)(const double* a, const double* b, size_t n);
    double (*max)(const double* x, size_t n); // n >= 1
    // sum of (x[i] - shift)^2
    double (*sq_dev_sum)(const double* x, double shift, size_t n);
};

extern const Kernels kScalar;
#if defined(__x86_64__) || defined(_M_X64)
extern const Kernels kAvx2;
#endif

// Table selected for this process. Stable for the lifetime of the process.
const Kernels& active();
const std::string& active_name();
bool avx2_available();

// Shared scalar transcendentals (used on every table).
void vsigmoid(const double* x, double* out, size_t n);
void vtanh(const double* x, double* out, size_t n);
void vexp(const double* x, double* out, size_t n);
void vlogsigmoid(const double* x, double* out, size_t n);

} // namespace seqcls::kern
