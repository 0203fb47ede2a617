#include "seqcls/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace seqcls::kern {

namespace {

void gemm_nn_scalar(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, sizeof(double) * static_cast<size_t>(m) * n);
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<size_t>(i) * k;
        double* crow = c + static_cast<size_t>(i) * n;
        for (int l = 0; l < k; ++l) {
            const double av = arow[l];
            const double* brow = b + static_cast<size_t>(l) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// A is [k,m], C = A^T B
void gemm_tn_scalar(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, sizeof(double) * static_cast<size_t>(m) * n);
    for (int l = 0; l < k; ++l) {
        const double* arow = a + static_cast<size_t>(l) * m;
        const double* brow = b + static_cast<size_t>(l) * n;
        for (int i = 0; i < m; ++i) {
            const double av = arow[i];
            double* crow = c + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// B is [n,k], C = A B^T
void gemm_nt_scalar(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<size_t>(i) * k;
        double* crow = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* brow = b + static_cast<size_t>(j) * k;
            double acc = 0.0;
            for (int l = 0; l < k; ++l) acc += arow[l] * brow[l];
            if (accumulate)
                crow[j] += acc;
            else
                crow[j] = acc;
        }
    }
}

void add_scalar(const double* a, const double* b, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_scalar(const double* a, const double* b, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_scalar(const double* a, const double* b, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc_scalar(const double* a, const double* b, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] += a[i] * b[i];
}

void axpy_scalar(double alpha, const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, size_t n) {
    for (size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double sum_scalar(const double* x, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double dot_scalar(const double* a, const double* b, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double max_scalar(const double* x, size_t n) {
    double m = x[0];
    for (size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
    return m;
}

double sq_dev_sum_scalar(const double* x, double shift, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = x[i] - shift;
        acc += d * d;
    }
    return acc;
}

} // namespace

const Kernels kScalar = {
    gemm_nn_scalar, gemm_tn_scalar, gemm_nt_scalar,
    add_scalar, sub_scalar, mul_scalar, mul_acc_scalar,
    axpy_scalar, scale_scalar,
    sum_scalar, dot_scalar, max_scalar, sq_dev_sum_scalar,
};

void vsigmoid(const double* x, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void vtanh(const double* x, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = std::tanh(x[i]);
}

void vexp(const double* x, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

// log(sigmoid(x)) = -log1p(exp(-x)), computed from the stable side.
void vlogsigmoid(const double* x, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        const double v = x[i];
        out[i] = v >= 0.0 ? -std::log1p(std::exp(-v)) : v - std::log1p(std::exp(v));
    }
}

} // namespace seqcls::kern
