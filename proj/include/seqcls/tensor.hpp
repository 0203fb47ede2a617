#pragma once

#include <cmath>
#include <initializer_list>
#include <string>
#include <vector>

#include "seqcls/errors.hpp"
#include "seqcls/rng.hpp"

namespace seqcls {

// Dense row-major 2-D tensor of 64-bit floats. Vectors are [1, n] rows,
// scalars are [1, 1]. Immutable by convention once handed to the graph.
class Tensor {
  public:
    Tensor() : rows_(0), cols_(0) {}
    Tensor(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, 0.0) {
        if (rows < 0 || cols < 0) throw ShapeError("Tensor: negative dimension");
    }
    Tensor(int rows, int cols, std::vector<double> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (static_cast<size_t>(rows) * cols != data_.size())
            throw ShapeError("Tensor: data size " + std::to_string(data_.size()) + " does not match shape " +
                             shape_str(rows, cols));
    }
    Tensor(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = static_cast<int>(rows.size());
        cols_ = rows_ > 0 ? static_cast<int>(rows.begin()->size()) : 0;
        data_.reserve(static_cast<size_t>(rows_) * cols_);
        for (const auto& r : rows) {
            if (static_cast<int>(r.size()) != cols_) throw ShapeError("Tensor: ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Tensor zeros(int rows, int cols) { return Tensor(rows, cols); }

    static Tensor full(int rows, int cols, double v) {
        Tensor t(rows, cols);
        std::fill(t.data_.begin(), t.data_.end(), v);
        return t;
    }

    static Tensor scalar(double v) { return full(1, 1, v); }

    static Tensor identity(int n) {
        Tensor t(n, n);
        for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
        return t;
    }

    static Tensor row(std::vector<double> v) {
        const int n = static_cast<int>(v.size());
        return Tensor(1, n, std::move(v));
    }

    // Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], the recurrent-net default.
    static Tensor init_uniform(int rows, int cols, int fan_in, Rng& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Tensor t(rows, cols);
        for (double& v : t.data_) v = rng.uniform(-bound, bound);
        return t;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return data_.size(); }
    std::vector<int> shape() const { return {rows_, cols_}; }

    double& at(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double at(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const std::vector<double>& vec() const { return data_; }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const { return shape_str(rows_, cols_); }

    static std::string shape_str(int r, int c) {
        return "[" + std::to_string(r) + "," + std::to_string(c) + "]";
    }

  private:
    int rows_;
    int cols_;
    std::vector<double> data_;
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

} // namespace seqcls
