#pragma once

#include <cstdint>
#include <vector>

#include "seqcls/tensor.hpp"

namespace seqcls::ad {

// Reverse-mode tape. Values are immutable tensors indexed by id; every
// non-leaf value records the operation that produced it, so backward() is a
// single reverse sweep in construction order. One tape per forward pass, one
// thread per tape. backward() is deterministic: fixed node order, fixed
// reduction order inside every kernel.

enum class Op : uint8_t {
    Leaf,
    MatMul,
    Add,
    Sub,
    Mul,
    Div,
    AddRowVec,
    Scale,
    MulScalarV,
    DivScalarV,
    Sigmoid,
    Tanh,
    Exp,
    LogSigmoid,
    Relu,
    Maximum,
    Detach,
    SoftmaxRows,
    LayerNormRows,
    SumAll,
    MeanRowsMasked,
    SliceRows,
    SliceCols,
    ConcatRows,
    ConcatCols,
    Transpose,
    Reshape,
    ShiftRowsDown,
    RowMaskZero,
    Dropout,
    CrossEntropy,
    ClampAbsMin1,
};

class Tape;

struct Value {
    int id = -1;
    Tape* tape = nullptr;

    bool valid() const { return id >= 0 && tape != nullptr; }
    const Tensor& val() const;
    int rows() const { return val().rows(); }
    int cols() const { return val().cols(); }
};

struct Node {
    Op op = Op::Leaf;
    int a = -1, b = -1, c = -1;  // primary inputs
    std::vector<int> list;       // concat inputs
    int out = -1;
    int i0 = 0, i1 = 0;          // slice bounds / label / shift amount
    double x0 = 0.0;             // scale factor / layer-norm eps
    std::vector<uint8_t> mask;   // column or row masks (1 = active)
    Tensor saved;                // op-specific stash (dropout mask, LN stats)
};

class Tape {
  public:
    Value leaf(Tensor t);
    // Leaf marked trainable; its id is listed in param_ids().
    Value param(Tensor t);

    const Tensor& val(const Value& v) const { return vals_[v.id]; }
    const Tensor& val(int id) const { return vals_[id]; }

    // Runs the reverse sweep from a scalar loss. Throws ContractError if the
    // loss is not [1,1]. May be called once per tape.
    void backward(const Value& loss);

    // Gradient for a value; zero tensor of matching shape if the value did not
    // influence the loss. Only valid after backward().
    const Tensor& grad(const Value& v) const;

    const std::vector<int>& param_ids() const { return params_; }
    size_t num_nodes() const { return nodes_.size(); }
    size_t num_values() const { return vals_.size(); }

    // Internal: appends a node whose output is `out_value`. Used by the op
    // builders below.
    Value push(Node n, Tensor out_value);

  private:
    void ensure_grad(int id);
    void backprop_node(const Node& n);

    std::vector<Tensor> vals_;
    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    std::vector<int> params_;
    bool ran_backward_ = false;
};

// --- op builders -----------------------------------------------------------

Value matmul(Value a, Value b);
Value add(Value a, Value b);
Value sub(Value a, Value b);
Value mul(Value a, Value b);
Value div(Value a, Value b);
// X[r,c] + broadcast v[1,c]
Value add_rowvec(Value x, Value v);
Value scale(Value x, double alpha);
// X * s and X / s where s is a [1,1] graph value
Value mul_scalar(Value x, Value s);
Value div_scalar(Value x, Value s);
Value sigmoid(Value x);
Value tanh(Value x);
Value exp(Value x);
Value logsigmoid(Value x);
Value relu(Value x);
// Elementwise max; ties route the gradient to the first argument.
Value maximum(Value a, Value b);
// Identity value, gradient barrier.
Value detach(Value x);
// Stable row softmax (max-subtraction). Empty mask = all columns active;
// masked columns produce exact zeros and receive no gradient.
Value softmax_rows(Value x, std::vector<uint8_t> col_mask = {});
// Per-row normalization over the feature axis, then affine by gain/bias [1,c].
Value layer_norm_rows(Value x, Value gain, Value bias, double eps);
Value sum_all(Value x);
// Mean over rows flagged 1 in row_mask (empty = all rows). Throws
// ContractError when no row is active.
Value mean_rows_masked(Value x, std::vector<uint8_t> row_mask = {});
Value slice_rows(Value x, int r0, int r1);
Value slice_cols(Value x, int c0, int c1);
Value concat_rows(const std::vector<Value>& xs);
Value concat_cols(const std::vector<Value>& xs);
Value transpose(Value x);
// Row-major reinterpretation; element count must be preserved.
Value reshape(Value x, int rows, int cols);
// Rows move down by k; vacated top rows are zero.
Value shift_rows_down(Value x, int k);
// Zeroes rows flagged 0 in row_mask.
Value row_mask_zero(Value x, std::vector<uint8_t> row_mask);
// Inverted dropout with a precomputed mask holding 0 or 1/(1-rate) entries.
Value dropout(Value x, Tensor mask);
// -log(max(p[0,label], 1e-12)) for a [1,C] posterior row.
Value cross_entropy(Value posterior, int label);
// max(|x|, 1) elementwise (mLSTM readout denominator).
Value clamp_abs_min1(Value x);

} // namespace seqcls::ad
