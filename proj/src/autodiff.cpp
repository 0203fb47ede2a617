#include "seqcls/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "seqcls/errors.hpp"
#include "seqcls/kernels.hpp"

namespace seqcls::ad {

using kern::active;

const Tensor& Value::val() const { return tape->val(*this); }

Value Tape::leaf(Tensor t) {
    vals_.push_back(std::move(t));
    Node n;
    n.op = Op::Leaf;
    n.out = static_cast<int>(vals_.size()) - 1;
    nodes_.push_back(std::move(n));
    return Value{n.out, this};
}

Value Tape::param(Tensor t) {
    Value v = leaf(std::move(t));
    params_.push_back(v.id);
    return v;
}

Value Tape::push(Node n, Tensor out_value) {
    vals_.push_back(std::move(out_value));
    n.out = static_cast<int>(vals_.size()) - 1;
    nodes_.push_back(std::move(n));
    return Value{static_cast<int>(vals_.size()) - 1, this};
}

void Tape::ensure_grad(int id) {
    if (grads_[id].size() == 0 && vals_[id].size() > 0)
        grads_[id] = Tensor::zeros(vals_[id].rows(), vals_[id].cols());
}

const Tensor& Tape::grad(const Value& v) const {
    static const Tensor empty;
    if (!ran_backward_) throw ContractError("Tape::grad called before backward()");
    if (grads_[v.id].size() == 0) {
        // Value did not influence the loss; return zeros lazily.
        const_cast<Tape*>(this)->ensure_grad(v.id);
    }
    return grads_[v.id].size() ? grads_[v.id] : empty;
}

void Tape::backward(const Value& loss) {
    const Tensor& lv = vals_[loss.id];
    if (lv.rows() != 1 || lv.cols() != 1)
        throw ContractError("backward: loss must be scalar [1,1], got " + lv.shape_str());
    grads_.assign(vals_.size(), Tensor());
    grads_[loss.id] = Tensor::scalar(1.0);
    ran_backward_ = true;
    for (size_t i = nodes_.size(); i-- > 0;) {
        const Node& n = nodes_[i];
        if (n.op == Op::Leaf) continue;
        if (grads_[n.out].size() == 0) continue; // dead branch
        backprop_node(n);
    }
}

namespace {

void check_2d_inner(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dimensions disagree " + a.shape_str() + " x " + b.shape_str());
}

Tensor colsum(const Tensor& x) {
    Tensor out(1, x.cols());
    for (int i = 0; i < x.rows(); ++i)
        active().add(out.data(), x.data() + static_cast<size_t>(i) * x.cols(), out.data(), x.cols());
    return out;
}

} // namespace

void Tape::backprop_node(const Node& n) {
    const Tensor& y = vals_[n.out];
    const Tensor& dy = grads_[n.out];
    switch (n.op) {
        case Op::Leaf:
            break;
        case Op::MatMul: {
            const Tensor& a = vals_[n.a];
            const Tensor& b = vals_[n.b];
            ensure_grad(n.a);
            ensure_grad(n.b);
            // dA += dY B^T ; dB += A^T dY
            active().gemm_nt(dy.data(), b.data(), grads_[n.a].data(), a.rows(), b.cols(), b.rows(), true);
            active().gemm_tn(a.data(), dy.data(), grads_[n.b].data(), a.cols(), a.rows(), dy.cols(), true);
            break;
        }
        case Op::Add: {
            ensure_grad(n.a);
            ensure_grad(n.b);
            active().add(grads_[n.a].data(), dy.data(), grads_[n.a].data(), dy.size());
            active().add(grads_[n.b].data(), dy.data(), grads_[n.b].data(), dy.size());
            break;
        }
        case Op::Sub: {
            ensure_grad(n.a);
            ensure_grad(n.b);
            active().add(grads_[n.a].data(), dy.data(), grads_[n.a].data(), dy.size());
            active().sub(grads_[n.b].data(), dy.data(), grads_[n.b].data(), dy.size());
            break;
        }
        case Op::Mul: {
            ensure_grad(n.a);
            ensure_grad(n.b);
            active().mul_acc(dy.data(), vals_[n.b].data(), grads_[n.a].data(), dy.size());
            active().mul_acc(dy.data(), vals_[n.a].data(), grads_[n.b].data(), dy.size());
            break;
        }
        case Op::Div: {
            const Tensor& a = vals_[n.a];
            const Tensor& b = vals_[n.b];
            ensure_grad(n.a);
            ensure_grad(n.b);
            Tensor& da = grads_[n.a];
            Tensor& db = grads_[n.b];
            for (size_t i = 0; i < dy.size(); ++i) {
                da[i] += dy[i] / b[i];
                db[i] -= dy[i] * a[i] / (b[i] * b[i]);
            }
            break;
        }
        case Op::AddRowVec: {
            ensure_grad(n.a);
            ensure_grad(n.b);
            active().add(grads_[n.a].data(), dy.data(), grads_[n.a].data(), dy.size());
            Tensor cs = colsum(dy);
            active().add(grads_[n.b].data(), cs.data(), grads_[n.b].data(), cs.size());
            break;
        }
        case Op::Scale: {
            ensure_grad(n.a);
            active().axpy(n.x0, dy.data(), grads_[n.a].data(), dy.size());
            break;
        }
        case Op::MulScalarV: {
            const Tensor& x = vals_[n.a];
            const double s = vals_[n.b][0];
            ensure_grad(n.a);
            ensure_grad(n.b);
            active().axpy(s, dy.data(), grads_[n.a].data(), dy.size());
            grads_[n.b][0] += active().dot(dy.data(), x.data(), dy.size());
            break;
        }
        case Op::DivScalarV: {
            const Tensor& x = vals_[n.a];
            const double s = vals_[n.b][0];
            ensure_grad(n.a);
            ensure_grad(n.b);
            active().axpy(1.0 / s, dy.data(), grads_[n.a].data(), dy.size());
            grads_[n.b][0] -= active().dot(dy.data(), x.data(), dy.size()) / (s * s);
            break;
        }
        case Op::Sigmoid: {
            ensure_grad(n.a);
            Tensor& da = grads_[n.a];
            for (size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * y[i] * (1.0 - y[i]);
            break;
        }
        case Op::Tanh: {
            ensure_grad(n.a);
            Tensor& da = grads_[n.a];
            for (size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * (1.0 - y[i] * y[i]);
            break;
        }
        case Op::Exp: {
            ensure_grad(n.a);
            active().mul_acc(dy.data(), y.data(), grads_[n.a].data(), dy.size());
            break;
        }
        case Op::LogSigmoid: {
            // d/dx log sigmoid(x) = 1 - sigmoid(x) = 1 - e^y
            ensure_grad(n.a);
            Tensor& da = grads_[n.a];
            for (size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * (1.0 - std::exp(y[i]));
            break;
        }
        case Op::Relu: {
            const Tensor& x = vals_[n.a];
            ensure_grad(n.a);
            Tensor& da = grads_[n.a];
            for (size_t i = 0; i < dy.size(); ++i)
                if (x[i] > 0.0) da[i] += dy[i];
            break;
        }
        case Op::Maximum: {
            const Tensor& a = vals_[n.a];
            const Tensor& b = vals_[n.b];
            ensure_grad(n.a);
            ensure_grad(n.b);
            Tensor& da = grads_[n.a];
            Tensor& db = grads_[n.b];
            for (size_t i = 0; i < dy.size(); ++i) {
                if (a[i] >= b[i])
                    da[i] += dy[i];
                else
                    db[i] += dy[i];
            }
            break;
        }
        case Op::Detach:
            break;
        case Op::SoftmaxRows: {
            ensure_grad(n.a);
            Tensor& da = grads_[n.a];
            const int c = y.cols();
            for (int r = 0; r < y.rows(); ++r) {
                const double* yr = y.data() + static_cast<size_t>(r) * c;
                const double* dr = dy.data() + static_cast<size_t>(r) * c;
                double* ar = da.data() + static_cast<size_t>(r) * c;
                const double g = active().dot(dr, yr, c);
                for (int j = 0; j < c; ++j) ar[j] += yr[j] * (dr[j] - g);
            }
            break;
        }
        case Op::LayerNormRows: {
            const Tensor& x = vals_[n.a];
            const Tensor& gain = vals_[n.b];
            ensure_grad(n.a);
            ensure_grad(n.b);
            ensure_grad(n.c);
            Tensor& dx = grads_[n.a];
            Tensor& dg = grads_[n.b];
            Tensor& db = grads_[n.c];
            const int c = x.cols();
            std::vector<double> xhat(c), dxhat(c);
            for (int r = 0; r < x.rows(); ++r) {
                const double mean = n.saved.at(r, 0);
                const double rstd = n.saved.at(r, 1);
                const double* xr = x.data() + static_cast<size_t>(r) * c;
                const double* dr = dy.data() + static_cast<size_t>(r) * c;
                double* dxr = dx.data() + static_cast<size_t>(r) * c;
                for (int j = 0; j < c; ++j) {
                    xhat[j] = (xr[j] - mean) * rstd;
                    dxhat[j] = dr[j] * gain[j];
                    dg[j] += dr[j] * xhat[j];
                    db[j] += dr[j];
                }
                const double m1 = active().sum(dxhat.data(), c) / c;
                const double m2 = active().dot(dxhat.data(), xhat.data(), c) / c;
                for (int j = 0; j < c; ++j) dxr[j] += rstd * (dxhat[j] - m1 - xhat[j] * m2);
            }
            break;
        }
        case Op::SumAll: {
            ensure_grad(n.a);
            Tensor& da = grads_[n.a];
            const double g = dy[0];
            for (size_t i = 0; i < da.size(); ++i) da[i] += g;
            break;
        }
        case Op::MeanRowsMasked: {
            const Tensor& x = vals_[n.a];
            ensure_grad(n.a);
            Tensor& dx = grads_[n.a];
            const int c = x.cols();
            const double inv = 1.0 / n.x0; // x0 holds the active-row count
            for (int r = 0; r < x.rows(); ++r) {
                if (!n.mask.empty() && !n.mask[r]) continue;
                active().axpy(inv, dy.data(), dx.data() + static_cast<size_t>(r) * c, c);
            }
            break;
        }
        case Op::SliceRows: {
            const Tensor& x = vals_[n.a];
            ensure_grad(n.a);
            double* dst = grads_[n.a].data() + static_cast<size_t>(n.i0) * x.cols();
            active().add(dst, dy.data(), dst, dy.size());
            break;
        }
        case Op::SliceCols: {
            const Tensor& x = vals_[n.a];
            ensure_grad(n.a);
            Tensor& dx = grads_[n.a];
            for (int r = 0; r < dy.rows(); ++r) {
                double* dst = dx.data() + static_cast<size_t>(r) * x.cols() + n.i0;
                const double* src = dy.data() + static_cast<size_t>(r) * dy.cols();
                active().add(dst, src, dst, dy.cols());
            }
            break;
        }
        case Op::ConcatRows: {
            int r = 0;
            for (int src_id : n.list) {
                ensure_grad(src_id);
                const Tensor& part = vals_[src_id];
                double* dst = grads_[src_id].data();
                const double* src = dy.data() + static_cast<size_t>(r) * dy.cols();
                active().add(dst, src, dst, part.size());
                r += part.rows();
            }
            break;
        }
        case Op::ConcatCols: {
            int c0 = 0;
            for (int src_id : n.list) {
                ensure_grad(src_id);
                Tensor& dpart = grads_[src_id];
                const Tensor& part = vals_[src_id];
                for (int r = 0; r < part.rows(); ++r) {
                    double* dst = dpart.data() + static_cast<size_t>(r) * part.cols();
                    const double* src = dy.data() + static_cast<size_t>(r) * dy.cols() + c0;
                    active().add(dst, src, dst, part.cols());
                }
                c0 += part.cols();
            }
            break;
        }
        case Op::Transpose: {
            ensure_grad(n.a);
            Tensor& dx = grads_[n.a];
            for (int r = 0; r < dy.rows(); ++r)
                for (int c = 0; c < dy.cols(); ++c) dx.at(c, r) += dy.at(r, c);
            break;
        }
        case Op::Reshape: {
            ensure_grad(n.a);
            active().add(grads_[n.a].data(), dy.data(), grads_[n.a].data(), dy.size());
            break;
        }
        case Op::ShiftRowsDown: {
            ensure_grad(n.a);
            Tensor& dx = grads_[n.a];
            const int k = n.i0;
            for (int r = k; r < dy.rows(); ++r) {
                double* dst = dx.data() + static_cast<size_t>(r - k) * dx.cols();
                const double* src = dy.data() + static_cast<size_t>(r) * dy.cols();
                active().add(dst, src, dst, dx.cols());
            }
            break;
        }
        case Op::RowMaskZero: {
            ensure_grad(n.a);
            Tensor& dx = grads_[n.a];
            for (int r = 0; r < dy.rows(); ++r) {
                if (!n.mask[r]) continue;
                double* dst = dx.data() + static_cast<size_t>(r) * dx.cols();
                const double* src = dy.data() + static_cast<size_t>(r) * dy.cols();
                active().add(dst, src, dst, dy.cols());
            }
            break;
        }
        case Op::Dropout: {
            ensure_grad(n.a);
            active().mul_acc(dy.data(), n.saved.data(), grads_[n.a].data(), dy.size());
            break;
        }
        case Op::CrossEntropy: {
            const Tensor& p = vals_[n.a];
            ensure_grad(n.a);
            const double pv = p[n.i0];
            if (pv > 1e-12) grads_[n.a][n.i0] -= dy[0] / pv;
            // Clamped region: the loss is constant there, gradient 0.
            break;
        }
        case Op::ClampAbsMin1: {
            const Tensor& x = vals_[n.a];
            ensure_grad(n.a);
            Tensor& dx = grads_[n.a];
            for (size_t i = 0; i < dy.size(); ++i) {
                if (std::abs(x[i]) > 1.0) dx[i] += dy[i] * (x[i] > 0.0 ? 1.0 : -1.0);
            }
            break;
        }
    }
}

// --- op builders -------------------------------------------------------------

namespace {

Tape* same_tape(const Value& a, const Value& b) {
    if (a.tape != b.tape) throw ContractError("values belong to different tapes");
    return a.tape;
}

} // namespace

Value matmul(Value a, Value b) {
    Tape* t = same_tape(a, b);
    const Tensor& av = a.val();
    const Tensor& bv = b.val();
    check_2d_inner(av, bv);
    Tensor out(av.rows(), bv.cols());
    active().gemm_nn(av.data(), bv.data(), out.data(), av.rows(), av.cols(), bv.cols(), false);
    Node n;
    n.op = Op::MatMul;
    n.a = a.id;
    n.b = b.id;
    return t->push(std::move(n), std::move(out));
}

namespace {

Value elementwise2(Op op, Value a, Value b, const char* name) {
    Tape* t = same_tape(a, b);
    const Tensor& av = a.val();
    const Tensor& bv = b.val();
    check_same_shape(av, bv, name);
    Tensor out(av.rows(), av.cols());
    switch (op) {
        case Op::Add: active().add(av.data(), bv.data(), out.data(), out.size()); break;
        case Op::Sub: active().sub(av.data(), bv.data(), out.data(), out.size()); break;
        case Op::Mul: active().mul(av.data(), bv.data(), out.data(), out.size()); break;
        case Op::Div:
            for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] / bv[i];
            break;
        case Op::Maximum:
            for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] >= bv[i] ? av[i] : bv[i];
            break;
        default: throw ContractError("elementwise2: bad op");
    }
    Node n;
    n.op = op;
    n.a = a.id;
    n.b = b.id;
    return t->push(std::move(n), std::move(out));
}

Value elementwise1(Op op, Value x) {
    const Tensor& xv = x.val();
    Tensor out(xv.rows(), xv.cols());
    switch (op) {
        case Op::Sigmoid: kern::vsigmoid(xv.data(), out.data(), out.size()); break;
        case Op::Tanh: kern::vtanh(xv.data(), out.data(), out.size()); break;
        case Op::Exp: kern::vexp(xv.data(), out.data(), out.size()); break;
        case Op::LogSigmoid: kern::vlogsigmoid(xv.data(), out.data(), out.size()); break;
        case Op::Relu:
            for (size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
            break;
        case Op::Detach: out = xv; break;
        case Op::ClampAbsMin1:
            for (size_t i = 0; i < out.size(); ++i) {
                const double m = std::abs(xv[i]);
                out[i] = m > 1.0 ? m : 1.0;
            }
            break;
        default: throw ContractError("elementwise1: bad op");
    }
    Node n;
    n.op = op;
    n.a = x.id;
    return x.tape->push(std::move(n), std::move(out));
}

} // namespace

Value add(Value a, Value b) { return elementwise2(Op::Add, a, b, "add"); }
Value sub(Value a, Value b) { return elementwise2(Op::Sub, a, b, "sub"); }
Value mul(Value a, Value b) { return elementwise2(Op::Mul, a, b, "mul"); }
Value div(Value a, Value b) { return elementwise2(Op::Div, a, b, "div"); }
Value maximum(Value a, Value b) { return elementwise2(Op::Maximum, a, b, "maximum"); }
Value sigmoid(Value x) { return elementwise1(Op::Sigmoid, x); }
Value tanh(Value x) { return elementwise1(Op::Tanh, x); }
Value exp(Value x) { return elementwise1(Op::Exp, x); }
Value logsigmoid(Value x) { return elementwise1(Op::LogSigmoid, x); }
Value relu(Value x) { return elementwise1(Op::Relu, x); }
Value detach(Value x) { return elementwise1(Op::Detach, x); }
Value clamp_abs_min1(Value x) { return elementwise1(Op::ClampAbsMin1, x); }

Value add_rowvec(Value x, Value v) {
    Tape* t = same_tape(x, v);
    const Tensor& xv = x.val();
    const Tensor& vv = v.val();
    if (vv.rows() != 1 || vv.cols() != xv.cols())
        throw ShapeError("add_rowvec: bias " + vv.shape_str() + " does not broadcast over " + xv.shape_str());
    Tensor out(xv.rows(), xv.cols());
    for (int r = 0; r < xv.rows(); ++r)
        active().add(xv.data() + static_cast<size_t>(r) * xv.cols(), vv.data(),
                     out.data() + static_cast<size_t>(r) * xv.cols(), xv.cols());
    Node n;
    n.op = Op::AddRowVec;
    n.a = x.id;
    n.b = v.id;
    return t->push(std::move(n), std::move(out));
}

Value scale(Value x, double alpha) {
    const Tensor& xv = x.val();
    Tensor out = xv;
    active().scale(alpha, out.data(), out.size());
    Node n;
    n.op = Op::Scale;
    n.a = x.id;
    n.x0 = alpha;
    return x.tape->push(std::move(n), std::move(out));
}

namespace {

Value scalar_broadcast(Op op, Value x, Value s, const char* name) {
    Tape* t = same_tape(x, s);
    const Tensor& sv = s.val();
    if (sv.rows() != 1 || sv.cols() != 1)
        throw ShapeError(std::string(name) + ": scalar operand must be [1,1], got " + sv.shape_str());
    const Tensor& xv = x.val();
    Tensor out = xv;
    const double sc = op == Op::MulScalarV ? sv[0] : 1.0 / sv[0];
    active().scale(sc, out.data(), out.size());
    Node n;
    n.op = op;
    n.a = x.id;
    n.b = s.id;
    return t->push(std::move(n), std::move(out));
}

} // namespace

Value mul_scalar(Value x, Value s) { return scalar_broadcast(Op::MulScalarV, x, s, "mul_scalar"); }
Value div_scalar(Value x, Value s) { return scalar_broadcast(Op::DivScalarV, x, s, "div_scalar"); }

Value softmax_rows(Value x, std::vector<uint8_t> col_mask) {
    const Tensor& xv = x.val();
    const int c = xv.cols();
    if (c < 1) throw ShapeError("softmax_rows: needs at least one column");
    if (!col_mask.empty() && static_cast<int>(col_mask.size()) != c)
        throw ShapeError("softmax_rows: mask length " + std::to_string(col_mask.size()) + " vs cols " +
                         std::to_string(c));
    Tensor out(xv.rows(), c);
    for (int r = 0; r < xv.rows(); ++r) {
        const double* xr = xv.data() + static_cast<size_t>(r) * c;
        double* yr = out.data() + static_cast<size_t>(r) * c;
        double m = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < c; ++j)
            if (col_mask.empty() || col_mask[j])
                m = std::max(m, xr[j]);
        if (!std::isfinite(m)) throw ContractError("softmax_rows: no active column in row " + std::to_string(r));
        double s = 0.0;
        for (int j = 0; j < c; ++j) {
            if (!col_mask.empty() && !col_mask[j]) {
                yr[j] = 0.0;
                continue;
            }
            yr[j] = std::exp(xr[j] - m);
            s += yr[j];
        }
        const double inv = 1.0 / s;
        for (int j = 0; j < c; ++j) yr[j] *= inv;
    }
    Node n;
    n.op = Op::SoftmaxRows;
    n.a = x.id;
    n.mask = std::move(col_mask);
    return x.tape->push(std::move(n), std::move(out));
}

Value layer_norm_rows(Value x, Value gain, Value bias, double eps) {
    Tape* t = same_tape(x, gain);
    same_tape(gain, bias);
    const Tensor& xv = x.val();
    const Tensor& gv = gain.val();
    const Tensor& bv = bias.val();
    const int c = xv.cols();
    if (gv.rows() != 1 || gv.cols() != c || bv.rows() != 1 || bv.cols() != c)
        throw ShapeError("layer_norm_rows: gain/bias must be [1," + std::to_string(c) + "], got " +
                         gv.shape_str() + " and " + bv.shape_str());
    Tensor out(xv.rows(), c);
    Tensor stats(xv.rows(), 2);
    for (int r = 0; r < xv.rows(); ++r) {
        const double* xr = xv.data() + static_cast<size_t>(r) * c;
        double* yr = out.data() + static_cast<size_t>(r) * c;
        const double mean = active().sum(xr, c) / c;
        const double var = active().sq_dev_sum(xr, mean, c) / c;
        const double rstd = 1.0 / std::sqrt(var + eps);
        stats.at(r, 0) = mean;
        stats.at(r, 1) = rstd;
        for (int j = 0; j < c; ++j) yr[j] = (xr[j] - mean) * rstd * gv[j] + bv[j];
    }
    Node n;
    n.op = Op::LayerNormRows;
    n.a = x.id;
    n.b = gain.id;
    n.c = bias.id;
    n.x0 = eps;
    n.saved = std::move(stats);
    return t->push(std::move(n), std::move(out));
}

Value sum_all(Value x) {
    const Tensor& xv = x.val();
    Tensor out = Tensor::scalar(active().sum(xv.data(), xv.size()));
    Node n;
    n.op = Op::SumAll;
    n.a = x.id;
    return x.tape->push(std::move(n), std::move(out));
}

Value mean_rows_masked(Value x, std::vector<uint8_t> row_mask) {
    const Tensor& xv = x.val();
    if (!row_mask.empty() && static_cast<int>(row_mask.size()) != xv.rows())
        throw ShapeError("mean_rows_masked: mask length vs rows mismatch");
    int cnt = 0;
    if (row_mask.empty())
        cnt = xv.rows();
    else
        for (uint8_t m : row_mask) cnt += m ? 1 : 0;
    if (cnt == 0) throw ContractError("mean_rows_masked: empty unmasked region");
    Tensor out(1, xv.cols());
    for (int r = 0; r < xv.rows(); ++r) {
        if (!row_mask.empty() && !row_mask[r]) continue;
        active().add(out.data(), xv.data() + static_cast<size_t>(r) * xv.cols(), out.data(), xv.cols());
    }
    active().scale(1.0 / cnt, out.data(), out.size());
    Node n;
    n.op = Op::MeanRowsMasked;
    n.a = x.id;
    n.x0 = cnt;
    n.mask = std::move(row_mask);
    return x.tape->push(std::move(n), std::move(out));
}

Value slice_rows(Value x, int r0, int r1) {
    const Tensor& xv = x.val();
    if (r0 < 0 || r1 > xv.rows() || r0 >= r1)
        throw ShapeError("slice_rows: [" + std::to_string(r0) + "," + std::to_string(r1) + ") of " + xv.shape_str());
    Tensor out(r1 - r0, xv.cols());
    std::memcpy(out.data(), xv.data() + static_cast<size_t>(r0) * xv.cols(), sizeof(double) * out.size());
    Node n;
    n.op = Op::SliceRows;
    n.a = x.id;
    n.i0 = r0;
    n.i1 = r1;
    return x.tape->push(std::move(n), std::move(out));
}

Value slice_cols(Value x, int c0, int c1) {
    const Tensor& xv = x.val();
    if (c0 < 0 || c1 > xv.cols() || c0 >= c1)
        throw ShapeError("slice_cols: [" + std::to_string(c0) + "," + std::to_string(c1) + ") of " + xv.shape_str());
    Tensor out(xv.rows(), c1 - c0);
    for (int r = 0; r < xv.rows(); ++r)
        std::memcpy(out.data() + static_cast<size_t>(r) * out.cols(),
                    xv.data() + static_cast<size_t>(r) * xv.cols() + c0, sizeof(double) * out.cols());
    Node n;
    n.op = Op::SliceCols;
    n.a = x.id;
    n.i0 = c0;
    n.i1 = c1;
    return x.tape->push(std::move(n), std::move(out));
}

Value concat_rows(const std::vector<Value>& xs) {
    if (xs.empty()) throw ContractError("concat_rows: empty list");
    Tape* t = xs[0].tape;
    int rows = 0;
    const int cols = xs[0].val().cols();
    for (const Value& v : xs) {
        if (v.tape != t) throw ContractError("concat_rows: mixed tapes");
        if (v.val().cols() != cols) throw ShapeError("concat_rows: column mismatch");
        rows += v.val().rows();
    }
    Tensor out(rows, cols);
    Node n;
    n.op = Op::ConcatRows;
    int r = 0;
    for (const Value& v : xs) {
        const Tensor& part = v.val();
        std::memcpy(out.data() + static_cast<size_t>(r) * cols, part.data(), sizeof(double) * part.size());
        r += part.rows();
        n.list.push_back(v.id);
    }
    return t->push(std::move(n), std::move(out));
}

Value concat_cols(const std::vector<Value>& xs) {
    if (xs.empty()) throw ContractError("concat_cols: empty list");
    Tape* t = xs[0].tape;
    const int rows = xs[0].val().rows();
    int cols = 0;
    for (const Value& v : xs) {
        if (v.tape != t) throw ContractError("concat_cols: mixed tapes");
        if (v.val().rows() != rows) throw ShapeError("concat_cols: row mismatch");
        cols += v.val().cols();
    }
    Tensor out(rows, cols);
    Node n;
    n.op = Op::ConcatCols;
    int c0 = 0;
    for (const Value& v : xs) {
        const Tensor& part = v.val();
        for (int r = 0; r < rows; ++r)
            std::memcpy(out.data() + static_cast<size_t>(r) * cols + c0,
                        part.data() + static_cast<size_t>(r) * part.cols(), sizeof(double) * part.cols());
        c0 += part.cols();
        n.list.push_back(v.id);
    }
    return t->push(std::move(n), std::move(out));
}

Value transpose(Value x) {
    const Tensor& xv = x.val();
    Tensor out(xv.cols(), xv.rows());
    for (int r = 0; r < xv.rows(); ++r)
        for (int c = 0; c < xv.cols(); ++c) out.at(c, r) = xv.at(r, c);
    Node n;
    n.op = Op::Transpose;
    n.a = x.id;
    return x.tape->push(std::move(n), std::move(out));
}

Value reshape(Value x, int rows, int cols) {
    const Tensor& xv = x.val();
    if (static_cast<size_t>(rows) * cols != xv.size())
        throw ShapeError("reshape: " + xv.shape_str() + " to " + Tensor::shape_str(rows, cols));
    Tensor out(rows, cols, std::vector<double>(xv.vec()));
    Node n;
    n.op = Op::Reshape;
    n.a = x.id;
    return x.tape->push(std::move(n), std::move(out));
}

Value shift_rows_down(Value x, int k) {
    const Tensor& xv = x.val();
    if (k < 0) throw ShapeError("shift_rows_down: negative shift");
    Tensor out(xv.rows(), xv.cols());
    for (int r = k; r < xv.rows(); ++r)
        std::memcpy(out.data() + static_cast<size_t>(r) * xv.cols(),
                    xv.data() + static_cast<size_t>(r - k) * xv.cols(), sizeof(double) * xv.cols());
    Node n;
    n.op = Op::ShiftRowsDown;
    n.a = x.id;
    n.i0 = k;
    return x.tape->push(std::move(n), std::move(out));
}

Value row_mask_zero(Value x, std::vector<uint8_t> row_mask) {
    const Tensor& xv = x.val();
    if (static_cast<int>(row_mask.size()) != xv.rows())
        throw ShapeError("row_mask_zero: mask length vs rows mismatch");
    Tensor out(xv.rows(), xv.cols());
    for (int r = 0; r < xv.rows(); ++r) {
        if (!row_mask[r]) continue;
        std::memcpy(out.data() + static_cast<size_t>(r) * xv.cols(),
                    xv.data() + static_cast<size_t>(r) * xv.cols(), sizeof(double) * xv.cols());
    }
    Node n;
    n.op = Op::RowMaskZero;
    n.a = x.id;
    n.mask = std::move(row_mask);
    return x.tape->push(std::move(n), std::move(out));
}

Value dropout(Value x, Tensor mask) {
    const Tensor& xv = x.val();
    check_same_shape(xv, mask, "dropout");
    Tensor out(xv.rows(), xv.cols());
    active().mul(xv.data(), mask.data(), out.data(), out.size());
    Node n;
    n.op = Op::Dropout;
    n.a = x.id;
    n.saved = std::move(mask);
    return x.tape->push(std::move(n), std::move(out));
}

Value cross_entropy(Value posterior, int label) {
    const Tensor& p = posterior.val();
    if (p.rows() != 1) throw ShapeError("cross_entropy: posterior must be a row vector, got " + p.shape_str());
    if (label < 0 || label >= p.cols())
        throw ContractError("cross_entropy: label " + std::to_string(label) + " out of range [0," +
                            std::to_string(p.cols()) + ")");
    const double pv = std::max(p[label], 1e-12);
    Tensor out = Tensor::scalar(-std::log(pv));
    Node n;
    n.op = Op::CrossEntropy;
    n.a = posterior.id;
    n.i0 = label;
    return posterior.tape->push(std::move(n), std::move(out));
}

} // namespace seqcls::ad
