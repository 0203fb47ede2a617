#include "seqcls/cells.hpp"

#include <cmath>
#include <string>

#include "seqcls/errors.hpp"

namespace seqcls::cells {

using namespace seqcls::ad;

ForgetMode forget_mode_from_string(const std::string& s) {
    if (s == "sigmoid") return ForgetMode::kSigmoid;
    if (s == "exp") return ForgetMode::kExp;
    throw ConfigError("unknown forget mode: " + s + " (expected sigmoid|exp)");
}

std::string to_string(ForgetMode m) { return m == ForgetMode::kSigmoid ? "sigmoid" : "exp"; }

namespace {

// w^T x + r h + b for one gate.
Value gate_preact(Value x, Value w, Value h, Value r, Value b) {
    return add(add(matmul(x, w), matmul(h, r)), b);
}

// Per-head block-diagonal recurrence: h is [1,H], each head block [1,hd] is
// mixed by its own [hd,hd] matrix.
Value headwise_recurrence(Value h, const std::vector<Value>& r_heads, int heads) {
    const int hidden = h.cols();
    if (heads <= 0 || hidden % heads != 0)
        throw ShapeError("slstm: hidden size " + std::to_string(hidden) + " not divisible by heads " +
                         std::to_string(heads));
    if (static_cast<int>(r_heads.size()) != heads)
        throw ShapeError("slstm: expected " + std::to_string(heads) + " recurrent blocks, got " +
                         std::to_string(r_heads.size()));
    if (heads == 1) return matmul(h, r_heads[0]);
    const int hd = hidden / heads;
    std::vector<Value> parts;
    parts.reserve(heads);
    for (int i = 0; i < heads; ++i)
        parts.push_back(matmul(slice_cols(h, i * hd, (i + 1) * hd), r_heads[i]));
    return concat_cols(parts);
}

void check_normalizer_nonzero(const Tensor& n) {
    for (size_t i = 0; i < n.size(); ++i)
        if (n[i] == 0.0)
            throw ContractError("slstm: degenerate normalizer state (n == 0) at readout");
}

} // namespace

// --- LSTM --------------------------------------------------------------------

LstmState lstm_zero_state(Tape& tape, int hidden) {
    return {tape.leaf(Tensor::zeros(1, hidden)), tape.leaf(Tensor::zeros(1, hidden))};
}

LstmState lstm_step(const LstmParams& p, Value x, const LstmState& s) {
    Value f = sigmoid(gate_preact(x, p.wf, s.h, p.rf, p.bf));
    Value ctil = ad::tanh(gate_preact(x, p.wc, s.h, p.rc, p.bc));
    Value i = sigmoid(gate_preact(x, p.wi, s.h, p.ri, p.bi));
    Value c_new = add(mul(f, s.c), mul(i, ctil));
    Value o = sigmoid(gate_preact(x, p.wo, s.h, p.ro, p.bo));
    Value h_new = mul(o, ad::tanh(c_new));
    return {c_new, h_new};
}

// --- sLSTM -------------------------------------------------------------------

SLstmState slstm_zero_state(Tape& tape, int hidden) {
    return {tape.leaf(Tensor::zeros(1, hidden)), tape.leaf(Tensor::zeros(1, hidden)),
            tape.leaf(Tensor::zeros(1, hidden)), tape.leaf(Tensor::zeros(1, hidden))};
}

SLstmState slstm_step(const SLstmParams& p, Value x, const SLstmState& s, const SLstmOptions& opt,
                      SLstmTrace* trace) {
    // Raw preactivations; the input gate is exp(itil), so itil == log(i_t).
    Value itil = add(add(matmul(x, p.wi), headwise_recurrence(s.h, p.ri, p.heads)), p.bi);
    Value ftil = add(add(matmul(x, p.wf), headwise_recurrence(s.h, p.rf, p.heads)), p.bf);
    Value otil = add(add(matmul(x, p.wo), headwise_recurrence(s.h, p.ro, p.heads)), p.bo);
    Value ctil_pre = add(add(matmul(x, p.wc), headwise_recurrence(s.h, p.rc, p.heads)), p.bc);

    Value o = sigmoid(otil);
    Value ctil = ad::tanh(ctil_pre);
    Value log_forget = opt.forget_mode == ForgetMode::kSigmoid ? logsigmoid(ftil) : ftil;

    Value i_gate, f_gate, m_new;
    if (opt.stabilized) {
        // m_t = max(log f_t + m_{t-1}, log i_t). The hidden state is
        // analytically independent of m (it cancels between c and n), so m is
        // detached and carries no gradient.
        m_new = detach(maximum(add(log_forget, s.m), itil));
        i_gate = ad::exp(sub(itil, m_new));
        f_gate = ad::exp(sub(add(log_forget, s.m), m_new));
    } else {
        m_new = s.m;
        i_gate = ad::exp(itil);
        f_gate = opt.forget_mode == ForgetMode::kSigmoid ? sigmoid(ftil) : ad::exp(ftil);
    }

    Value c_new = add(mul(f_gate, s.c), mul(i_gate, ctil));
    Value n_new = add(mul(f_gate, s.n), i_gate);
    check_normalizer_nonzero(n_new.val());
    Value h_new = mul(o, ad::tanh(div(c_new, n_new)));

    if (trace) {
        trace->input_preact = itil.val();
        trace->log_forget = log_forget.val();
        trace->m_prev = s.m.val();
        trace->m_new = m_new.val();
        trace->i_stab = i_gate.val();
        trace->f_stab = f_gate.val();
    }
    return {c_new, h_new, n_new, m_new};
}

// --- mLSTM -------------------------------------------------------------------

MLstmState mlstm_zero_state(Tape& tape, int dim) {
    return {tape.leaf(Tensor::zeros(dim, dim)), tape.leaf(Tensor::zeros(1, dim)),
            tape.leaf(Tensor::zeros(1, dim)), tape.leaf(Tensor::zeros(1, 1))};
}

MLstmState mlstm_step(const MLstmParams& p, Value x, const MLstmState& s, const MLstmOptions& opt) {
    const int dim = s.cmat.val().cols();
    Value q = add(matmul(x, p.wq), p.bq);
    Value k = add(scale(matmul(x, p.wk), 1.0 / std::sqrt(static_cast<double>(dim))), p.bk);
    Value v = add(matmul(x, p.wv), p.bv);

    Value itil = add(matmul(x, p.wi), p.bi); // [1,1]
    Value ftil = add(matmul(x, p.wf), p.bf); // [1,1]
    Value o = sigmoid(add(matmul(x, p.wo), p.bo));

    Value i_gate, f_gate, m_new;
    bool stabilized = false;
    if (opt.forget_mode == ForgetMode::kExp) {
        // Same max-log stabilizer as the sLSTM, applied to the scalar gates.
        m_new = detach(maximum(add(ftil, s.m), itil));
        i_gate = ad::exp(sub(itil, m_new));
        f_gate = ad::exp(sub(add(ftil, s.m), m_new));
        stabilized = true;
    } else {
        m_new = s.m;
        i_gate = ad::exp(itil);
        f_gate = sigmoid(ftil);
    }

    Value vk = matmul(transpose(v), k); // rank-1 write [d,d]
    Value c_new = add(mul_scalar(s.cmat, f_gate), mul_scalar(vk, i_gate));
    Value n_new = add(mul_scalar(s.n, f_gate), mul_scalar(k, i_gate));

    Value numer = transpose(matmul(c_new, transpose(q))); // [1,d]
    Value snq = matmul(n_new, transpose(q));
    Value denom;
    if (stabilized) {
        // C and n carry an exp(-m) scale, so the unit floor of the readout
        // divisor becomes exp(-m); the quotient then equals the raw-gate
        // recursion exactly, keeping the hidden state independent of m.
        Value abs_snq = maximum(snq, scale(snq, -1.0));
        denom = maximum(abs_snq, ad::exp(scale(m_new, -1.0)));
    } else {
        denom = clamp_abs_min1(snq);
    }
    Value h_new = mul(o, div_scalar(numer, denom));
    return {c_new, n_new, h_new, m_new};
}

// --- unrolling ---------------------------------------------------------------

namespace {

int check_nonempty(const Value& xs) {
    const int t_len = xs.val().rows();
    if (t_len < 1) throw ContractError("unroll: empty sequence");
    return t_len;
}

} // namespace

LstmUnrollResult lstm_unroll(const LstmParams& p, Value xs, const LstmState& s0, const LstmUnrollOptions& opt) {
    const int t_len = check_nonempty(xs);
    LstmState s = s0;
    std::vector<Value> hs;
    hs.reserve(t_len);
    for (int t = 0; t < t_len; ++t) {
        Value x = slice_rows(xs, t, t + 1);
        if (opt.input_dropout_mask) x = dropout(x, *opt.input_dropout_mask);
        LstmState gate_in = s;
        if (opt.recurrent_dropout_mask) gate_in.h = dropout(s.h, *opt.recurrent_dropout_mask);
        LstmState next = lstm_step(p, x, gate_in);
        s = next;
        hs.push_back(s.h);
    }
    return {concat_rows(hs), s};
}

SLstmUnrollResult slstm_unroll(const SLstmParams& p, Value xs, const SLstmState& s0, const SLstmOptions& opt) {
    const int t_len = check_nonempty(xs);
    SLstmState s = s0;
    std::vector<Value> hs;
    hs.reserve(t_len);
    for (int t = 0; t < t_len; ++t) {
        s = slstm_step(p, slice_rows(xs, t, t + 1), s, opt);
        hs.push_back(s.h);
    }
    return {concat_rows(hs), s};
}

MLstmUnrollResult mlstm_unroll(const MLstmParams& p, Value xs, const MLstmState& s0, const MLstmOptions& opt) {
    const int t_len = check_nonempty(xs);
    MLstmState s = s0;
    std::vector<Value> hs;
    hs.reserve(t_len);
    for (int t = 0; t < t_len; ++t) {
        s = mlstm_step(p, slice_rows(xs, t, t + 1), s, opt);
        hs.push_back(s.h);
    }
    return {concat_rows(hs), s};
}

} // namespace seqcls::cells
