#pragma once

// Scripted reference implementations used as independent oracles. Plain
// double loops only: no tape, no dispatch kernels, no shared code with the
// library paths under test.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>; // [rows][cols]

inline Vec matvec_rowin(const Vec& x, const Mat& w) { // x[1,D] * w[D,H]
    Vec out(w.empty() ? 0 : w[0].size(), 0.0);
    for (size_t d = 0; d < x.size(); ++d)
        for (size_t j = 0; j < out.size(); ++j) out[j] += x[d] * w[d][j];
    return out;
}

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// --- LSTM (four gates, dense recurrence) --------------------------------------

struct LstmGates {
    Mat w; // [D][H]
    Mat r; // [H][H]
    Vec b; // [H]
};

struct LstmOracleParams {
    LstmGates f, i, o, c;
};

struct LstmOracleState {
    Vec c, h;
};

inline Vec gate_pre(const LstmGates& g, const Vec& x, const Vec& h) {
    Vec pre = matvec_rowin(x, g.w);
    Vec rec = matvec_rowin(h, g.r);
    for (size_t j = 0; j < pre.size(); ++j) pre[j] += rec[j] + g.b[j];
    return pre;
}

inline LstmOracleState lstm_oracle_step(const LstmOracleParams& p, const Vec& x, const LstmOracleState& s) {
    Vec fpre = gate_pre(p.f, x, s.h), ipre = gate_pre(p.i, x, s.h);
    Vec opre = gate_pre(p.o, x, s.h), cpre = gate_pre(p.c, x, s.h);
    LstmOracleState out;
    out.c.resize(fpre.size());
    out.h.resize(fpre.size());
    for (size_t j = 0; j < fpre.size(); ++j) {
        const double f = sigmoid(fpre[j]);
        const double i = sigmoid(ipre[j]);
        const double ctil = std::tanh(cpre[j]);
        out.c[j] = f * s.c[j] + i * ctil;
        out.h[j] = sigmoid(opre[j]) * std::tanh(out.c[j]);
    }
    return out;
}

// --- sLSTM (dense single-head recurrence, unstabilized raw recursion) ---------

struct SLstmOracleState {
    Vec c, h, n;
};

// forget_exp = false -> sigmoid forget gate. Raw exponential input gate; safe
// only for small preactivations, which is exactly the regime the trajectory
// agreement tests use.
inline SLstmOracleState slstm_oracle_step(const LstmOracleParams& p, const Vec& x, const SLstmOracleState& s,
                                          bool forget_exp) {
    Vec fpre = gate_pre(p.f, x, s.h), ipre = gate_pre(p.i, x, s.h);
    Vec opre = gate_pre(p.o, x, s.h), cpre = gate_pre(p.c, x, s.h);
    SLstmOracleState out;
    out.c.resize(fpre.size());
    out.h.resize(fpre.size());
    out.n.resize(fpre.size());
    for (size_t j = 0; j < fpre.size(); ++j) {
        const double i = std::exp(ipre[j]);
        const double f = forget_exp ? std::exp(fpre[j]) : sigmoid(fpre[j]);
        const double ctil = std::tanh(cpre[j]);
        out.c[j] = f * s.c[j] + i * ctil;
        out.n[j] = f * s.n[j] + i;
        out.h[j] = sigmoid(opre[j]) * std::tanh(out.c[j] / out.n[j]);
    }
    return out;
}

// --- mLSTM ---------------------------------------------------------------------

struct MLstmOracleParams {
    Mat wq, wk, wv, wo; // [D][d]
    Vec bq, bk, bv, bo; // [d]
    Vec wi, wf;         // [D]
    double bi = 0.0, bf = 0.0;
};

struct MLstmOracleState {
    Mat c;      // [d][d]
    Vec n, h;   // [d]
    double m = 0.0;
};

// stabilized applies the max-log construction to the scalar gates (exp forget
// mode); otherwise i = exp, f = sigmoid, straight from the equations.
inline MLstmOracleState mlstm_oracle_step(const MLstmOracleParams& p, const Vec& x, const MLstmOracleState& s,
                                          bool forget_exp) {
    const size_t d = p.bq.size();
    Vec q = matvec_rowin(x, p.wq);
    Vec k = matvec_rowin(x, p.wk);
    Vec v = matvec_rowin(x, p.wv);
    Vec og = matvec_rowin(x, p.wo);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (size_t j = 0; j < d; ++j) {
        q[j] += p.bq[j];
        k[j] = k[j] * scale + p.bk[j];
        v[j] += p.bv[j];
        og[j] = sigmoid(og[j] + p.bo[j]);
    }
    double ipre = p.bi, fpre = p.bf;
    for (size_t j = 0; j < x.size(); ++j) {
        ipre += x[j] * p.wi[j];
        fpre += x[j] * p.wf[j];
    }
    MLstmOracleState out;
    double i, f;
    if (forget_exp) {
        out.m = std::max(fpre + s.m, ipre);
        i = std::exp(ipre - out.m);
        f = std::exp(fpre + s.m - out.m);
    } else {
        out.m = s.m;
        i = std::exp(ipre);
        f = sigmoid(fpre);
    }
    out.c.assign(d, Vec(d, 0.0));
    out.n.assign(d, 0.0);
    out.h.assign(d, 0.0);
    for (size_t r = 0; r < d; ++r)
        for (size_t cidx = 0; cidx < d; ++cidx) out.c[r][cidx] = f * s.c[r][cidx] + i * v[r] * k[cidx];
    for (size_t j = 0; j < d; ++j) out.n[j] = f * s.n[j] + i * k[j];
    double nq = 0.0;
    for (size_t j = 0; j < d; ++j) nq += out.n[j] * q[j];
    // With stabilized gates the states carry an exp(-m) scale, so the unit
    // floor of the divisor is exp(-m); with raw gates m == 0 and this is 1.
    const double denom = std::max(std::abs(nq), std::exp(-out.m));
    for (size_t r = 0; r < d; ++r) {
        double cq = 0.0;
        for (size_t cidx = 0; cidx < d; ++cidx) cq += out.c[r][cidx] * q[cidx];
        out.h[r] = og[r] * (cq / denom);
    }
    return out;
}

// Raw exponential gates straight off the equations, no stabilizer. Overflows
// for large preactivations; used to confirm the stabilized path computes the
// same function at safe magnitudes.
inline MLstmOracleState mlstm_oracle_step_raw_exp(const MLstmOracleParams& p, const Vec& x,
                                                  const MLstmOracleState& s) {
    const size_t d = p.bq.size();
    Vec q = matvec_rowin(x, p.wq);
    Vec k = matvec_rowin(x, p.wk);
    Vec v = matvec_rowin(x, p.wv);
    Vec og = matvec_rowin(x, p.wo);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (size_t j = 0; j < d; ++j) {
        q[j] += p.bq[j];
        k[j] = k[j] * scale + p.bk[j];
        v[j] += p.bv[j];
        og[j] = sigmoid(og[j] + p.bo[j]);
    }
    double ipre = p.bi, fpre = p.bf;
    for (size_t j = 0; j < x.size(); ++j) {
        ipre += x[j] * p.wi[j];
        fpre += x[j] * p.wf[j];
    }
    const double i = std::exp(ipre);
    const double f = std::exp(fpre);
    MLstmOracleState out;
    out.m = 0.0;
    out.c.assign(d, Vec(d, 0.0));
    out.n.assign(d, 0.0);
    out.h.assign(d, 0.0);
    for (size_t r = 0; r < d; ++r)
        for (size_t cidx = 0; cidx < d; ++cidx) out.c[r][cidx] = f * s.c[r][cidx] + i * v[r] * k[cidx];
    for (size_t j = 0; j < d; ++j) out.n[j] = f * s.n[j] + i * k[j];
    double nq = 0.0;
    for (size_t j = 0; j < d; ++j) nq += out.n[j] * q[j];
    const double denom = std::max(std::abs(nq), 1.0);
    for (size_t r = 0; r < d; ++r) {
        double cq = 0.0;
        for (size_t cidx = 0; cidx < d; ++cidx) cq += out.c[r][cidx] * q[cidx];
        out.h[r] = og[r] * (cq / denom);
    }
    return out;
}

// --- attention -----------------------------------------------------------------

// softmax(Q K^T / sqrt(dk)) V, one plain pass, no masking.
inline Mat attention_oracle(const Mat& q, const Mat& k, const Mat& v, int dk) {
    const size_t tq = q.size(), tk = k.size(), dv = v.empty() ? 0 : v[0].size();
    Mat out(tq, Vec(dv, 0.0));
    const double inv = 1.0 / std::sqrt(static_cast<double>(dk));
    for (size_t i = 0; i < tq; ++i) {
        Vec scores(tk, 0.0);
        double mx = -1e300;
        for (size_t j = 0; j < tk; ++j) {
            double s = 0.0;
            for (size_t l = 0; l < q[i].size(); ++l) s += q[i][l] * k[j][l];
            scores[j] = s * inv;
            mx = std::max(mx, scores[j]);
        }
        double z = 0.0;
        for (size_t j = 0; j < tk; ++j) {
            scores[j] = std::exp(scores[j] - mx);
            z += scores[j];
        }
        for (size_t j = 0; j < tk; ++j)
            for (size_t l = 0; l < dv; ++l) out[i][l] += (scores[j] / z) * v[j][l];
    }
    return out;
}

} // namespace oracle
