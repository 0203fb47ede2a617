#pragma once

#include <optional>
#include <string>
#include <vector>

#include "seqcls/autodiff.hpp"

namespace seqcls::cells {

using ad::Tape;
using ad::Value;

// Forget-gate activation choice. The input gate of sLSTM/mLSTM is always
// exponential; the forget gate may be sigmoid or exponential.
enum class ForgetMode { kSigmoid, kExp };

ForgetMode forget_mode_from_string(const std::string& s);
std::string to_string(ForgetMode m);

// --- LSTM --------------------------------------------------------------------

// Gate weights with x as a [1,D] row: input weights [D,H], recurrent weights
// [H,H], biases [1,H].
struct LstmParams {
    Value wf, wi, wo, wc;
    Value rf, ri, ro, rc;
    Value bf, bi, bo, bc;
};

struct LstmState {
    Value c, h;
};

LstmState lstm_zero_state(Tape& tape, int hidden);
LstmState lstm_step(const LstmParams& p, Value x, const LstmState& s);

// --- sLSTM -------------------------------------------------------------------

// Multi-head sLSTM: the hidden vector is split into `heads` equal blocks and
// the recurrent matrices are per-head [hd,hd], so memory mixing happens within
// a head but never across heads. heads == 1 gives a dense recurrence.
struct SLstmParams {
    Value wf, wi, wo, wc;                    // [D,H]
    std::vector<Value> rf, ri, ro, rc;       // per head [hd,hd]
    Value bf, bi, bo, bc;                    // [1,H]
    int heads = 1;
};

struct SLstmState {
    Value c, h, n, m;
};

struct SLstmOptions {
    ForgetMode forget_mode = ForgetMode::kSigmoid;
    // With stabilization off the cell evaluates the raw exponential-gate
    // recursion; safe only for small preactivations.
    bool stabilized = true;
};

// Per-step internals for the stabilization identity checks.
struct SLstmTrace {
    Tensor input_preact;  // \tilde i_t = log(i_t)
    Tensor log_forget;    // log(f_t)
    Tensor m_prev, m_new;
    Tensor i_stab, f_stab;
};

SLstmState slstm_zero_state(Tape& tape, int hidden);
SLstmState slstm_step(const SLstmParams& p, Value x, const SLstmState& s, const SLstmOptions& opt,
                      SLstmTrace* trace = nullptr);

// --- mLSTM -------------------------------------------------------------------

// Matrix-memory cell. No recurrent weights: every projection reads x_t only.
struct MLstmParams {
    Value wq, wk, wv;   // [D,d]
    Value bq, bk, bv;   // [1,d]
    Value wi, wf;       // [D,1]
    Value bi, bf;       // [1,1]
    Value wo;           // [D,d] vector output gate
    Value bo;           // [1,d]
};

struct MLstmState {
    Value cmat; // [d,d]
    Value n;    // [1,d]
    Value h;    // [1,d]
    Value m;    // [1,1]; meaningful only with ForgetMode::kExp (stabilized gates)
};

struct MLstmOptions {
    ForgetMode forget_mode = ForgetMode::kSigmoid;
};

MLstmState mlstm_zero_state(Tape& tape, int dim);
MLstmState mlstm_step(const MLstmParams& p, Value x, const MLstmState& s, const MLstmOptions& opt);

// --- unrolling ---------------------------------------------------------------

// Optional per-sequence dropout masks (Keras semantics: one mask reused at
// every time step). Entries hold 0 or 1/(1-rate).
struct LstmUnrollOptions {
    std::optional<Tensor> input_dropout_mask;      // [1,D]
    std::optional<Tensor> recurrent_dropout_mask;  // [1,H]
};

struct LstmUnrollResult {
    Value hs; // [T,H]
    LstmState final_state;
};
struct SLstmUnrollResult {
    Value hs;
    SLstmState final_state;
};
struct MLstmUnrollResult {
    Value hs;
    MLstmState final_state;
};

// States thread left to right over the rows of xs [T,D]; throws ContractError
// on an empty sequence. Differentiable end to end.
LstmUnrollResult lstm_unroll(const LstmParams& p, Value xs, const LstmState& s0,
                             const LstmUnrollOptions& opt = {});
SLstmUnrollResult slstm_unroll(const SLstmParams& p, Value xs, const SLstmState& s0, const SLstmOptions& opt);
MLstmUnrollResult mlstm_unroll(const MLstmParams& p, Value xs, const MLstmState& s0, const MLstmOptions& opt);

} // namespace seqcls::cells
