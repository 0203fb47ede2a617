#pragma once

#include <cstdint>
#include <vector>

#include "seqcls/autodiff.hpp"

namespace seqcls::attn {

using ad::Tape;
using ad::Value;

// Per-head projections; d_model is the width of the sequence matrix X, d_k the
// per-head key/query/value width. W^O maps the concatenated heads back to
// d_model.
struct AttentionParams {
    std::vector<Value> wq, wk, wv; // per head [d_model, d_k]
    Value wo;                      // [heads * d_k, d_model]
    int heads = 1;
    int d_k = 0;
};

// softmax(Q K^T / sqrt(d_k)) V with softmax over keys per query row. Masked
// keys (key_mask[j] == 0) receive -inf logits and are never attended to.
Value scaled_dot_attention(Value q, Value k, Value v, int d_k,
                           const std::vector<uint8_t>& key_mask = {});

// Eq.-style multi-head self-attention over X [T, d_model].
Value multi_head_attention(const AttentionParams& p, Value x, const std::vector<uint8_t>& key_mask = {});

// Position-wise feed-forward realized as a width-`conv_width` causal temporal
// convolution (left zero-padded) with `channels` filters, an activation, and a
// width-1 projection back to d_model.
struct FeedForwardParams {
    std::vector<Value> conv_w; // conv_width matrices [d_model, channels]; index i multiplies x_{t-i}
    Value conv_b;              // [1, channels]
    Value proj_w;              // [channels, d_model]
    Value proj_b;              // [1, d_model]
};

Value feed_forward(const FeedForwardParams& p, Value x);

struct EncoderBlockParams {
    AttentionParams attention;
    FeedForwardParams ffn;
    Value ln1_gain, ln1_bias; // [1, d_model]
    Value ln2_gain, ln2_bias;
    double ln_eps = 1e-5;
};

struct EncoderBlockOptions {
    // Inverted-dropout masks sampled by the caller (training only).
    const Tensor* dropout_mask_attn = nullptr; // [T, d_model]
    const Tensor* dropout_mask_ffn = nullptr;  // [T, d_model]
};

// Post-norm encoder block: LayerNorm(X + MHA(X)) then LayerNorm(. + FFN(.)).
// pad_mask[t] == 0 marks a masked position: it is never attended to, and its
// activations are zeroed before the FFN convolution so masked values cannot
// leak into unmasked outputs. Throws ContractError when everything is masked.
Value encoder_block(const EncoderBlockParams& p, Value x, const std::vector<uint8_t>& pad_mask,
                    const EncoderBlockOptions& opt = {});

// Fixed sinusoidal positional signal added to X; deterministic in T and d.
Value positional_encode(Value x);
Tensor positional_encoding_table(int t_len, int dim);

} // namespace seqcls::attn
