#include "seqcls/attention.hpp"

#include <cmath>
#include <string>

#include "seqcls/errors.hpp"

namespace seqcls::attn {

using namespace seqcls::ad;

Value scaled_dot_attention(Value q, Value k, Value v, int d_k, const std::vector<uint8_t>& key_mask) {
    if (q.cols() != k.cols())
        throw ShapeError("scaled_dot_attention: Q " + q.val().shape_str() + " and K " + k.val().shape_str() +
                         " disagree on the key dimension");
    if (k.rows() != v.rows())
        throw ShapeError("scaled_dot_attention: K has " + std::to_string(k.rows()) + " keys but V has " +
                         std::to_string(v.rows()) + " rows");
    if (d_k <= 0) throw ContractError("scaled_dot_attention: d_k must be positive");
    Value scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(d_k)));
    Value weights = softmax_rows(scores, key_mask);
    return matmul(weights, v);
}

Value multi_head_attention(const AttentionParams& p, Value x, const std::vector<uint8_t>& key_mask) {
    if (p.heads <= 0 || static_cast<int>(p.wq.size()) != p.heads)
        throw ShapeError("multi_head_attention: expected " + std::to_string(p.heads) + " head projections, got " +
                         std::to_string(p.wq.size()));
    std::vector<Value> heads;
    heads.reserve(p.heads);
    for (int i = 0; i < p.heads; ++i) {
        Value q = matmul(x, p.wq[i]);
        Value k = matmul(x, p.wk[i]);
        Value v = matmul(x, p.wv[i]);
        heads.push_back(scaled_dot_attention(q, k, v, p.d_k, key_mask));
    }
    Value cat = p.heads == 1 ? heads[0] : concat_cols(heads);
    return matmul(cat, p.wo);
}

Value feed_forward(const FeedForwardParams& p, Value x) {
    if (p.conv_w.empty()) throw ContractError("feed_forward: needs at least one conv tap");
    // y_t = sum_i x_{t-i} W_i + b, causal with zero history.
    Value acc = matmul(x, p.conv_w[0]);
    for (size_t i = 1; i < p.conv_w.size(); ++i)
        acc = add(acc, matmul(shift_rows_down(x, static_cast<int>(i)), p.conv_w[i]));
    Value hidden = relu(add_rowvec(acc, p.conv_b));
    return add_rowvec(matmul(hidden, p.proj_w), p.proj_b);
}

Value encoder_block(const EncoderBlockParams& p, Value x, const std::vector<uint8_t>& pad_mask,
                    const EncoderBlockOptions& opt) {
    if (!pad_mask.empty()) {
        if (static_cast<int>(pad_mask.size()) != x.rows())
            throw ShapeError("encoder_block: pad_mask length " + std::to_string(pad_mask.size()) +
                             " vs sequence length " + std::to_string(x.rows()));
        bool any = false;
        for (uint8_t m : pad_mask) any = any || m;
        if (!any) throw ContractError("encoder_block: all positions masked");
    }

    Value mha = multi_head_attention(p.attention, x, pad_mask);
    if (opt.dropout_mask_attn) mha = dropout(mha, *opt.dropout_mask_attn);
    Value a = layer_norm_rows(add(x, mha), p.ln1_gain, p.ln1_bias, p.ln_eps);

    // Masked rows are zeroed before the causal conv so their values cannot
    // reach unmasked positions through the temporal taps.
    Value ffn_in = pad_mask.empty() ? a : row_mask_zero(a, pad_mask);
    Value ff = feed_forward(p.ffn, ffn_in);
    if (opt.dropout_mask_ffn) ff = dropout(ff, *opt.dropout_mask_ffn);
    return layer_norm_rows(add(a, ff), p.ln2_gain, p.ln2_bias, p.ln_eps);
}

Tensor positional_encoding_table(int t_len, int dim) {
    Tensor pe(t_len, dim);
    for (int pos = 0; pos < t_len; ++pos) {
        for (int j = 0; j < dim; j += 2) {
            const double rate = std::pow(10000.0, -static_cast<double>(j) / dim);
            pe.at(pos, j) = std::sin(pos * rate);
            if (j + 1 < dim) pe.at(pos, j + 1) = std::cos(pos * rate);
        }
    }
    return pe;
}

Value positional_encode(Value x) {
    Tensor pe = positional_encoding_table(x.rows(), x.cols());
    return add(x, x.tape->leaf(std::move(pe)));
}

} // namespace seqcls::attn
