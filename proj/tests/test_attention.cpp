#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "seqcls/attention.hpp"
#include "seqcls/errors.hpp"
#include "seqcls/gradcheck.hpp"
#include "seqcls/rng.hpp"

using namespace seqcls;
using namespace seqcls::ad;
using namespace seqcls::attn;

namespace {

Tensor random_tensor(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(r, c);
    for (size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

oracle::Mat to_mat(const Tensor& t) {
    oracle::Mat m(t.rows(), oracle::Vec(t.cols()));
    for (int r = 0; r < t.rows(); ++r)
        for (int c = 0; c < t.cols(); ++c) m[r][c] = t.at(r, c);
    return m;
}

} // namespace

TEST_CASE("attention: single query equal to the single key returns the value row") {
    Tape tape;
    Value q = tape.leaf(Tensor{{0.3, -1.2}});
    Value v = tape.leaf(Tensor{{5.0, 7.0, -2.0}});
    Tensor out = scaled_dot_attention(q, q, v, 2).val();
    for (int j = 0; j < 3; ++j) CHECK(out[j] == v.val()[j]);
}

TEST_CASE("attention: query orthogonal to all keys averages the value rows") {
    Tape tape;
    Value q = tape.leaf(Tensor{{0.0, 0.0, 1.0}});
    Value k = tape.leaf(Tensor{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}});
    Value v = tape.leaf(Tensor{{2.0, 4.0}, {6.0, 8.0}});
    Tensor out = scaled_dot_attention(q, k, v, 3).val();
    CHECK(out[0] == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("attention: sharp diagonal scores match the scripted softmax oracle") {
    Tape tape;
    Value q = tape.leaf(Tensor{{10.0, 0.0}, {0.0, 10.0}});
    Value v = tape.leaf(Tensor::identity(2));
    Tensor out = scaled_dot_attention(q, q, v, 2).val();
    oracle::Mat want = oracle::attention_oracle(to_mat(q.val()), to_mat(q.val()), to_mat(v.val()), 2);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) CHECK(out.at(r, c) == doctest::Approx(want[r][c]).epsilon(1e-14));
    // each query locks onto its matching key
    CHECK(out.at(0, 0) > 1.0 - 1e-12);
    CHECK(out.at(0, 1) < 1e-12);
}

TEST_CASE("attention: random inputs match the scripted oracle") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int tq = 1 + rng.uniform_int(6), tk = 1 + rng.uniform_int(6), dk = 1 + rng.uniform_int(5),
                  dv = 1 + rng.uniform_int(5);
        Tape tape;
        Value q = tape.leaf(random_tensor(tq, dk, rng));
        Value k = tape.leaf(random_tensor(tk, dk, rng));
        Value v = tape.leaf(random_tensor(tk, dv, rng));
        Tensor out = scaled_dot_attention(q, k, v, dk).val();
        oracle::Mat want = oracle::attention_oracle(to_mat(q.val()), to_mat(k.val()), to_mat(v.val()), dk);
        for (int r = 0; r < tq; ++r)
            for (int c = 0; c < dv; ++c) CHECK(out.at(r, c) == doctest::Approx(want[r][c]).epsilon(1e-12));
    }
}

TEST_CASE("attention: weight rows sum to one over unmasked keys") {
    Rng rng(12);
    Tape tape;
    const int t = 6, dk = 4;
    Value x = tape.leaf(random_tensor(t, dk, rng, -3.0, 3.0));
    std::vector<uint8_t> mask{1, 0, 1, 1, 0, 1};
    Value scores = scale(matmul(x, transpose(x)), 1.0 / std::sqrt(4.0));
    Tensor w = softmax_rows(scores, mask).val();
    for (int r = 0; r < t; ++r) {
        double s = 0.0;
        for (int c = 0; c < t; ++c) {
            if (!mask[c]) CHECK(w.at(r, c) == 0.0);
            s += w.at(r, c);
        }
        CHECK(std::abs(s - 1.0) <= 1e-12);
    }
}

TEST_CASE("mha: single head with identity projections collapses to raw attention") {
    Rng rng(21);
    Tape tape;
    const int t = 5, d = 4;
    Value x = tape.leaf(random_tensor(t, d, rng));
    AttentionParams p;
    p.heads = 1;
    p.d_k = d;
    p.wq = {tape.leaf(Tensor::identity(d))};
    p.wk = {tape.leaf(Tensor::identity(d))};
    p.wv = {tape.leaf(Tensor::identity(d))};
    p.wo = tape.leaf(Tensor::identity(d));
    Tensor got = multi_head_attention(p, x).val();
    Tensor want = scaled_dot_attention(x, x, x, d).val();
    for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]); // bitwise
}

TEST_CASE("mha: zero output projection zeroes the result") {
    Rng rng(22);
    Tape tape;
    const int t = 4, d = 3, dk = 2, heads = 2;
    Value x = tape.leaf(random_tensor(t, d, rng));
    AttentionParams p;
    p.heads = heads;
    p.d_k = dk;
    for (int h = 0; h < heads; ++h) {
        p.wq.push_back(tape.leaf(random_tensor(d, dk, rng)));
        p.wk.push_back(tape.leaf(random_tensor(d, dk, rng)));
        p.wv.push_back(tape.leaf(random_tensor(d, dk, rng)));
    }
    p.wo = tape.leaf(Tensor::zeros(heads * dk, d));
    Tensor out = multi_head_attention(p, x).val();
    for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == 0.0);
}

TEST_CASE("mha: four heads equal a per-head brute-force materialization") {
    Rng rng(23);
    Tape tape;
    const int t = 6, d = 5, dk = 3, heads = 4;
    Value x = tape.leaf(random_tensor(t, d, rng));
    AttentionParams p;
    p.heads = heads;
    p.d_k = dk;
    for (int h = 0; h < heads; ++h) {
        p.wq.push_back(tape.leaf(random_tensor(d, dk, rng)));
        p.wk.push_back(tape.leaf(random_tensor(d, dk, rng)));
        p.wv.push_back(tape.leaf(random_tensor(d, dk, rng)));
    }
    p.wo = tape.leaf(random_tensor(heads * dk, d, rng));
    Tensor got = multi_head_attention(p, x).val();

    // Brute force: project, run the oracle per head, concat, multiply by W^O.
    oracle::Mat xm = to_mat(x.val());
    oracle::Mat cat(t, oracle::Vec(heads * dk, 0.0));
    for (int h = 0; h < heads; ++h) {
        oracle::Mat qm(t, oracle::Vec(dk)), km(t, oracle::Vec(dk)), vm(t, oracle::Vec(dk));
        for (int r = 0; r < t; ++r)
            for (int c = 0; c < dk; ++c) {
                double sq = 0, sk = 0, sv = 0;
                for (int l = 0; l < d; ++l) {
                    sq += xm[r][l] * p.wq[h].val().at(l, c);
                    sk += xm[r][l] * p.wk[h].val().at(l, c);
                    sv += xm[r][l] * p.wv[h].val().at(l, c);
                }
                qm[r][c] = sq;
                km[r][c] = sk;
                vm[r][c] = sv;
            }
        oracle::Mat head = oracle::attention_oracle(qm, km, vm, dk);
        for (int r = 0; r < t; ++r)
            for (int c = 0; c < dk; ++c) cat[r][h * dk + c] = head[r][c];
    }
    for (int r = 0; r < t; ++r)
        for (int c = 0; c < d; ++c) {
            double s = 0.0;
            for (int l = 0; l < heads * dk; ++l) s += cat[r][l] * p.wo.val().at(l, c);
            CHECK(got.at(r, c) == doctest::Approx(s).epsilon(1e-12));
        }
}

TEST_CASE("mha: permutation equivariance without positional encoding") {
    Rng rng(24);
    Tape tape;
    const int t = 7, d = 4, dk = 3, heads = 2;
    Tensor xv = random_tensor(t, d, rng);
    AttentionParams p;
    p.heads = heads;
    p.d_k = dk;
    for (int h = 0; h < heads; ++h) {
        p.wq.push_back(tape.leaf(random_tensor(d, dk, rng)));
        p.wk.push_back(tape.leaf(random_tensor(d, dk, rng)));
        p.wv.push_back(tape.leaf(random_tensor(d, dk, rng)));
    }
    p.wo = tape.leaf(random_tensor(heads * dk, d, rng));

    std::vector<int> perm{3, 0, 6, 2, 5, 1, 4};
    Tensor xp(t, d);
    for (int r = 0; r < t; ++r)
        for (int c = 0; c < d; ++c) xp.at(r, c) = xv.at(perm[r], c);

    Tensor base = multi_head_attention(p, tape.leaf(xv)).val();
    Tensor permuted = multi_head_attention(p, tape.leaf(xp)).val();
    for (int r = 0; r < t; ++r)
        for (int c = 0; c < d; ++c)
            CHECK(permuted.at(r, c) == doctest::Approx(base.at(perm[r], c)).epsilon(1e-12));
}

// --- encoder block ------------------------------------------------------------

namespace {

EncoderBlockParams random_block(Tape& tape, int d, int dk, int heads, int conv_width, Rng& rng) {
    EncoderBlockParams p;
    p.attention.heads = heads;
    p.attention.d_k = dk;
    for (int h = 0; h < heads; ++h) {
        p.attention.wq.push_back(tape.leaf(random_tensor(d, dk, rng, -0.5, 0.5)));
        p.attention.wk.push_back(tape.leaf(random_tensor(d, dk, rng, -0.5, 0.5)));
        p.attention.wv.push_back(tape.leaf(random_tensor(d, dk, rng, -0.5, 0.5)));
    }
    p.attention.wo = tape.leaf(random_tensor(heads * dk, d, rng, -0.5, 0.5));
    for (int t = 0; t < conv_width; ++t) p.ffn.conv_w.push_back(tape.leaf(random_tensor(d, dk, rng, -0.5, 0.5)));
    p.ffn.conv_b = tape.leaf(random_tensor(1, dk, rng, -0.2, 0.2));
    p.ffn.proj_w = tape.leaf(random_tensor(dk, d, rng, -0.5, 0.5));
    p.ffn.proj_b = tape.leaf(random_tensor(1, d, rng, -0.2, 0.2));
    p.ln1_gain = tape.leaf(Tensor::full(1, d, 1.0));
    p.ln1_bias = tape.leaf(Tensor::zeros(1, d));
    p.ln2_gain = tape.leaf(Tensor::full(1, d, 1.0));
    p.ln2_bias = tape.leaf(Tensor::zeros(1, d));
    return p;
}

EncoderBlockParams zero_block(Tape& tape, int d, int dk, int heads, int conv_width) {
    EncoderBlockParams p;
    p.attention.heads = heads;
    p.attention.d_k = dk;
    for (int h = 0; h < heads; ++h) {
        p.attention.wq.push_back(tape.leaf(Tensor::zeros(d, dk)));
        p.attention.wk.push_back(tape.leaf(Tensor::zeros(d, dk)));
        p.attention.wv.push_back(tape.leaf(Tensor::zeros(d, dk)));
    }
    p.attention.wo = tape.leaf(Tensor::zeros(heads * dk, d));
    for (int t = 0; t < conv_width; ++t) p.ffn.conv_w.push_back(tape.leaf(Tensor::zeros(d, dk)));
    p.ffn.conv_b = tape.leaf(Tensor::zeros(1, dk));
    p.ffn.proj_w = tape.leaf(Tensor::zeros(dk, d));
    p.ffn.proj_b = tape.leaf(Tensor::zeros(1, d));
    p.ln1_gain = tape.leaf(Tensor::full(1, d, 1.0));
    p.ln1_bias = tape.leaf(Tensor::zeros(1, d));
    p.ln2_gain = tape.leaf(Tensor::full(1, d, 1.0));
    p.ln2_bias = tape.leaf(Tensor::zeros(1, d));
    return p;
}

} // namespace

TEST_CASE("encoder block: zero sublayers reduce to LayerNorm(LayerNorm(X))") {
    Rng rng(31);
    Tape tape;
    const int t = 5, d = 4;
    Tensor xv = random_tensor(t, d, rng);
    EncoderBlockParams p = zero_block(tape, d, 3, 2, 2);
    Tensor got = encoder_block(p, tape.leaf(xv), {}).val();
    Value ln1 = layer_norm_rows(tape.leaf(xv), p.ln1_gain, p.ln1_bias, p.ln_eps);
    Tensor want = layer_norm_rows(ln1, p.ln2_gain, p.ln2_bias, p.ln_eps).val();
    for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
}

TEST_CASE("encoder block: masking the tail equals running the truncated sequence") {
    Rng rng(32);
    Tape tape;
    const int t = 8, keep = 5, d = 4;
    Tensor xv = random_tensor(t, d, rng);
    EncoderBlockParams p = random_block(tape, d, 3, 2, 2, rng);

    std::vector<uint8_t> mask(t, 1);
    for (int r = keep; r < t; ++r) mask[r] = 0;
    Tensor full = encoder_block(p, tape.leaf(xv), mask).val();

    Tensor xt(keep, d);
    for (int r = 0; r < keep; ++r)
        for (int c = 0; c < d; ++c) xt.at(r, c) = xv.at(r, c);
    Tensor trunc = encoder_block(p, tape.leaf(xt), {}).val();

    for (int r = 0; r < keep; ++r)
        for (int c = 0; c < d; ++c) CHECK(std::abs(full.at(r, c) - trunc.at(r, c)) <= 1e-10);
}

TEST_CASE("encoder block: masked positions are provably inert, bitwise") {
    Rng rng(33);
    Tape tape;
    const int t = 7, d = 4;
    Tensor xv = random_tensor(t, d, rng);
    EncoderBlockParams p = random_block(tape, d, 3, 2, 2, rng);
    std::vector<uint8_t> mask{1, 1, 0, 1, 0, 1, 1};

    Tensor base = encoder_block(p, tape.leaf(xv), mask).val();
    Tensor xm = xv;
    for (int r = 0; r < t; ++r) {
        if (mask[r]) continue;
        for (int c = 0; c < d; ++c) xm.at(r, c) = rng.uniform(-100.0, 100.0);
    }
    Tensor changed = encoder_block(p, tape.leaf(xm), mask).val();
    for (int r = 0; r < t; ++r) {
        if (!mask[r]) continue;
        for (int c = 0; c < d; ++c) CHECK(base.at(r, c) == changed.at(r, c));
    }
}

TEST_CASE("encoder block: all-masked input raises a contract error") {
    Rng rng(34);
    Tape tape;
    Tensor xv = random_tensor(3, 4, rng);
    EncoderBlockParams p = random_block(tape, 4, 3, 2, 2, rng);
    CHECK_THROWS_AS(encoder_block(p, tape.leaf(xv), {0, 0, 0}), ContractError);
}

TEST_CASE("encoder block: gradients pass finite differences on a length-6 toy input") {
    Rng rng(35);
    const int t = 6, d = 3, dk = 2, heads = 2, conv_width = 2;
    Tensor xv = random_tensor(t, d, rng);
    const int flat_size = heads * 3 * (d * dk) + (heads * dk) * d + conv_width * d * dk + dk + dk * d + d + 4 * d;
    auto build = [&](Tape& tape, Value flat) {
        int off = 0;
        auto take = [&](int r, int c) {
            Value v = reshape(slice_cols(flat, off, off + r * c), r, c);
            off += r * c;
            return v;
        };
        EncoderBlockParams p;
        p.attention.heads = heads;
        p.attention.d_k = dk;
        for (int h = 0; h < heads; ++h) {
            p.attention.wq.push_back(take(d, dk));
            p.attention.wk.push_back(take(d, dk));
            p.attention.wv.push_back(take(d, dk));
        }
        p.attention.wo = take(heads * dk, d);
        for (int w = 0; w < conv_width; ++w) p.ffn.conv_w.push_back(take(d, dk));
        p.ffn.conv_b = take(1, dk);
        p.ffn.proj_w = take(dk, d);
        p.ffn.proj_b = take(1, d);
        p.ln1_gain = take(1, d);
        p.ln1_bias = take(1, d);
        p.ln2_gain = take(1, d);
        p.ln2_bias = take(1, d);
        Value y = encoder_block(p, tape.leaf(xv), {});
        return sum_all(mul(y, y));
    };
    for (int pt = 0; pt < 3; ++pt) {
        Tensor theta = random_tensor(1, flat_size, rng, -0.5, 0.5);
        // keep LN gains away from zero so the loss surface is smooth
        for (int j = flat_size - 4 * d; j < flat_size - 3 * d; ++j) theta[j] = rng.uniform(0.8, 1.2);
        for (int j = flat_size - 2 * d; j < flat_size - d; ++j) theta[j] = rng.uniform(0.8, 1.2);
        Tape probe;
        Value flat = probe.param(theta);
        Value loss = build(probe, flat);
        probe.backward(loss);
        auto eval = [&](const Tensor& th) {
            Tape t2;
            return build(t2, t2.param(th)).val()[0];
        };
        CHECK(finite_difference_check(eval, theta, probe.grad(flat), 1e-5) < 1e-4);
    }
}

// --- positional encoding --------------------------------------------------------

TEST_CASE("positional encoding: position zero adds sin 0 and cos 1") {
    Tape tape;
    const int d = 6;
    Value x = tape.leaf(Tensor::zeros(3, d));
    Tensor y = positional_encode(x).val();
    for (int j = 0; j < d; j += 2) CHECK(y.at(0, j) == 0.0);
    for (int j = 1; j < d; j += 2) CHECK(y.at(0, j) == 1.0);
}

TEST_CASE("positional encoding: deterministic across calls and collision-free to 256") {
    const int t = 256, d = 8;
    Tensor a = positional_encoding_table(t, d);
    Tensor b = positional_encoding_table(t, d);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    for (int p1 = 0; p1 < t; ++p1)
        for (int p2 = p1 + 1; p2 < t; ++p2) {
            double dist = 0.0;
            for (int j = 0; j < d; ++j) {
                const double diff = a.at(p1, j) - a.at(p2, j);
                dist += diff * diff;
            }
            CHECK(dist > 1e-12);
        }
}
