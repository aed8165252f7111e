#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pass/layers.hpp"
#include "pass/model.hpp"
#include "pass/tokenize.hpp"

namespace pass {

enum class Mode { Train, Eval };

/// Intermediates of one encoder block kept for the reverse pass. Mask
/// matrices hold 0 or 1/(1-p) and are empty when dropout is inactive.
template <typename Scalar>
struct BlockCache {
    Matrix<Scalar> input;
    Matrix<Scalar> q, k, v;
    std::vector<Matrix<Scalar>> attention;  // per head, L x L, rows sum to 1
    Matrix<Scalar> context;
    Matrix<Scalar> attn_mask;
    Matrix<Scalar> attn_out;  // after output projection and dropout
    Matrix<Scalar> norm1;
    Vector<Scalar> inv_std1;
    Matrix<Scalar> h1;
    Matrix<Scalar> ffn_pre;
    Matrix<Scalar> ffn_mask;
    Matrix<Scalar> ffn_act;   // relu(ffn_pre) after dropout
    Matrix<Scalar> out_mask;
    Matrix<Scalar> norm2;
    Vector<Scalar> inv_std2;
    Matrix<Scalar> output;
};

template <typename Scalar>
struct ProjectionTrace {
    RowVector<Scalar> input;
    RowVector<Scalar> pre;
    RowVector<Scalar> hidden;  // rectified
    RowVector<Scalar> z;
};

template <typename Scalar>
struct ClassifierOutput {
    RowVector<Scalar> logits;
    RowVector<Scalar> probs;
    int argmax = 0;
    Scalar confidence = 0;  // max probability
};

/// Everything produced by one forward evaluation.
template <typename Scalar>
struct ForwardTrace {
    std::vector<int> ids;
    std::vector<std::uint8_t> key_valid;  // 0 for PAD positions
    Matrix<Scalar> embedded;
    std::vector<BlockCache<Scalar>> blocks;
    std::optional<ProjectionTrace<Scalar>> projection;
    std::optional<ClassifierOutput<Scalar>> classifier;
    std::uint64_t params_version = 0;
    Mode mode = Mode::Eval;
    std::uint64_t seed = 0;

    const Matrix<Scalar>& hidden() const { return blocks.empty() ? embedded : blocks.back().output; }
    RowVector<Scalar> cls() const { return hidden().row(0); }
};

struct Heads {
    bool project = false;
    bool classify = false;
};

/// Upstream gradients for whichever heads the loss touched.
template <typename Scalar>
struct Adjoint {
    std::optional<RowVector<Scalar>> dz;
    std::optional<RowVector<Scalar>> dlogits;
    std::optional<Matrix<Scalar>> dhidden;  // direct gradient on the final hidden states
};

// ---------------------------------------------------------------------------

template <typename Scalar>
const Matrix<Scalar>& positional_table(Index length, Index dim) {
    thread_local Matrix<Scalar> table;
    if (table.rows() != length || table.cols() != dim) table = positional_encoding<Scalar>(length, dim);
    return table;
}

/// Token rows of the embedding table plus the positional term.
template <typename Scalar>
Matrix<Scalar> embed(std::span<const int> ids, const ModelParams<Scalar>& params) {
    const EncoderConfig& c = params.config;
    const auto length = static_cast<Index>(ids.size());
    if (length > c.max_len) {
        throw UsageError("sequence of length " + std::to_string(length) + " exceeds max_len " +
                         std::to_string(c.max_len));
    }
    Matrix<Scalar> x(length, c.d_model);
    for (Index i = 0; i < length; ++i) {
        const int id = ids[static_cast<std::size_t>(i)];
        if (id < 0 || id >= c.vocab_size) {
            throw UsageError("token id " + std::to_string(id) + " outside vocabulary of size " +
                             std::to_string(c.vocab_size));
        }
        x.row(i) = params.embedding.row(id);
    }
    x += positional_table<Scalar>(length, c.d_model);
    return x;
}

namespace detail {

template <typename Scalar>
Matrix<Scalar> dropout_mask(Index rows, Index cols, double rate, Rng& rng) {
    Matrix<Scalar> mask(rows, cols);
    const auto keep = static_cast<Scalar>(1.0 / (1.0 - rate));
    for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < rate ? Scalar(0) : keep;
    return mask;
}

template <typename Scalar>
Matrix<Scalar> affine(const Matrix<Scalar>& x, const Matrix<Scalar>& w, const Matrix<Scalar>& b) {
    Matrix<Scalar> y = x * w;
    y.rowwise() += b.row(0);
    return y;
}

template <typename Scalar>
void check_finite(const Matrix<Scalar>& m, std::size_t block, const char* site) {
    if (!m.allFinite()) {
        throw NumericError("non-finite activation at " + std::string(site) + " of block " + std::to_string(block));
    }
}

template <typename Scalar>
void block_forward(const BlockParams<Scalar>& p, const EncoderConfig& c, BlockCache<Scalar>& cache,
                   std::span<const std::uint8_t> key_valid, bool dropout, Rng& rng, std::size_t index) {
    const Index length = cache.input.rows();
    const Index dh = c.d_head;
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));

    cache.q = affine(cache.input, p.wq, p.bq);
    cache.k = affine(cache.input, p.wk, p.bk);
    cache.v = affine(cache.input, p.wv, p.bv);
    cache.context.resize(length, c.d_model);
    cache.attention.resize(static_cast<std::size_t>(c.heads));
    for (Index h = 0; h < c.heads; ++h) {
        Matrix<Scalar>& probs = cache.attention[static_cast<std::size_t>(h)];
        probs.noalias() = cache.q.middleCols(h * dh, dh) * cache.k.middleCols(h * dh, dh).transpose();
        probs *= scale;
        masked_softmax_rows(probs, key_valid);
        cache.context.middleCols(h * dh, dh).noalias() = probs * cache.v.middleCols(h * dh, dh);
    }
    cache.attn_out = affine(cache.context, p.wo, p.bo);
    if (dropout) {
        cache.attn_mask = dropout_mask<Scalar>(length, c.d_model, c.dropout, rng);
        cache.attn_out.array() *= cache.attn_mask.array();
    } else {
        cache.attn_mask.resize(0, 0);
    }
    check_finite(cache.attn_out, index, "attention");

    const Matrix<Scalar> sum1 = cache.input + cache.attn_out;
    cache.h1 = layer_norm(sum1, p.ln1_gain, p.ln1_bias, cache.norm1, cache.inv_std1);

    cache.ffn_pre = affine(cache.h1, p.w1, p.b1);
    cache.ffn_act = cache.ffn_pre.cwiseMax(Scalar(0));
    if (dropout) {
        cache.ffn_mask = dropout_mask<Scalar>(length, c.ffn_dim, c.dropout, rng);
        cache.ffn_act.array() *= cache.ffn_mask.array();
    } else {
        cache.ffn_mask.resize(0, 0);
    }
    Matrix<Scalar> ffn_out = affine(cache.ffn_act, p.w2, p.b2);
    if (dropout) {
        cache.out_mask = dropout_mask<Scalar>(length, c.d_model, c.dropout, rng);
        ffn_out.array() *= cache.out_mask.array();
    } else {
        cache.out_mask.resize(0, 0);
    }
    check_finite(ffn_out, index, "feed-forward");

    const Matrix<Scalar> sum2 = cache.h1 + ffn_out;
    cache.output = layer_norm(sum2, p.ln2_gain, p.ln2_bias, cache.norm2, cache.inv_std2);
    check_finite(cache.output, index, "output");
}

template <typename Scalar>
Matrix<Scalar> block_backward(const BlockParams<Scalar>& p, const EncoderConfig& c, const BlockCache<Scalar>& cache,
                              const Matrix<Scalar>& d_out, BlockParams<Scalar>& g) {
    const Index dh = c.d_head;
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));

    const Matrix<Scalar> d_sum2 = layer_norm_backward(d_out, cache.norm2, cache.inv_std2, p.ln2_gain, g.ln2_gain, g.ln2_bias);
    Matrix<Scalar> d_h1 = d_sum2;
    Matrix<Scalar> d_ffn_out = d_sum2;
    if (cache.out_mask.size() > 0) d_ffn_out.array() *= cache.out_mask.array();
    g.w2.noalias() += cache.ffn_act.transpose() * d_ffn_out;
    g.b2.row(0) += d_ffn_out.colwise().sum();
    Matrix<Scalar> d_pre = d_ffn_out * p.w2.transpose();
    if (cache.ffn_mask.size() > 0) d_pre.array() *= cache.ffn_mask.array();
    d_pre.array() *= (cache.ffn_pre.array() > Scalar(0)).template cast<Scalar>();
    g.w1.noalias() += cache.h1.transpose() * d_pre;
    g.b1.row(0) += d_pre.colwise().sum();
    d_h1.noalias() += d_pre * p.w1.transpose();

    const Matrix<Scalar> d_sum1 = layer_norm_backward(d_h1, cache.norm1, cache.inv_std1, p.ln1_gain, g.ln1_gain, g.ln1_bias);
    Matrix<Scalar> d_input = d_sum1;
    Matrix<Scalar> d_attn_out = d_sum1;
    if (cache.attn_mask.size() > 0) d_attn_out.array() *= cache.attn_mask.array();
    g.wo.noalias() += cache.context.transpose() * d_attn_out;
    g.bo.row(0) += d_attn_out.colwise().sum();
    const Matrix<Scalar> d_context = d_attn_out * p.wo.transpose();

    const Index length = cache.input.rows();
    Matrix<Scalar> dq(length, c.d_model), dk(length, c.d_model), dv(length, c.d_model);
    for (Index h = 0; h < c.heads; ++h) {
        const Matrix<Scalar>& probs = cache.attention[static_cast<std::size_t>(h)];
        const auto d_ctx = d_context.middleCols(h * dh, dh);
        dv.middleCols(h * dh, dh).noalias() = probs.transpose() * d_ctx;
        Matrix<Scalar> d_scores = d_ctx * cache.v.middleCols(h * dh, dh).transpose();
        const Vector<Scalar> row_dot = (d_scores.array() * probs.array()).rowwise().sum();
        d_scores = (probs.array() * (d_scores.colwise() - row_dot).array()).matrix() * scale;
        dq.middleCols(h * dh, dh).noalias() = d_scores * cache.k.middleCols(h * dh, dh);
        dk.middleCols(h * dh, dh).noalias() = d_scores.transpose() * cache.q.middleCols(h * dh, dh);
    }
    g.wq.noalias() += cache.input.transpose() * dq;
    g.wk.noalias() += cache.input.transpose() * dk;
    g.wv.noalias() += cache.input.transpose() * dv;
    g.bq.row(0) += dq.colwise().sum();
    g.bk.row(0) += dk.colwise().sum();
    g.bv.row(0) += dv.colwise().sum();
    d_input.noalias() += dq * p.wq.transpose();
    d_input.noalias() += dk * p.wk.transpose();
    d_input.noalias() += dv * p.wv.transpose();
    return d_input;
}

}  // namespace detail

/// Embedding plus the block stack. Dropout is sampled only in train mode,
/// from a generator seeded with `seed`, after the attention projection, the
/// feed-forward activation and the feed-forward output.
template <typename Scalar>
ForwardTrace<Scalar> encoder_forward(const ModelParams<Scalar>& params, std::span<const int> ids, Mode mode,
                                     std::uint64_t seed) {
    const EncoderConfig& c = params.config;
    ForwardTrace<Scalar> trace;
    trace.ids.assign(ids.begin(), ids.end());
    trace.key_valid.resize(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) trace.key_valid[i] = ids[i] != special::Pad;
    if (std::find(trace.key_valid.begin(), trace.key_valid.end(), 1) == trace.key_valid.end()) {
        throw UsageError("sequence consists only of padding");
    }
    trace.embedded = embed(ids, params);
    if (!trace.embedded.allFinite()) throw NumericError("non-finite embedding");
    trace.params_version = params.version;
    trace.mode = mode;
    trace.seed = seed;

    const bool dropout = mode == Mode::Train && c.dropout > 0.0;
    Rng rng(seed);
    trace.blocks.resize(params.blocks.size());
    for (std::size_t b = 0; b < params.blocks.size(); ++b) {
        trace.blocks[b].input = b == 0 ? trace.embedded : trace.blocks[b - 1].output;
        detail::block_forward(params.blocks[b], c, trace.blocks[b], trace.key_valid, dropout, rng, b);
    }
    return trace;
}

/// Dense, rectifier, dense.
template <typename Scalar>
ProjectionTrace<Scalar> project(const RowVector<Scalar>& h, const ModelParams<Scalar>& params) {
    ProjectionTrace<Scalar> t;
    t.input = h;
    t.pre = h * params.proj_w1 + params.proj_b1.row(0);
    t.hidden = t.pre.cwiseMax(Scalar(0));
    t.z = t.hidden * params.proj_w2 + params.proj_b2.row(0);
    return t;
}

template <typename Scalar>
ClassifierOutput<Scalar> classify(const RowVector<Scalar>& h, const ModelParams<Scalar>& params) {
    if (!params.has_classifier()) throw UsageError("model has no classification head");
    ClassifierOutput<Scalar> out;
    out.logits = h * params.cls_w + params.cls_b.row(0);
    out.probs = softmax(out.logits);
    Index best = 0;
    out.confidence = out.probs.maxCoeff(&best);
    out.argmax = static_cast<int>(best);
    return out;
}

template <typename Scalar>
ForwardTrace<Scalar> forward(const ModelParams<Scalar>& params, std::span<const int> ids, Mode mode,
                             std::uint64_t seed, Heads heads) {
    ForwardTrace<Scalar> trace = encoder_forward(params, ids, mode, seed);
    const RowVector<Scalar> h = trace.cls();
    if (heads.project) trace.projection = project(h, params);
    if (heads.classify) trace.classifier = classify(h, params);
    return trace;
}

/// Reverse pass. Accumulates into `grads` (which must be shaped like params).
template <typename Scalar>
void backward(const ModelParams<Scalar>& params, const ForwardTrace<Scalar>& trace, const Adjoint<Scalar>& adjoint,
              ModelParams<Scalar>& grads) {
    if (trace.params_version != params.version) {
        throw UsageError("stale forward trace: parameters changed since the forward pass");
    }
    const EncoderConfig& c = params.config;
    const RowVector<Scalar> h = trace.cls();
    Matrix<Scalar> d_hidden = Matrix<Scalar>::Zero(trace.hidden().rows(), c.d_model);
    if (adjoint.dhidden) d_hidden += *adjoint.dhidden;

    if (adjoint.dz) {
        if (!trace.projection) throw UsageError("projection adjoint without a projection forward");
        const ProjectionTrace<Scalar>& pt = *trace.projection;
        grads.proj_w2.noalias() += pt.hidden.transpose() * *adjoint.dz;
        grads.proj_b2.row(0) += *adjoint.dz;
        RowVector<Scalar> d_pre = *adjoint.dz * params.proj_w2.transpose();
        d_pre.array() *= (pt.pre.array() > Scalar(0)).template cast<Scalar>();
        grads.proj_w1.noalias() += pt.input.transpose() * d_pre;
        grads.proj_b1.row(0) += d_pre;
        d_hidden.row(0) += d_pre * params.proj_w1.transpose();
    }
    if (adjoint.dlogits) {
        if (!params.has_classifier()) throw UsageError("classifier adjoint on a model without a head");
        grads.cls_w.noalias() += h.transpose() * *adjoint.dlogits;
        grads.cls_b.row(0) += *adjoint.dlogits;
        d_hidden.row(0) += *adjoint.dlogits * params.cls_w.transpose();
    }

    for (std::size_t b = params.blocks.size(); b-- > 0;) {
        d_hidden = detail::block_backward(params.blocks[b], c, trace.blocks[b], d_hidden, grads.blocks[b]);
    }
    for (std::size_t i = 0; i < trace.ids.size(); ++i) {
        grads.embedding.row(trace.ids[i]) += d_hidden.row(static_cast<Index>(i));
    }
}

}  // namespace pass
