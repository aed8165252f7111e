#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pass/common.hpp"

namespace pass {

struct EncoderConfig {
    int vocab_size = special_count();
    int d_model = 512;
    int heads = 8;
    int d_head = 64;
    int ffn_dim = 1024;
    int n_blocks = 6;
    double dropout = 0.1;
    int max_len = 98;
    int proj_dim = 128;
    int num_classes = 0;  // 0: no classification head attached

    static constexpr int special_count() { return 4; }

    // Small configuration used by the test suites and synthetic benchmarks.
    static EncoderConfig desk(int vocab_size, int num_classes = 0);

    void validate() const;
    bool operator==(const EncoderConfig&) const = default;
};

/// Parameters of one encoder block. Biases, gains and offsets are 1 x n.
template <typename Scalar>
struct BlockParams {
    Matrix<Scalar> wq, bq, wk, bk, wv, bv, wo, bo;
    Matrix<Scalar> ln1_gain, ln1_bias;
    Matrix<Scalar> w1, b1, w2, b2;
    Matrix<Scalar> ln2_gain, ln2_bias;

    template <typename Self, typename F>
    static void visit(Self& self, const std::string& prefix, F&& f) {
        f(prefix + "attn.wq", self.wq);
        f(prefix + "attn.bq", self.bq);
        f(prefix + "attn.wk", self.wk);
        f(prefix + "attn.bk", self.bk);
        f(prefix + "attn.wv", self.wv);
        f(prefix + "attn.bv", self.bv);
        f(prefix + "attn.wo", self.wo);
        f(prefix + "attn.bo", self.bo);
        f(prefix + "ln1.gain", self.ln1_gain);
        f(prefix + "ln1.bias", self.ln1_bias);
        f(prefix + "ffn.w1", self.w1);
        f(prefix + "ffn.b1", self.b1);
        f(prefix + "ffn.w2", self.w2);
        f(prefix + "ffn.b2", self.b2);
        f(prefix + "ln2.gain", self.ln2_gain);
        f(prefix + "ln2.bias", self.ln2_bias);
    }
};

/// Embedding table, encoder stack, projection head and classification head.
/// The same type doubles as the gradient accumulator.
template <typename Scalar>
struct ModelParams {
    EncoderConfig config;
    Matrix<Scalar> embedding;
    std::vector<BlockParams<Scalar>> blocks;
    Matrix<Scalar> proj_w1, proj_b1, proj_w2, proj_b2;
    Matrix<Scalar> cls_w, cls_b;
    // Bumped by every parameter update; traces remember the version they saw.
    std::uint64_t version = 0;

    bool has_classifier() const { return config.num_classes > 0; }

    // f(name, tensor) over every tensor in a fixed order.
    template <typename F>
    void for_each(F&& f) {
        visit_all(*this, f);
    }
    template <typename F>
    void for_each(F&& f) const {
        visit_all(*this, f);
    }

    static ModelParams zeros(const EncoderConfig& config);
    static ModelParams init(const EncoderConfig& config, std::uint64_t seed);

    void set_zero() {
        for_each([](const std::string&, Matrix<Scalar>& t) { t.setZero(); });
    }
    std::size_t parameter_count() const {
        std::size_t n = 0;
        for_each([&](const std::string&, const Matrix<Scalar>& t) { n += static_cast<std::size_t>(t.size()); });
        return n;
    }
    bool all_finite() const {
        bool ok = true;
        for_each([&](const std::string&, const Matrix<Scalar>& t) { ok = ok && t.allFinite(); });
        return ok;
    }

    template <typename Other>
    ModelParams<Other> cast() const;

    bool operator==(const ModelParams& o) const {
        if (!(config == o.config)) return false;
        std::vector<const Matrix<Scalar>*> mine;
        for_each([&](const std::string&, const Matrix<Scalar>& t) { mine.push_back(&t); });
        std::size_t i = 0;
        bool same = true;
        o.for_each([&](const std::string&, const Matrix<Scalar>& t) {
            const Matrix<Scalar>& m = *mine[i++];
            same = same && m.rows() == t.rows() && m.cols() == t.cols() && m == t;
        });
        return same;
    }

private:
    template <typename Self, typename F>
    static void visit_all(Self& self, F& f) {
        f(std::string("embedding"), self.embedding);
        for (std::size_t b = 0; b < self.blocks.size(); ++b) {
            BlockParams<Scalar>::visit(self.blocks[b], "block" + std::to_string(b) + ".", f);
        }
        f(std::string("proj.w1"), self.proj_w1);
        f(std::string("proj.b1"), self.proj_b1);
        f(std::string("proj.w2"), self.proj_w2);
        f(std::string("proj.b2"), self.proj_b2);
        if (self.config.num_classes > 0) {
            f(std::string("cls.w"), self.cls_w);
            f(std::string("cls.b"), self.cls_b);
        }
    }
};

// Replaces (or adds) the classification head with a fresh K-way layer.
template <typename Scalar>
void attach_classifier(ModelParams<Scalar>& params, int num_classes, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Implementation

namespace detail {

template <typename Scalar>
Matrix<Scalar> uniform_matrix(Index rows, Index cols, double bound, std::uint64_t seed) {
    Rng rng(seed);
    Matrix<Scalar> m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
    return m;
}

template <typename Scalar>
void shape_params(ModelParams<Scalar>& p) {
    const EncoderConfig& c = p.config;
    const Index d = c.d_model;
    p.embedding = Matrix<Scalar>::Zero(c.vocab_size, d);
    p.blocks.assign(static_cast<std::size_t>(c.n_blocks), {});
    for (auto& b : p.blocks) {
        for (auto* w : {&b.wq, &b.wk, &b.wv, &b.wo}) *w = Matrix<Scalar>::Zero(d, d);
        for (auto* v : {&b.bq, &b.bk, &b.bv, &b.bo, &b.ln1_gain, &b.ln1_bias, &b.b2, &b.ln2_gain, &b.ln2_bias}) {
            *v = Matrix<Scalar>::Zero(1, d);
        }
        b.w1 = Matrix<Scalar>::Zero(d, c.ffn_dim);
        b.b1 = Matrix<Scalar>::Zero(1, c.ffn_dim);
        b.w2 = Matrix<Scalar>::Zero(c.ffn_dim, d);
    }
    p.proj_w1 = Matrix<Scalar>::Zero(d, d);
    p.proj_b1 = Matrix<Scalar>::Zero(1, d);
    p.proj_w2 = Matrix<Scalar>::Zero(d, c.proj_dim);
    p.proj_b2 = Matrix<Scalar>::Zero(1, c.proj_dim);
    if (c.num_classes > 0) {
        p.cls_w = Matrix<Scalar>::Zero(d, c.num_classes);
        p.cls_b = Matrix<Scalar>::Zero(1, c.num_classes);
    } else {
        p.cls_w.resize(0, 0);
        p.cls_b.resize(0, 0);
    }
}

inline bool is_gain(const std::string& name) { return name.ends_with(".gain"); }
inline bool is_bias(const std::string& name) {
    return name.ends_with(".bias") || name.ends_with(".bq") || name.ends_with(".bk") ||
           name.ends_with(".bv") || name.ends_with(".bo") || name.ends_with(".b1") ||
           name.ends_with(".b2") || name == "cls.b";
}

}  // namespace detail

template <typename Scalar>
ModelParams<Scalar> ModelParams<Scalar>::zeros(const EncoderConfig& config) {
    config.validate();
    ModelParams p;
    p.config = config;
    detail::shape_params(p);
    return p;
}

// Dense weights: U(-1/sqrt(fan_in), 1/sqrt(fan_in)). Embeddings: U(-1, 1) so
// token identity is on the same scale as the positional term. Gains 1,
// offsets and biases 0. Each tensor draws from its own stream keyed by its position.
template <typename Scalar>
ModelParams<Scalar> ModelParams<Scalar>::init(const EncoderConfig& config, std::uint64_t seed) {
    ModelParams p = zeros(config);
    std::uint64_t tensor = 0;
    p.for_each([&](const std::string& name, Matrix<Scalar>& t) {
        const std::uint64_t s = derive_seed(seed, ++tensor);
        if (detail::is_gain(name)) {
            t.setOnes();
        } else if (detail::is_bias(name)) {
            t.setZero();
        } else if (name == "embedding") {
            t = detail::uniform_matrix<Scalar>(t.rows(), t.cols(), 1.0, s);
        } else {
            t = detail::uniform_matrix<Scalar>(t.rows(), t.cols(), 1.0 / std::sqrt(double(t.rows())), s);
        }
    });
    return p;
}

template <typename Scalar>
template <typename Other>
ModelParams<Other> ModelParams<Scalar>::cast() const {
    ModelParams<Other> out = ModelParams<Other>::zeros(config);
    std::vector<const Matrix<Scalar>*> src;
    for_each([&](const std::string&, const Matrix<Scalar>& t) { src.push_back(&t); });
    std::size_t i = 0;
    out.for_each([&](const std::string&, Matrix<Other>& t) { t = src[i++]->template cast<Other>(); });
    out.version = version;
    return out;
}

template <typename Scalar>
void attach_classifier(ModelParams<Scalar>& params, int num_classes, std::uint64_t seed) {
    if (num_classes < 2) throw UsageError("classification head needs at least two classes");
    params.config.num_classes = num_classes;
    const Index d = params.config.d_model;
    params.cls_w = detail::uniform_matrix<Scalar>(d, num_classes, 1.0 / std::sqrt(double(d)),
                                                  derive_seed(seed, 0xc1a55));
    params.cls_b = Matrix<Scalar>::Zero(1, num_classes);
    ++params.version;
}

}  // namespace pass
