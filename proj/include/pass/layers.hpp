#pragma once

#include <cmath>
#include <limits>
#include <span>

#include "pass/common.hpp"

namespace pass {

/// Fixed sinusoidal table: even channels sin(pos / 10000^(2i/d)), odd
/// channels cos of the same angle.
template <typename Scalar>
Matrix<Scalar> positional_encoding(Index length, Index dim) {
    Matrix<Scalar> pe(length, dim);
    for (Index pos = 0; pos < length; ++pos) {
        for (Index c = 0; c < dim; ++c) {
            const double rate = std::pow(10000.0, -static_cast<double>(c - c % 2) / static_cast<double>(dim));
            const double angle = static_cast<double>(pos) * rate;
            pe(pos, c) = static_cast<Scalar>(c % 2 == 0 ? std::sin(angle) : std::cos(angle));
        }
    }
    return pe;
}

/// Row-wise softmax restricted to columns where `valid` is true; masked
/// columns get probability exactly zero.
template <typename Derived>
void masked_softmax_rows(Eigen::MatrixBase<Derived>& scores, std::span<const std::uint8_t> valid) {
    using Scalar = typename Derived::Scalar;
    for (Index r = 0; r < scores.rows(); ++r) {
        Scalar best = -std::numeric_limits<Scalar>::infinity();
        for (Index c = 0; c < scores.cols(); ++c) {
            if (valid[static_cast<std::size_t>(c)]) best = std::max(best, scores(r, c));
        }
        Scalar sum = 0;
        for (Index c = 0; c < scores.cols(); ++c) {
            const Scalar e = valid[static_cast<std::size_t>(c)] ? std::exp(scores(r, c) - best) : Scalar(0);
            scores(r, c) = e;
            sum += e;
        }
        scores.row(r) /= sum;
    }
}

template <typename Derived>
RowVector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
    using Scalar = typename Derived::Scalar;
    const Scalar best = logits.maxCoeff();
    RowVector<Scalar> p = (logits.array() - best).exp().matrix();
    return p / p.sum();
}

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& v) {
    using Scalar = typename Derived::Scalar;
    const Scalar best = v.maxCoeff();
    return best + std::log((v.array() - best).exp().sum());
}

constexpr double kLayerNormEps = 1e-6;

/// Per-row layer normalisation. Caches the normalised rows and the
/// reciprocal standard deviations for the reverse pass.
template <typename Scalar>
Matrix<Scalar> layer_norm(const Matrix<Scalar>& x, const Matrix<Scalar>& gain, const Matrix<Scalar>& bias,
                          Matrix<Scalar>& normalized, Vector<Scalar>& inv_std) {
    const Index cols = x.cols();
    normalized.resize(x.rows(), cols);
    inv_std.resize(x.rows());
    for (Index r = 0; r < x.rows(); ++r) {
        const Scalar mean = x.row(r).mean();
        const auto centered = (x.row(r).array() - mean).matrix();
        const Scalar var = centered.squaredNorm() / static_cast<Scalar>(cols);
        inv_std(r) = Scalar(1) / std::sqrt(var + Scalar(kLayerNormEps));
        normalized.row(r) = centered * inv_std(r);
    }
    Matrix<Scalar> y = normalized.array().rowwise() * gain.row(0).array();
    y.rowwise() += bias.row(0);
    return y;
}

template <typename Scalar>
Matrix<Scalar> layer_norm_backward(const Matrix<Scalar>& dy, const Matrix<Scalar>& normalized,
                                   const Vector<Scalar>& inv_std, const Matrix<Scalar>& gain,
                                   Matrix<Scalar>& d_gain, Matrix<Scalar>& d_bias) {
    d_gain.row(0) += (dy.array() * normalized.array()).colwise().sum().matrix();
    d_bias.row(0) += dy.colwise().sum();
    const Matrix<Scalar> dxhat = dy.array().rowwise() * gain.row(0).array();
    Matrix<Scalar> dx(dy.rows(), dy.cols());
    const Scalar inv_n = Scalar(1) / static_cast<Scalar>(dy.cols());
    for (Index r = 0; r < dy.rows(); ++r) {
        const Scalar mean_d = dxhat.row(r).sum() * inv_n;
        const Scalar mean_dx = dxhat.row(r).dot(normalized.row(r)) * inv_n;
        dx.row(r) = inv_std(r) * (dxhat.row(r).array() - mean_d - normalized.row(r).array() * mean_dx).matrix();
    }
    return dx;
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
    const auto na = a.norm();
    const auto nb = b.norm();
    if (!(na > 0) || !(nb > 0)) throw NumericError("cosine similarity of a zero-norm vector");
    return a.dot(b) / (na * nb);
}

/// Gradients of cos(a, b) with respect to a and b, scaled by `upstream`.
template <typename Scalar>
void cosine_similarity_backward(const RowVector<Scalar>& a, const RowVector<Scalar>& b, Scalar upstream,
                                RowVector<Scalar>& da, RowVector<Scalar>& db) {
    const Scalar na = a.norm();
    const Scalar nb = b.norm();
    const Scalar cos = a.dot(b) / (na * nb);
    da += upstream * (b / (na * nb) - cos * a / (na * na));
    db += upstream * (a / (na * nb) - cos * b / (nb * nb));
}

}  // namespace pass
