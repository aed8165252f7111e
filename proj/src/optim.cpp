#include "pass/optim.hpp"

#include <cmath>

namespace pass {

void OptimizerConfig::validate() const {
    if (!(base_lr > 0)) throw UsageError("base_lr must be positive");
    if (!(warmup_fraction >= 0 && warmup_fraction < 1)) throw UsageError("warmup_fraction must lie in [0, 1)");
    if (total_steps < 0) throw UsageError("total_steps must be non-negative");
    if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw UsageError("Adam betas must lie in [0, 1)");
    if (!(epsilon > 0)) throw UsageError("Adam epsilon must be positive");
    if (weight_decay < 0) throw UsageError("weight_decay must be non-negative");
}

double lr_schedule(std::int64_t step, const OptimizerConfig& config) {
    const double total = static_cast<double>(config.total_steps);
    if (total <= 0) return 0.0;
    const double s = std::clamp(static_cast<double>(step), 0.0, total);
    const double warmup = config.warmup_fraction * total;
    if (s < warmup) return config.base_lr * s / warmup;
    if (total <= warmup) return config.base_lr;
    return config.base_lr * (total - s) / (total - warmup);
}

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, double lr, double weight_decay, const OptimizerConfig& c) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = c.beta1 * m[i] + (1 - c.beta1) * grad[i];
        v[i] = c.beta2 * v[i] + (1 - c.beta2) * grad[i] * grad[i];
        const double update = m[i] / (std::sqrt(v[i]) + c.epsilon) + weight_decay * param[i];
        param[i] -= lr * update;
    }
}

AdamState AdamState::for_params(const ModelParams<double>& params) {
    return {ModelParams<double>::zeros(params.config), ModelParams<double>::zeros(params.config), 0};
}

void optimizer_step(ModelParams<double>& params, const ModelParams<double>& grads, AdamState& state,
                    const OptimizerConfig& config) {
    if (!(state.m.config == params.config)) throw UsageError("optimizer state does not match parameter shapes");
    std::vector<const Matrix<double>*> g;
    std::vector<Matrix<double>*> m;
    std::vector<Matrix<double>*> v;
    double sq = 0;
    grads.for_each([&](const std::string& name, const Matrix<double>& t) {
        if (!t.allFinite()) throw NumericError("non-finite gradient in " + name);
        sq += t.squaredNorm();
        g.push_back(&t);
    });
    state.m.for_each([&](const std::string&, Matrix<double>& t) { m.push_back(&t); });
    state.v.for_each([&](const std::string&, Matrix<double>& t) { v.push_back(&t); });
    const double norm = std::sqrt(sq);
    const double clip = config.max_grad_norm > 0 && norm > config.max_grad_norm ? config.max_grad_norm / norm : 1.0;
    const double lr = lr_schedule(state.step + 1, config);

    std::size_t i = 0;
    Vector<double> scaled;
    params.for_each([&](const std::string& name, Matrix<double>& p) {
        const Matrix<double>& gi = *g[i];
        if (gi.rows() != p.rows() || gi.cols() != p.cols()) throw UsageError("gradient shape mismatch for " + name);
        scaled = gi.reshaped<Eigen::RowMajor>() * clip;
        const double decay = detail::is_bias(name) || detail::is_gain(name) ? 0.0 : config.weight_decay;
        adam_update({p.data(), static_cast<std::size_t>(p.size())}, {scaled.data(), static_cast<std::size_t>(scaled.size())},
                    {m[i]->data(), static_cast<std::size_t>(p.size())}, {v[i]->data(), static_cast<std::size_t>(p.size())},
                    lr, decay, config);
        ++i;
    });
    ++state.step;
    ++params.version;
}

}  // namespace pass
