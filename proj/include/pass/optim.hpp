#pragma once

#include <cstdint>
#include <span>

#include "pass/model.hpp"

namespace pass {

struct OptimizerConfig {
    double base_lr = 5e-5;
    double warmup_fraction = 0.03;
    std::int64_t total_steps = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-6;
    double weight_decay = 0.01;
    double max_grad_norm = 1.0;  // global clipping; <= 0 disables

    void validate() const;
};

/// Linear warmup from 0 to base_lr over warmup_fraction * total_steps, then
/// linear decay to 0 at total_steps.
double lr_schedule(std::int64_t step, const OptimizerConfig& config);

/// Adam moments with decoupled weight decay and no bias correction, the
/// BERT flavour. Operates on one flat tensor.
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, double lr, double weight_decay, const OptimizerConfig& config);

struct AdamState {
    ModelParams<double> m;
    ModelParams<double> v;
    std::int64_t step = 0;  // updates applied so far

    static AdamState for_params(const ModelParams<double>& params);
};

/// One update: checks gradients, clips by global norm, applies Adam with
/// lr_schedule(step + 1). Biases, gains and offsets are not decayed.
void optimizer_step(ModelParams<double>& params, const ModelParams<double>& grads, AdamState& state,
                    const OptimizerConfig& config);

}  // namespace pass
