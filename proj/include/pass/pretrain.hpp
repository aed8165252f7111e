#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pass/dataset.hpp"
#include "pass/encoder.hpp"
#include "pass/optim.hpp"

namespace pass {

enum class NegativeStrength : std::uint8_t { Strong, Weak };

/// {x, x, y}: the anchor, its duplicate (a second dropout view) and a
/// negative. Strong: different labels. Weak: same label, different comm.
struct ContrastiveTriple {
    std::size_t anchor = 0;
    std::size_t anchor_dup = 0;
    std::size_t negative = 0;
    NegativeStrength strength = NegativeStrength::Strong;
    bool operator==(const ContrastiveTriple&) const = default;
};

struct ContrastiveConfig {
    int steps = 1000;
    int batch_size = 32;
    double tau = 0.1;
    double alpha = 2.0;  // strong-negative weight
    double beta = 1.0;   // weak-negative weight
    int retry_cap = 500;
    std::uint64_t seed = 0;
    OptimizerConfig optimizer;
    int threads = 1;

    void validate() const;
};

struct PairSamples {
    std::vector<std::vector<ContrastiveTriple>> batches;  // one per step, possibly short
    std::size_t skipped_slots = 0;
    std::string diagnostic;  // non-empty when slots were skipped

    std::size_t accepted() const;
};

/// Negative sampling with a bounded retry budget per slot. A slot whose
/// retry budget runs out is skipped.
PairSamples sample_pairs(std::span<const int> labels, std::span<const std::string> comms,
                         const ContrastiveConfig& config);

struct InfoNceGrad {
    RowVector<double> anchor;
    std::vector<RowVector<double>> candidates;
};

/// -log softmax over cosine similarities / tau, evaluated at `target`.
/// With `grad`, accumulates d loss / d vectors (scaled by `scale`).
double info_nce(const RowVector<double>& anchor, std::span<const RowVector<double>> candidates,
                std::size_t target, double tau, InfoNceGrad* grad = nullptr, double scale = 1.0);

// Convenience overload: `target` must be one of `candidates`.
double info_nce(const RowVector<double>& anchor, const RowVector<double>& target,
                std::span<const RowVector<double>> candidates, double tau);

/// L_IN(x, y+) - w * L_IN(x, y-), w = alpha for strong negatives and beta for
/// weak ones, both terms against the same candidate set.
double cpt_loss(const RowVector<double>& anchor, std::span<const RowVector<double>> candidates,
                std::size_t positive, std::size_t negative, NegativeStrength strength,
                const ContrastiveConfig& config, InfoNceGrad* grad = nullptr, double scale = 1.0);

struct BatchEmbeddings {
    std::vector<RowVector<double>> anchors;
    std::vector<RowVector<double>> positives;
    std::vector<RowVector<double>> negatives;
};

struct BatchLossGrad {
    double loss = 0;
    std::vector<RowVector<double>> d_anchors, d_positives, d_negatives;
};

/// Mean CPT loss over a batch. Candidates for every anchor are all positives
/// and negatives of the batch, laid out as [positives..., negatives...].
BatchLossGrad cpt_batch_loss(const BatchEmbeddings& z, std::span<const NegativeStrength> strengths,
                             const ContrastiveConfig& config, bool want_grad = true);

struct PretrainResult {
    ModelParams<double> params;
    std::vector<double> loss_curve;        // mean loss of each executed step
    std::vector<std::int64_t> loss_steps;  // step index of each loss_curve entry
    std::size_t skipped_slots = 0;
};

// Seeds of the three dropout views of a triple.
std::uint64_t view_seed(std::uint64_t root, std::int64_t step, std::size_t slot, int role);

/// Contrastive pre-training over the given labeled examples.
/// Throws NumericError on a non-finite loss and InputError if sampling
/// produced no triples at all.
PretrainResult pretrain_loop(const Dataset& train, const ContrastiveConfig& config, ModelParams<double> params);

}  // namespace pass
