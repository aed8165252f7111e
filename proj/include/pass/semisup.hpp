#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pass/dataset.hpp"
#include "pass/encoder.hpp"
#include "pass/metrics.hpp"
#include "pass/optim.hpp"

namespace pass {

enum class Source : std::uint8_t { Real, Pseudo };

struct TrainItem {
    const TokenSequence* seq = nullptr;  // borrowed; outlives training
    ClassId label = 0;
    Source source = Source::Real;
};

struct FineTuneConfig {
    int epochs = 10;
    int batch_size = 32;
    OptimizerConfig optimizer;
    std::uint64_t seed = 0;
    int threads = 1;
    double w1 = 1.0;  // real-data loss weight
    double w2 = 0.5;  // pseudo-data loss weight
};

struct FineTuneResult {
    ModelParams<double> params;
    MetricsReport val;
    int best_epoch = -1;              // -1: the starting parameters were kept
    std::vector<double> epoch_loss;   // mean training loss per epoch
};

/// Mean over the batch of w_src * cross-entropy(softmax(logits), label).
/// Optionally returns d loss / d logits per example.
double mixed_loss(std::span<const RowVector<double>> logits, std::span<const ClassId> labels,
                  std::span<const Source> sources, double w1, double w2,
                  std::vector<RowVector<double>>* d_logits = nullptr);

/// Mini-batch fine-tuning of the whole network with mixed_loss, keeping the
/// epoch (or the starting point) with the best validation macro-F1. Later
/// epochs win ties.
FineTuneResult fine_tune(ModelParams<double> start, const std::vector<TrainItem>& items, const Dataset& val,
                         const FineTuneConfig& config);

struct InitResult {
    ModelParams<double> params;
    MetricsReport val;
};

/// M0: attach a fresh K-way head to the pre-trained encoder and fine-tune on
/// the real training data. Throws InputError if a label falls outside [0, K).
InitResult init_model(ModelParams<double> pretrained, int num_classes, const Dataset& train, const Dataset& val,
                      const FineTuneConfig& config);

struct ClassWeights {
    std::vector<double> proportions;  // pro_i
    std::vector<double> sampling;     // s_i proportional to 1 / pro_i, summing to 1
};

/// Inverse-proportion sampling weights. Throws InputError naming any class
/// whose count is zero.
ClassWeights class_weights(std::span<const std::size_t> counts);

struct PseudoLabelRecord {
    std::size_t index = 0;  // into the unlabeled pool
    ClassId label = 0;
    double confidence = 0;
    int iteration = 0;
    bool operator==(const PseudoLabelRecord&) const = default;
};

/// Keeps unlabeled examples whose max class probability reaches thr.
std::vector<PseudoLabelRecord> pseudo_label(const ModelParams<double>& params, const Dataset& unlabeled, double thr,
                                            int iteration = 0, int threads = 1);
std::vector<PseudoLabelRecord> filter_confident(std::span<const ClassifierOutput<double>> outputs, double thr,
                                                int iteration = 0);

struct WeightedSample {
    std::vector<PseudoLabelRecord> records;
    std::vector<std::string> warnings;
};

/// Draws `budget` records with replacement: a class is chosen with
/// probability s_class (renormalised over classes that have records), then a
/// record uniformly within it.
WeightedSample weighted_sample(std::span<const PseudoLabelRecord> records, const ClassWeights& weights,
                               std::size_t budget, std::uint64_t seed);

struct PseudoLabelConfig {
    double thr = 0.95;
    int limit = 5;
    double epsilon = 0.001;
    double w1 = 1.0;
    double w2 = 0.5;
    std::size_t budget = 0;  // pseudo draws per iteration; 0 = size of the train set
    std::uint64_t seed = 0;

    void validate() const;
};

struct IterationReport {
    int iteration = 0;
    std::size_t pseudo_count = 0;    // retained above threshold
    std::size_t sampled_count = 0;
    std::vector<std::size_t> pseudo_histogram;   // retained records per class
    std::vector<std::size_t> sampled_histogram;
    MetricsReport val;
    double best_f1 = 0;              // best validation macro-F1 so far, M0 included
    std::vector<std::string> warnings;
};

struct IterateResult {
    ModelParams<double> params;
    MetricsReport initial_val;
    MetricsReport best_val;
    int best_iteration = 0;          // 0 = M0
    std::vector<IterationReport> iterations;

    nlohmann::json report_json() const;
};

/// Pseudo-label iteration from M0. Each round labels the pool with the
/// current model, samples confident records by class weight, warm-starts
/// re-training on train plus the sample, and stops once the validation F1
/// gain drops to epsilon or `limit` rounds ran. Returns the best model seen.
IterateResult iterate(const ModelParams<double>& m0, const Dataset& train, const Dataset& val,
                      const Dataset& unlabeled, const PseudoLabelConfig& config, const FineTuneConfig& retrain);

}  // namespace pass
