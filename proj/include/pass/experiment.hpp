#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "pass/flow.hpp"
#include "pass/metrics.hpp"
#include "pass/model.hpp"
#include "pass/pretrain.hpp"
#include "pass/semisup.hpp"
#include "pass/tokenize.hpp"

namespace pass {

/// Everything one end-to-end run needs besides the data and the seed.
/// Seeds inside the nested configs are ignored; each stage derives its own
/// from the run seed.
struct ExperimentConfig {
    SequenceShape shape;
    EncoderConfig encoder;  // vocab_size, max_len and num_classes are filled in per run
    ContrastiveConfig cpt;
    FineTuneConfig finetune;
    PseudoLabelConfig pli;
    std::array<double, 3> ratios{0.8, 0.1, 0.1};
    bool stratified = true;
    int threads = 1;

    // Small encoder (d=64, N=2, m=32, n=8) with a schedule sized for one core.
    static ExperimentConfig desk();
};

/// Which pipeline components a run uses. Names: full, no_pli, no_cpt, no_rp,
/// no_pl, and '+'-joined combinations such as "no_cpt+no_pli".
struct Variant {
    bool cpt = true;
    bool pli = true;
    bool rp = true;
    bool pl = true;

    static Variant parse(const std::string& name);
    std::string name() const;
    bool operator==(const Variant&) const = default;
};

struct RunOutcome {
    Variant variant;
    std::uint64_t seed = 0;
    MetricsReport m0_val;
    MetricsReport final_val;
    MetricsReport test;
    int best_iteration = 0;
    std::vector<double> cpt_loss;
    ModelParams<double> params;

    nlohmann::json summary_json() const;
};

/// split -> vocab (train + unlabeled flows) -> encode -> [CPT] -> M0 ->
/// [pseudo-label iteration] -> test metrics.
RunOutcome run_pipeline(const std::vector<Flow>& labeled, const std::vector<Flow>& unlabeled, const Variant& variant,
                        const ExperimentConfig& config, std::uint64_t seed);

std::vector<RunOutcome> run_ablation(const std::vector<Flow>& labeled, const std::vector<Flow>& unlabeled,
                                     const Variant& variant, const std::vector<std::uint64_t>& seeds,
                                     const ExperimentConfig& config);

double median(std::vector<double> values);

}  // namespace pass
