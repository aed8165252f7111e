#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pass/common.hpp"

namespace pass {

struct ClassMetrics {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    double accuracy = 0;  // one-vs-rest accuracy
    std::size_t support = 0;
};

/// Macro-averaged metrics with 0/0 taken as 0. `accuracy` is overall
/// accuracy; `macro_accuracy` is the mean one-vs-rest accuracy per class.
struct MetricsReport {
    int num_classes = 0;
    std::vector<ClassMetrics> per_class;
    double accuracy = 0;
    double macro_accuracy = 0;
    double macro_precision = 0;
    double macro_recall = 0;
    double macro_f1 = 0;
    std::vector<std::vector<std::size_t>> confusion;  // [label][prediction]

    nlohmann::json to_json() const;
};

MetricsReport macro_metrics(std::span<const int> predictions, std::span<const int> labels, int num_classes);
MetricsReport metrics_from_confusion(const std::vector<std::vector<std::size_t>>& confusion);

}  // namespace pass
