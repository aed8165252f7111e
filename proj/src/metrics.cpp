#include "pass/metrics.hpp"

namespace pass {

namespace {
double ratio(double num, double den) { return den > 0 ? num / den : 0.0; }
}  // namespace

MetricsReport metrics_from_confusion(const std::vector<std::vector<std::size_t>>& confusion) {
    MetricsReport r;
    r.num_classes = static_cast<int>(confusion.size());
    r.confusion = confusion;
    const std::size_t k = confusion.size();
    std::size_t total = 0;
    std::size_t correct = 0;
    std::vector<std::size_t> predicted(k, 0);
    for (std::size_t i = 0; i < k; ++i) {
        if (confusion[i].size() != k) throw UsageError("confusion matrix must be square");
        for (std::size_t j = 0; j < k; ++j) {
            total += confusion[i][j];
            predicted[j] += confusion[i][j];
        }
        correct += confusion[i][i];
    }
    r.per_class.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        ClassMetrics& m = r.per_class[c];
        std::size_t support = 0;
        for (std::size_t j = 0; j < k; ++j) support += confusion[c][j];
        const auto tp = static_cast<double>(confusion[c][c]);
        const auto fp = static_cast<double>(predicted[c]) - tp;
        const auto fn = static_cast<double>(support) - tp;
        const double tn = static_cast<double>(total) - tp - fp - fn;
        m.support = support;
        m.precision = ratio(tp, tp + fp);
        m.recall = ratio(tp, tp + fn);
        m.f1 = ratio(2 * tp, 2 * tp + fp + fn);
        m.accuracy = ratio(tp + tn, static_cast<double>(total));
        r.macro_precision += m.precision;
        r.macro_recall += m.recall;
        r.macro_f1 += m.f1;
        r.macro_accuracy += m.accuracy;
    }
    if (k > 0) {
        const auto kk = static_cast<double>(k);
        r.macro_precision /= kk;
        r.macro_recall /= kk;
        r.macro_f1 /= kk;
        r.macro_accuracy /= kk;
    }
    r.accuracy = ratio(static_cast<double>(correct), static_cast<double>(total));
    return r;
}

MetricsReport macro_metrics(std::span<const int> predictions, std::span<const int> labels, int num_classes) {
    if (predictions.size() != labels.size()) throw UsageError("predictions and labels differ in length");
    if (num_classes < 1) throw UsageError("num_classes must be positive");
    const auto k = static_cast<std::size_t>(num_classes);
    std::vector<std::vector<std::size_t>> confusion(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes || predictions[i] < 0 || predictions[i] >= num_classes) {
            throw UsageError("class id outside [0, K)");
        }
        ++confusion[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(predictions[i])];
    }
    return metrics_from_confusion(confusion);
}

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json classes = nlohmann::json::array();
    for (const ClassMetrics& m : per_class) {
        classes.push_back({{"precision", m.precision},
                           {"recall", m.recall},
                           {"f1", m.f1},
                           {"accuracy", m.accuracy},
                           {"support", m.support}});
    }
    return {
        {"num_classes", num_classes},
        {"accuracy", accuracy},
        {"macro_accuracy", macro_accuracy},
        {"macro_precision", macro_precision},
        {"macro_recall", macro_recall},
        {"macro_f1", macro_f1},
        {"per_class", classes},
        {"confusion", confusion},
    };
}

}  // namespace pass
