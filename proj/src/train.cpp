#include "pass/train.hpp"

#include <string>

namespace pass {

int default_threads() {
    if (const char* env = std::getenv("PASS_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
    }
    return 1;
}

void reduce_gradients(std::vector<ModelParams<double>>& partial) {
    if (partial.size() <= 1) return;
    std::vector<Matrix<double>*> into;
    partial[0].for_each([&](const std::string&, Matrix<double>& t) { into.push_back(&t); });
    for (std::size_t c = 1; c < partial.size(); ++c) {
        std::size_t i = 0;
        partial[c].for_each([&](const std::string&, const Matrix<double>& t) { *into[i++] += t; });
    }
}

std::vector<ClassifierOutput<double>> predict(const ModelParams<double>& params, const Dataset& data, int threads) {
    std::vector<ClassifierOutput<double>> out(data.size());
    parallel_chunks(data.size(), threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto trace = encoder_forward(params, data[i].seq.ids, Mode::Eval, 0);
            out[i] = classify(trace.cls(), params);
        }
    });
    return out;
}

MetricsReport evaluate(const ModelParams<double>& params, const Dataset& data, int threads) {
    const auto outputs = predict(params, data, threads);
    std::vector<int> preds;
    std::vector<int> labels;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data[i].label) continue;
        preds.push_back(outputs[i].argmax);
        labels.push_back(*data[i].label);
    }
    return macro_metrics(preds, labels, params.config.num_classes);
}

}  // namespace pass
