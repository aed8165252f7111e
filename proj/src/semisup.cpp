#include "pass/semisup.hpp"

#include <algorithm>
#include <cmath>

#include "pass/train.hpp"

namespace pass {

double mixed_loss(std::span<const RowVector<double>> logits, std::span<const ClassId> labels,
                  std::span<const Source> sources, double w1, double w2, std::vector<RowVector<double>>* d_logits) {
    const std::size_t b = logits.size();
    if (labels.size() != b || sources.size() != b) throw UsageError("mixed_loss inputs differ in length");
    if (d_logits) d_logits->assign(b, RowVector<double>());
    if (b == 0) return 0.0;
    const double inv_b = 1.0 / static_cast<double>(b);
    double total = 0;
    for (std::size_t i = 0; i < b; ++i) {
        const double w = sources[i] == Source::Real ? w1 : w2;
        const auto label = static_cast<Index>(labels[i]);
        if (label < 0 || label >= logits[i].size()) throw UsageError("label outside the logit range");
        total += w * (log_sum_exp(logits[i]) - logits[i](label)) * inv_b;
        if (d_logits) {
            RowVector<double> g = softmax(logits[i]);
            g(label) -= 1.0;
            (*d_logits)[i] = g * (w * inv_b);
        }
    }
    return total;
}

FineTuneResult fine_tune(ModelParams<double> params, const std::vector<TrainItem>& items, const Dataset& val,
                         const FineTuneConfig& config) {
    if (!params.has_classifier()) throw UsageError("fine-tuning needs a classification head");
    if (config.batch_size <= 0) throw UsageError("batch size must be positive");
    FineTuneResult result;
    const bool select = !val.empty();
    double best_f1 = -1;
    if (select) {
        result.val = evaluate(params, val, config.threads);
        best_f1 = result.val.macro_f1;
    }
    result.params = params;
    if (items.empty() || config.epochs <= 0) return result;

    const auto bz = static_cast<std::size_t>(config.batch_size);
    const std::size_t per_epoch = (items.size() + bz - 1) / bz;
    OptimizerConfig opt = config.optimizer;
    opt.total_steps = static_cast<std::int64_t>(per_epoch) * config.epochs;
    AdamState state = AdamState::for_params(params);
    const Heads heads{.project = false, .classify = true};

    std::vector<std::size_t> order(items.size());
    std::int64_t step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng(derive_seed(config.seed, 0xe90c, static_cast<std::uint64_t>(epoch)));
        shuffle(order, rng);
        double epoch_loss = 0;
        for (std::size_t start = 0; start < order.size(); start += bz, ++step) {
            const std::size_t b = std::min(bz, order.size() - start);
            std::vector<ForwardTrace<double>> traces(b);
            parallel_chunks(b, config.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
                for (std::size_t j = begin; j < end; ++j) {
                    const TrainItem& item = items[order[start + j]];
                    traces[j] = forward(params, item.seq->ids, Mode::Train,
                                        derive_seed(config.seed, static_cast<std::uint64_t>(step) + 1, j), heads);
                }
            });
            std::vector<RowVector<double>> logits(b);
            std::vector<ClassId> labels(b);
            std::vector<Source> sources(b);
            for (std::size_t j = 0; j < b; ++j) {
                logits[j] = traces[j].classifier->logits;
                labels[j] = items[order[start + j]].label;
                sources[j] = items[order[start + j]].source;
            }
            std::vector<RowVector<double>> d_logits;
            const double loss = mixed_loss(logits, labels, sources, config.w1, config.w2, &d_logits);
            if (!std::isfinite(loss)) throw NumericError("non-finite fine-tuning loss at step " + std::to_string(step));
            epoch_loss += loss * static_cast<double>(b);

            std::vector<ModelParams<double>> partial(chunk_count(b, config.threads), ModelParams<double>::zeros(params.config));
            parallel_chunks(b, config.threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
                for (std::size_t j = begin; j < end; ++j) {
                    Adjoint<double> adj;
                    adj.dlogits = d_logits[j];
                    backward(params, traces[j], adj, partial[chunk]);
                }
            });
            reduce_gradients(partial);
            optimizer_step(params, partial[0], state, opt);
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(items.size()));
        if (select) {
            MetricsReport m = evaluate(params, val, config.threads);
            if (m.macro_f1 >= best_f1) {
                best_f1 = m.macro_f1;
                result.val = std::move(m);
                result.params = params;
                result.best_epoch = epoch;
            }
        }
    }
    if (!select) {
        result.params = std::move(params);
        result.best_epoch = config.epochs - 1;
    }
    return result;
}

InitResult init_model(ModelParams<double> pretrained, int num_classes, const Dataset& train, const Dataset& val,
                      const FineTuneConfig& config) {
    if (num_classes < 2) throw InputError("classification needs at least two classes");
    // label_counts rejects labels outside [0, K).
    label_counts(train, num_classes);
    label_counts(val, num_classes);
    attach_classifier(pretrained, num_classes, derive_seed(config.seed, 0x4ead));
    std::vector<TrainItem> items;
    for (const Example& e : train) {
        if (e.label) items.push_back({&e.seq, *e.label, Source::Real});
    }
    FineTuneResult ft = fine_tune(std::move(pretrained), items, val, config);
    return {std::move(ft.params), std::move(ft.val)};
}

ClassWeights class_weights(std::span<const std::size_t> counts) {
    if (counts.empty()) throw InputError("class weights need at least one class");
    double total = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) throw InputError("class " + std::to_string(i) + " has no training examples");
        total += static_cast<double>(counts[i]);
    }
    ClassWeights w;
    double inv_sum = 0;
    for (std::size_t c : counts) {
        w.proportions.push_back(static_cast<double>(c) / total);
        inv_sum += 1.0 / w.proportions.back();
    }
    for (double pro : w.proportions) w.sampling.push_back((1.0 / pro) / inv_sum);
    return w;
}

std::vector<PseudoLabelRecord> filter_confident(std::span<const ClassifierOutput<double>> outputs, double thr,
                                                int iteration) {
    std::vector<PseudoLabelRecord> kept;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        if (outputs[i].confidence >= thr) kept.push_back({i, outputs[i].argmax, outputs[i].confidence, iteration});
    }
    return kept;
}

std::vector<PseudoLabelRecord> pseudo_label(const ModelParams<double>& params, const Dataset& unlabeled, double thr,
                                            int iteration, int threads) {
    const auto outputs = predict(params, unlabeled, threads);
    return filter_confident(outputs, thr, iteration);
}

WeightedSample weighted_sample(std::span<const PseudoLabelRecord> records, const ClassWeights& weights,
                               std::size_t budget, std::uint64_t seed) {
    WeightedSample out;
    if (budget == 0 || records.empty()) return out;
    const std::size_t k = weights.sampling.size();
    std::vector<std::vector<std::size_t>> by_class(k);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto c = static_cast<std::size_t>(records[i].label);
        if (c >= k) throw UsageError("pseudo label outside the class-weight range");
        by_class[c].push_back(i);
    }
    std::vector<double> w(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        if (!by_class[c].empty()) {
            w[c] = weights.sampling[c];
        } else if (weights.sampling[c] > 0) {
            out.warnings.push_back("class " + std::to_string(c) + " has no pseudo-labeled records; weight redistributed");
        }
    }
    Rng rng(seed);
    out.records.reserve(budget);
    for (std::size_t draw = 0; draw < budget; ++draw) {
        const auto& pool = by_class[rng.categorical(w)];
        out.records.push_back(records[pool[rng.below(pool.size())]]);
    }
    return out;
}

void PseudoLabelConfig::validate() const {
    if (!(thr >= 0 && thr <= 1)) throw UsageError("thr must lie in [0, 1]");
    if (limit < 1) throw UsageError("limit must be at least 1");
    if (!(epsilon >= 0)) throw UsageError("epsilon must be non-negative");
    if (!(w2 > 0 && w1 >= w2)) throw UsageError("loss weights must satisfy w1 >= w2 > 0");
}

namespace {
std::vector<std::size_t> histogram(std::span<const PseudoLabelRecord> records, int k) {
    std::vector<std::size_t> h(static_cast<std::size_t>(k), 0);
    for (const auto& r : records) ++h[static_cast<std::size_t>(r.label)];
    return h;
}
}  // namespace

IterateResult iterate(const ModelParams<double>& m0, const Dataset& train, const Dataset& val,
                      const Dataset& unlabeled, const PseudoLabelConfig& config, const FineTuneConfig& retrain) {
    config.validate();
    if (!m0.has_classifier()) throw UsageError("pseudo-label iteration needs a classifier");
    const int k = m0.config.num_classes;
    const auto counts = label_counts(train, k);
    const ClassWeights weights = class_weights(counts);

    std::vector<TrainItem> real;
    for (const Example& e : train) {
        if (e.label) real.push_back({&e.seq, *e.label, Source::Real});
    }
    const std::size_t budget = config.budget > 0 ? config.budget : real.size();

    IterateResult result;
    result.params = m0;
    result.initial_val = evaluate(m0, val, retrain.threads);
    result.best_val = result.initial_val;
    double best_f1 = result.initial_val.macro_f1;
    double prev_f1 = best_f1;
    ModelParams<double> current = m0;

    FineTuneConfig ft = retrain;
    ft.w1 = config.w1;
    ft.w2 = config.w2;
    for (int t = 0; t < config.limit; ++t) {
        IterationReport rep;
        rep.iteration = t + 1;
        const auto records = pseudo_label(current, unlabeled, config.thr, t, retrain.threads);
        rep.pseudo_count = records.size();
        rep.pseudo_histogram = histogram(records, k);
        const WeightedSample sample =
            weighted_sample(records, weights, budget, derive_seed(config.seed, 0x5a39, static_cast<std::uint64_t>(t)));
        rep.sampled_count = sample.records.size();
        rep.sampled_histogram = histogram(sample.records, k);
        rep.warnings = sample.warnings;
        if (records.empty()) rep.warnings.push_back("no confident pseudo labels; re-training on real data only");

        std::vector<TrainItem> items = real;
        for (const auto& r : sample.records) items.push_back({&unlabeled[r.index].seq, r.label, Source::Pseudo});
        ft.seed = derive_seed(retrain.seed, 0x17e4, static_cast<std::uint64_t>(t));
        FineTuneResult next = fine_tune(current, items, val, ft);
        rep.val = next.val;
        const double f1 = next.val.macro_f1;
        if (f1 >= best_f1) {
            best_f1 = f1;
            result.params = next.params;
            result.best_val = next.val;
            result.best_iteration = t + 1;
        }
        rep.best_f1 = best_f1;
        result.iterations.push_back(std::move(rep));
        current = std::move(next.params);
        if (f1 - prev_f1 <= config.epsilon) break;
        prev_f1 = f1;
    }
    return result;
}

nlohmann::json IterateResult::report_json() const {
    auto summary = [](const MetricsReport& m) {
        return nlohmann::json{{"accuracy", m.accuracy},
                              {"macro_accuracy", m.macro_accuracy},
                              {"macro_precision", m.macro_precision},
                              {"macro_recall", m.macro_recall},
                              {"macro_f1", m.macro_f1}};
    };
    nlohmann::json its = nlohmann::json::array();
    for (const IterationReport& r : iterations) {
        its.push_back({{"iteration", r.iteration},
                       {"pseudo_count", r.pseudo_count},
                       {"sampled_count", r.sampled_count},
                       {"pseudo_histogram", r.pseudo_histogram},
                       {"sampled_histogram", r.sampled_histogram},
                       {"val", summary(r.val)},
                       {"best_f1", r.best_f1},
                       {"warnings", r.warnings}});
    }
    return {{"initial_val", summary(initial_val)},
            {"best_val", summary(best_val)},
            {"best_iteration", best_iteration},
            {"iterations", its}};
}

}  // namespace pass
