#include "pass/pretrain.hpp"

#include <cmath>

#include "pass/train.hpp"

namespace pass {

void ContrastiveConfig::validate() const {
    if (steps < 0) throw UsageError("steps must be non-negative");
    if (batch_size <= 0) throw UsageError("batch size must be positive");
    if (!(tau > 0)) throw UsageError("temperature must be positive");
    if (!(beta > 0 && alpha >= beta)) throw UsageError("weights must satisfy alpha >= beta > 0");
    if (retry_cap < 1) throw UsageError("retry cap must be at least 1");
}

std::size_t PairSamples::accepted() const {
    std::size_t n = 0;
    for (const auto& b : batches) n += b.size();
    return n;
}

PairSamples sample_pairs(std::span<const int> labels, std::span<const std::string> comms,
                         const ContrastiveConfig& config) {
    config.validate();
    if (labels.size() != comms.size()) throw UsageError("labels and comms differ in length");
    if (labels.empty()) throw InputError("contrastive sampling needs a non-empty training set");
    const std::size_t n = labels.size();
    Rng rng(derive_seed(config.seed, 0x5a3b1e));
    PairSamples out;
    out.batches.resize(static_cast<std::size_t>(config.steps));
    for (auto& batch : out.batches) {
        for (int slot = 0; slot < config.batch_size; ++slot) {
            const std::size_t p = rng.below(n);
            bool placed = false;
            for (int attempt = 0; attempt < config.retry_cap && n > 1; ++attempt) {
                std::size_t q = rng.below(n - 1);
                if (q >= p) ++q;
                const bool strong = labels[p] != labels[q];
                const bool weak = !strong && comms[p] != comms[q];
                if (strong || weak) {
                    batch.push_back({p, p, q, strong ? NegativeStrength::Strong : NegativeStrength::Weak});
                    placed = true;
                    break;
                }
            }
            if (!placed) ++out.skipped_slots;
        }
    }
    if (out.skipped_slots > 0) {
        const std::size_t total = static_cast<std::size_t>(config.steps) * static_cast<std::size_t>(config.batch_size);
        out.diagnostic = std::to_string(out.skipped_slots) + " of " + std::to_string(total) +
                         " slots found no valid negative within " + std::to_string(config.retry_cap) + " draws";
        if (out.accepted() == 0) {
            out.diagnostic += "; no flow has a negative (every pair shares both label and comm info)";
        }
    }
    return out;
}

double info_nce(const RowVector<double>& anchor, std::span<const RowVector<double>> candidates,
                std::size_t target, double tau, InfoNceGrad* grad, double scale) {
    if (target >= candidates.size()) throw UsageError("InfoNCE target outside the candidate set");
    RowVector<double> logits(static_cast<Index>(candidates.size()));
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        logits(static_cast<Index>(k)) = cosine_similarity(anchor, candidates[k]) / tau;
    }
    const double loss = log_sum_exp(logits) - logits(static_cast<Index>(target));
    if (grad) {
        if (grad->anchor.size() == 0) grad->anchor = RowVector<double>::Zero(anchor.size());
        if (grad->candidates.size() != candidates.size()) {
            grad->candidates.assign(candidates.size(), RowVector<double>::Zero(anchor.size()));
        }
        const RowVector<double> p = softmax(logits);
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            const double d_sim = scale * (p(static_cast<Index>(k)) - (k == target ? 1.0 : 0.0)) / tau;
            if (d_sim == 0.0) continue;
            cosine_similarity_backward(anchor, candidates[k], d_sim, grad->anchor, grad->candidates[k]);
        }
    }
    return loss;
}

double info_nce(const RowVector<double>& anchor, const RowVector<double>& target,
                std::span<const RowVector<double>> candidates, double tau) {
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        if (candidates[k] == target) return info_nce(anchor, candidates, k, tau);
    }
    throw UsageError("InfoNCE candidates must include the target");
}

double cpt_loss(const RowVector<double>& anchor, std::span<const RowVector<double>> candidates,
                std::size_t positive, std::size_t negative, NegativeStrength strength,
                const ContrastiveConfig& config, InfoNceGrad* grad, double scale) {
    const double w = strength == NegativeStrength::Strong ? config.alpha : config.beta;
    const double pos = info_nce(anchor, candidates, positive, config.tau, grad, scale);
    const double neg = info_nce(anchor, candidates, negative, config.tau, grad, -w * scale);
    return pos - w * neg;
}

BatchLossGrad cpt_batch_loss(const BatchEmbeddings& z, std::span<const NegativeStrength> strengths,
                             const ContrastiveConfig& config, bool want_grad) {
    const std::size_t b = z.anchors.size();
    if (z.positives.size() != b || z.negatives.size() != b || strengths.size() != b) {
        throw UsageError("batch embedding lists differ in length");
    }
    BatchLossGrad out;
    if (b == 0) return out;
    std::vector<RowVector<double>> candidates;
    candidates.reserve(2 * b);
    candidates.insert(candidates.end(), z.positives.begin(), z.positives.end());
    candidates.insert(candidates.end(), z.negatives.begin(), z.negatives.end());

    const Index dim = z.anchors[0].size();
    std::vector<RowVector<double>> d_candidates(2 * b, RowVector<double>::Zero(dim));
    out.d_anchors.assign(b, RowVector<double>::Zero(dim));
    const double scale = 1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
        InfoNceGrad g;
        out.loss += scale * cpt_loss(z.anchors[i], candidates, i, b + i, strengths[i], config,
                                     want_grad ? &g : nullptr, scale);
        if (want_grad) {
            out.d_anchors[i] += g.anchor;
            for (std::size_t k = 0; k < 2 * b; ++k) d_candidates[k] += g.candidates[k];
        }
    }
    if (want_grad) {
        out.d_positives.assign(d_candidates.begin(), d_candidates.begin() + static_cast<std::ptrdiff_t>(b));
        out.d_negatives.assign(d_candidates.begin() + static_cast<std::ptrdiff_t>(b), d_candidates.end());
    }
    return out;
}

std::uint64_t view_seed(std::uint64_t root, std::int64_t step, std::size_t slot, int role) {
    return derive_seed(root, static_cast<std::uint64_t>(step) + 1, slot, static_cast<std::uint64_t>(role));
}

PretrainResult pretrain_loop(const Dataset& train, const ContrastiveConfig& config, ModelParams<double> params) {
    config.validate();
    PretrainResult result;
    if (config.steps == 0) {
        result.params = std::move(params);
        return result;
    }
    std::vector<int> labels;
    std::vector<std::string> comms;
    for (const Example& e : train) {
        if (!e.label) throw InputError("contrastive pre-training needs labeled examples");
        labels.push_back(*e.label);
        comms.push_back(e.comm);
    }
    const PairSamples samples = sample_pairs(labels, comms, config);
    result.skipped_slots = samples.skipped_slots;
    if (samples.accepted() == 0) throw InputError("contrastive sampling produced no triples: " + samples.diagnostic);

    OptimizerConfig opt = config.optimizer;
    opt.total_steps = config.steps;
    AdamState state = AdamState::for_params(params);
    const Heads heads{.project = true, .classify = false};

    for (std::int64_t step = 0; step < config.steps; ++step) {
        const auto& batch = samples.batches[static_cast<std::size_t>(step)];
        if (batch.empty()) continue;
        const std::size_t b = batch.size();
        // Views laid out as [anchors, duplicates, negatives].
        std::vector<ForwardTrace<double>> traces(3 * b);
        parallel_chunks(3 * b, config.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t v = begin; v < end; ++v) {
                const std::size_t slot = v % b;
                const int role = static_cast<int>(v / b);
                const ContrastiveTriple& t = batch[slot];
                const std::size_t idx = role == 0 ? t.anchor : role == 1 ? t.anchor_dup : t.negative;
                traces[v] = forward(params, train[idx].seq.ids, Mode::Train, view_seed(config.seed, step, slot, role), heads);
            }
        });
        BatchEmbeddings z;
        std::vector<NegativeStrength> strengths;
        for (std::size_t i = 0; i < b; ++i) {
            z.anchors.push_back(traces[i].projection->z);
            z.positives.push_back(traces[b + i].projection->z);
            z.negatives.push_back(traces[2 * b + i].projection->z);
            strengths.push_back(batch[i].strength);
        }
        const BatchLossGrad lg = cpt_batch_loss(z, strengths, config);
        if (!std::isfinite(lg.loss)) throw NumericError("non-finite contrastive loss at step " + std::to_string(step));
        result.loss_curve.push_back(lg.loss);
        result.loss_steps.push_back(step);

        std::vector<ModelParams<double>> partial(chunk_count(3 * b, config.threads), ModelParams<double>::zeros(params.config));
        for (auto& g : partial) g.version = params.version;
        parallel_chunks(3 * b, config.threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
            for (std::size_t v = begin; v < end; ++v) {
                const std::size_t slot = v % b;
                const auto& dz = v < b ? lg.d_anchors[slot] : v < 2 * b ? lg.d_positives[slot] : lg.d_negatives[slot];
                Adjoint<double> adj;
                adj.dz = dz;
                backward(params, traces[v], adj, partial[chunk]);
            }
        });
        reduce_gradients(partial);
        optimizer_step(params, partial[0], state, opt);
    }
    result.params = std::move(params);
    return result;
}

}  // namespace pass
