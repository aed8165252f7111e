#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <regex>
#include <string>
#include <vector>

#include "pass/encoder.hpp"
#include "pass/pretrain.hpp"
#include "pass/semisup.hpp"

namespace pass::testing {

struct TypeStats {
    std::size_t checked = 0;
    std::size_t failed = 0;
    double worst_excess = 0;  // max |a - n| / allowed
    std::string worst;        // description of the worst coordinate
};

// "block1.attn.wq" -> "attn.wq"
inline std::string layer_type(const std::string& name) {
    static const std::regex block(R"(^block\d+\.)");
    return std::regex_replace(name, block, "");
}

/// Compares `analytic` with central differences of `loss` on up to
/// `per_type` coordinates of every layer type. Coordinates with a non-zero
/// analytic gradient are preferred so sparse tensors (the embedding) are
/// still exercised.
inline std::map<std::string, TypeStats> check_gradients(const ModelParams<double>& params,
                                                        const std::function<double(const ModelParams<double>&)>& loss,
                                                        const ModelParams<double>& analytic, std::size_t per_type,
                                                        std::uint64_t seed, double rtol = 1e-4, double atol = 1e-6,
                                                        double h = 1e-5) {
    struct Coord {
        std::size_t tensor;
        Index offset;
    };
    std::vector<const Matrix<double>*> grads;
    std::vector<std::string> names;
    analytic.for_each([&](const std::string& n, const Matrix<double>& t) {
        names.push_back(n);
        grads.push_back(&t);
    });
    std::map<std::string, std::vector<Coord>> nonzero, zero;
    for (std::size_t t = 0; t < grads.size(); ++t) {
        for (Index i = 0; i < grads[t]->size(); ++i) {
            (grads[t]->data()[i] != 0.0 ? nonzero : zero)[layer_type(names[t])].push_back({t, i});
        }
    }
    std::map<std::string, TypeStats> out;
    Rng rng(seed);
    ModelParams<double> probe = params;
    std::vector<Matrix<double>*> slots;
    probe.for_each([&](const std::string&, Matrix<double>& t) { slots.push_back(&t); });

    std::vector<std::string> types;
    for (const auto& n : names) {
        const std::string t = layer_type(n);
        if (std::find(types.begin(), types.end(), t) == types.end()) types.push_back(t);
    }
    for (const std::string& type : types) {
        std::vector<Coord> pool = nonzero[type];
        shuffle(pool, rng);
        std::vector<Coord> pad = zero[type];
        shuffle(pad, rng);
        if (pool.size() > per_type) pool.resize(per_type);
        for (std::size_t i = 0; pool.size() < per_type && i < pad.size(); ++i) pool.push_back(pad[i]);

        TypeStats& st = out[type];
        for (const Coord& c : pool) {
            double& x = slots[c.tensor]->data()[c.offset];
            const double orig = x;
            x = orig + h;
            const double up = loss(probe);
            x = orig - h;
            const double down = loss(probe);
            x = orig;
            const double numeric = (up - down) / (2 * h);
            const double a = grads[c.tensor]->data()[c.offset];
            const double allowed = std::max(rtol * std::max(std::abs(a), std::abs(numeric)), atol);
            const double excess = std::abs(a - numeric) / allowed;
            ++st.checked;
            if (excess > 1) ++st.failed;
            if (excess > st.worst_excess) {
                st.worst_excess = excess;
                st.worst = names[c.tensor] + "[" + std::to_string(c.offset) + "] analytic " + std::to_string(a) +
                           " numeric " + std::to_string(numeric);
            }
        }
    }
    return out;
}

/// Small classification problem on the desk encoder: cross-entropy of a few
/// sequences, evaluated in train mode with fixed dropout seeds.
struct CrossEntropyProblem {
    std::vector<std::vector<int>> ids;
    std::vector<ClassId> labels;
    std::uint64_t seed = 17;

    double loss(const ModelParams<double>& p, ModelParams<double>* grads = nullptr) const {
        std::vector<ForwardTrace<double>> traces;
        std::vector<RowVector<double>> logits;
        std::vector<Source> sources(ids.size(), Source::Real);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            traces.push_back(forward(p, ids[i], Mode::Train, derive_seed(seed, i), Heads{.project = false, .classify = true}));
            logits.push_back(traces.back().classifier->logits);
        }
        std::vector<RowVector<double>> d_logits;
        const double l = mixed_loss(logits, labels, sources, 1.0, 0.5, grads ? &d_logits : nullptr);
        if (grads) {
            for (std::size_t i = 0; i < ids.size(); ++i) {
                Adjoint<double> adj;
                adj.dlogits = d_logits[i];
                backward(p, traces[i], adj, *grads);
            }
        }
        return l;
    }
};

/// Contrastive batch on the projection head with the same view layout as
/// pre-training: [anchors, duplicates, negatives].
struct ContrastiveProblem {
    std::vector<std::vector<int>> ids;
    std::vector<ContrastiveTriple> triples;
    ContrastiveConfig config;
    std::uint64_t seed = 23;

    double loss(const ModelParams<double>& p, ModelParams<double>* grads = nullptr) const {
        const std::size_t b = triples.size();
        std::vector<ForwardTrace<double>> traces;
        BatchEmbeddings z;
        std::vector<NegativeStrength> strengths;
        for (int role = 0; role < 3; ++role) {
            for (std::size_t i = 0; i < b; ++i) {
                const ContrastiveTriple& t = triples[i];
                const std::size_t idx = role == 0 ? t.anchor : role == 1 ? t.anchor_dup : t.negative;
                traces.push_back(forward(p, ids[idx], Mode::Train, view_seed(seed, 0, i, role),
                                         Heads{.project = true, .classify = false}));
                (role == 0 ? z.anchors : role == 1 ? z.positives : z.negatives).push_back(traces.back().projection->z);
            }
        }
        for (const auto& t : triples) strengths.push_back(t.strength);
        const BatchLossGrad lg = cpt_batch_loss(z, strengths, config, grads != nullptr);
        if (grads) {
            for (std::size_t v = 0; v < 3 * b; ++v) {
                Adjoint<double> adj;
                const std::size_t i = v % b;
                adj.dz = v < b ? lg.d_anchors[i] : v < 2 * b ? lg.d_positives[i] : lg.d_negatives[i];
                backward(p, traces[v], adj, *grads);
            }
        }
        return lg.loss;
    }
};

// Random token sequence in the CLS / RP / SEP / PL layout with padded tails.
inline std::vector<int> random_sequence(Rng& rng, int rp_slots, int pl_slots, int vocab) {
    std::vector<int> ids{2};
    const auto rp = static_cast<int>(1 + rng.below(static_cast<std::uint64_t>(rp_slots)));
    for (int i = 0; i < rp_slots; ++i) ids.push_back(i < rp ? static_cast<int>(4 + rng.below(vocab - 4)) : 0);
    ids.push_back(3);
    const auto pl = static_cast<int>(1 + rng.below(static_cast<std::uint64_t>(pl_slots)));
    for (int i = 0; i < pl_slots; ++i) ids.push_back(i < pl ? static_cast<int>(4 + rng.below(vocab - 4)) : 0);
    return ids;
}

}  // namespace pass::testing
