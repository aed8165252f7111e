// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pass/checkpoint.hpp"
#include "pass/dataset.hpp"
#include "pass/experiment.hpp"
#include "pass/flow_io.hpp"
#include "pass/metrics.hpp"
#include "pass/pretrain.hpp"
#include "pass/semisup.hpp"
#include "pass/synthgen.hpp"
#include "pass/tokenize.hpp"
#include "support/gradcheck.hpp"

using namespace pass;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (ok) return;
        pass = false;
        detail += (detail.empty() ? "" : "; ") + what;
    }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <typename... Args>
std::string fmt(const char* f, Args... args) {
    char buf[1024];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int failures = 0;

void report(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = seconds_since(t0);
    if (budget_s > 0 && dt >= budget_s) o.require(false, fmt("over the %.0fs budget", budget_s));
    if (!o.pass) ++failures;
    std::printf("%s [%2d] %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), dt);
    std::fflush(stdout);
}

template <typename T>
std::string bytes_of(const T& write) {
    std::ostringstream s;
    write(s);
    return s.str();
}

// 1 -------------------------------------------------------------------------

Outcome gradients() {
    constexpr int kVocab = 300, kClasses = 4;
    constexpr std::size_t kPerType = 100;
    const SequenceShape shape{.m = 32, .n = 16};
    auto params = ModelParams<double>::init(EncoderConfig::desk(kVocab, kClasses), 41);
    Outcome o;
    o.require(params.config.max_len == shape.length(), "desk max_len differs from m/2+n+2");

    Rng rng(5);
    std::vector<std::vector<int>> ids;
    for (int i = 0; i < 3; ++i) ids.push_back(testing::random_sequence(rng, shape.rp_slots(), shape.n, kVocab));

    testing::CrossEntropyProblem ce;
    ce.ids = {ids[0], ids[1]};
    ce.labels = {1, 3};
    auto g_ce = ModelParams<double>::zeros(params.config);
    ce.loss(params, &g_ce);

    testing::ContrastiveProblem cpt;
    cpt.ids = ids;
    cpt.triples = {{0, 0, 1, NegativeStrength::Strong}, {2, 2, 0, NegativeStrength::Weak}};
    auto g_cpt = ModelParams<double>::zeros(params.config);
    cpt.loss(params, &g_cpt);

    const std::map<std::string, testing::TypeStats> runs[] = {
        testing::check_gradients(params, [&](const ModelParams<double>& p) { return ce.loss(p); }, g_ce, kPerType, 1),
        testing::check_gradients(params, [&](const ModelParams<double>& p) { return cpt.loss(p); }, g_cpt, kPerType,
                                 2)};
    // Types smaller than kPerType (biases, the output layer) are checked in full.
    std::map<std::string, std::size_t> type_size;
    params.for_each([&](const std::string& n, const Matrix<double>& t) {
        type_size[testing::layer_type(n)] += static_cast<std::size_t>(t.size());
    });
    std::size_t checked = 0, min_per_type = SIZE_MAX, types = 0, failed = 0, short_types = 0;
    double worst = 0;
    std::string worst_at;
    for (const auto& stats : runs) {
        types = std::max(types, stats.size());
        for (const auto& [type, st] : stats) {
            checked += st.checked;
            failed += st.failed;
            min_per_type = std::min(min_per_type, st.checked);
            short_types += st.checked < std::min(kPerType, type_size[type]);
            if (st.worst_excess > worst) {
                worst = st.worst_excess;
                worst_at = st.worst;
            }
        }
    }
    o.require(failed == 0, fmt("%zu coordinates outside tolerance, worst at %s", failed, worst_at.c_str()));
    o.require(short_types == 0, fmt("%zu layer types under-sampled", short_types));
    o.detail = fmt("L=%d, CE and CPT, %zu coordinates over %zu layer types (%zu each, all of smaller ones), "
                   "worst |a-n| at %.3g of tolerance",
                   params.config.max_len, checked, types, kPerType, worst) +
               (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

// 2 -------------------------------------------------------------------------

Outcome weights_oracle() {
    Outcome o;
    Rng rng(2024);
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto k = static_cast<std::size_t>(2 + rng.below(9));
        std::vector<std::size_t> counts(k);
        for (auto& c : counts) c = 1 + rng.below(10000);
        const ClassWeights w = class_weights(counts);
        double total = 0, inv_pro = 0;
        for (auto c : counts) total += static_cast<double>(c);
        for (auto c : counts) inv_pro += total / static_cast<double>(c);
        for (std::size_t i = 0; i < k; ++i) {
            const double pro = static_cast<double>(counts[i]) / total;
            const double s = (1.0 / pro) / inv_pro;
            worst = std::max({worst, std::abs(w.sampling[i] - s), std::abs(w.proportions[i] - pro)});
        }
    }
    o.require(worst <= 1e-12, fmt("max deviation %.3g", worst));
    const std::vector<std::size_t> skewed{80, 20};
    const ClassWeights w = class_weights(skewed);
    const bool example = std::abs(w.proportions[0] - 0.8) < 1e-12 && std::abs(w.proportions[1] - 0.2) < 1e-12 &&
                         std::abs(w.sampling[0] - 0.2) < 1e-12 && std::abs(w.sampling[1] - 0.8) < 1e-12;
    o.require(example, fmt("[0.8,0.2] gave [%.15g,%.15g]", w.sampling[0], w.sampling[1]));
    o.detail = fmt("1000 count vectors, max deviation %.2g; [0.8,0.2] -> [%.3g,%.3g]", worst, w.sampling[0],
                   w.sampling[1]) +
               (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

// 3 -------------------------------------------------------------------------

Outcome triple_constraint() {
    Outcome o;
    Rng rng(303);
    std::size_t triples = 0, invalid = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = static_cast<std::size_t>(2 + rng.below(60));
        const auto classes = 1 + rng.below(5);
        const auto comm_values = 1 + rng.below(4);
        std::vector<int> labels;
        std::vector<std::string> comms;
        for (std::size_t i = 0; i < n; ++i) {
            labels.push_back(static_cast<int>(rng.below(classes)));
            comms.push_back("comm" + std::to_string(rng.below(comm_values)));
        }
        ContrastiveConfig cfg;
        cfg.steps = 4;
        cfg.batch_size = 16;
        cfg.retry_cap = 100;
        cfg.seed = static_cast<std::uint64_t>(trial);
        for (const auto& batch : sample_pairs(labels, comms, cfg).batches) {
            for (const ContrastiveTriple& t : batch) {
                ++triples;
                const int lp = labels[t.anchor], lq = labels[t.negative];
                const bool ok = t.anchor == t.anchor_dup && t.anchor != t.negative &&
                                (lp != lq || (lp == lq && comms[t.anchor] != comms[t.negative]));
                invalid += !ok;
            }
        }
    }
    o.require(triples > 0 && invalid == 0, fmt("%zu of %zu triples violate the constraint", invalid, triples));

    std::vector<int> one_label(8, 0);
    std::vector<std::string> one_comm(8, "only");
    ContrastiveConfig cfg;
    cfg.steps = 2;
    cfg.batch_size = 4;
    const PairSamples s = sample_pairs(one_label, one_comm, cfg);
    o.require(cfg.retry_cap == 500, "default retry cap is not 500");
    o.require(s.accepted() == 0 && s.skipped_slots == 8, "degenerate dataset still produced triples");
    o.require(s.diagnostic.find("500") != std::string::npos, "diagnostic does not name the retry cap");
    std::string thrown;
    Dataset d(8);
    for (auto& e : d) {
        e.seq.ids = {2, 4, 3, 5};
        e.label = 0;
        e.comm = "only";
    }
    EncoderConfig ec = EncoderConfig::desk(8);
    ec.max_len = 4;
    try {
        pretrain_loop(d, cfg, ModelParams<double>::init(ec, 1));
    } catch (const InputError& e) {
        thrown = e.what();
    }
    o.require(!thrown.empty(), "pre-training on the degenerate dataset did not fail");
    o.detail = fmt("%zu triples from 200 random datasets all valid; degenerate set: \"%s\"", triples,
                   s.diagnostic.c_str()) +
               (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

// 4 -------------------------------------------------------------------------

RowVector<double> vec2(double x, double y) {
    RowVector<double> r(2);
    r << x, y;
    return r;
}

Outcome infonce_oracle() {
    Outcome o;
    const RowVector<double> a = vec2(1, 0);
    // Both candidates at the same angle from the anchor.
    const std::vector<RowVector<double>> equal{vec2(0, 1), vec2(0, -1)};
    const double l2 = info_nce(a, equal, 0, 0.1);
    o.require(std::abs(l2 - std::log(2.0)) <= 1e-9, fmt("equal similarities gave %.12g", l2));
    const std::vector<RowVector<double>> opposite{vec2(3, 0), vec2(-2, 0)};
    const double lt = info_nce(a, opposite, 0, 1.0);
    o.require(std::abs(lt - std::log1p(std::exp(-2.0))) <= 1e-9, fmt("sims {1,-1} gave %.12g", lt));

    Rng rng(7);
    BatchEmbeddings z;
    std::vector<NegativeStrength> strengths;
    auto random = [&] {
        RowVector<double> r(8);
        for (Index i = 0; i < 8; ++i) r(i) = rng.uniform(-1, 1);
        return r;
    };
    for (int i = 0; i < 6; ++i) {
        z.anchors.push_back(random());
        z.positives.push_back(random());
        z.negatives.push_back(random());
        strengths.push_back(i % 3 ? NegativeStrength::Strong : NegativeStrength::Weak);
    }
    const ContrastiveConfig cfg;
    const double base = cpt_batch_loss(z, strengths, cfg, false).loss;
    double worst = 0;
    for (int trial = 0; trial < 200; ++trial) {
        BatchEmbeddings s = z;
        for (auto* list : {&s.anchors, &s.positives, &s.negatives}) {
            for (auto& v : *list) v *= std::exp(rng.uniform(-6, 6));
        }
        worst = std::max(worst, std::abs(cpt_batch_loss(s, strengths, cfg, false).loss - base));
        const std::vector<RowVector<double>> scaled{equal[0] * std::exp(rng.uniform(-6, 6)),
                                                    equal[1] * std::exp(rng.uniform(-6, 6))};
        worst = std::max(worst, std::abs(info_nce(a * 1e-3, scaled, 0, 0.1) - l2));
    }
    o.require(worst <= 1e-6, fmt("rescaling moved the loss by %.3g", worst));
    o.detail = fmt("ln2 case %.12f, ln(1+e^-2) case %.12f, rescaling drift %.2g", l2, lt, worst) +
               (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

// 5 -------------------------------------------------------------------------

Packet packet(Direction d, std::uint32_t len, Bytes payload = {}) {
    Packet p;
    p.direction = d;
    p.payload_len = len;
    p.payload = std::move(payload);
    return p;
}

Outcome tokenization() {
    Outcome o;
    Flow bytes;
    bytes.packets = {packet(Direction::ClientToServer, 6, {0x1a, 0x2b, 0x03, 0x45, 0x62, 0xaa})};
    const auto rp = build_rp_tokens(bytes, 128);
    o.require(rp == std::vector<std::string>{"1a2b", "0345", "62aa"}, "raw payload bigrams differ");

    Flow lens;
    lens.packets = {packet(Direction::ClientToServer, 328), packet(Direction::ServerToClient, 1074),
                    packet(Direction::ServerToClient, 180), packet(Direction::ClientToServer, 328)};
    const auto pl = build_pl_tokens(lens, 32);
    o.require(pl == std::vector<std::string>{"+328", "-1074", "-180", "+328"}, "packet length tokens differ");

    CorpusSpec spec;
    spec.class_counts = {20, 20};
    spec.min_packets = 1;
    spec.max_packets = 12;
    spec.payload_bytes = 40;
    const auto corpus = generate(spec);
    std::size_t sequences = 0, wrong = 0;
    for (const SequenceShape shape : {SequenceShape{.m = 2, .n = 1}, SequenceShape{.m = 32, .n = 8},
                                      SequenceShape{.m = 128, .n = 32}, SequenceShape{.m = 66, .n = 3}}) {
        const Vocab v = Vocab::build(corpus.labeled, shape);
        for (const SegmentMask mask : {SegmentMask{}, SegmentMask{.rp = false}, SegmentMask{.pl = false}}) {
            for (const Example& e : encode_flows(corpus.labeled, v, mask)) {
                ++sequences;
                wrong += static_cast<int>(e.seq.ids.size()) != shape.m / 2 + shape.n + 2;
            }
        }
    }
    o.require(wrong == 0, fmt("%zu sequences with the wrong length", wrong));
    o.detail = fmt("1a2b 0345 62aa and +328 -1074 -180 +328 exact; %zu sequences of length m/2+n+2", sequences) +
               (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

// 6, 7, 8: one ablation sweep on the imbalanced synthetic corpus ------------

CorpusSpec ablation_corpus() {
    CorpusSpec spec = scaled(CorpusSpec{}, 10);  // 500:50:50:20
    spec.unlabeled_count = 1200;
    spec.signal = 0.25;
    spec.length_signal = 0.4;
    return spec;
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};
const char* const kVariants[] = {"full", "no_pli", "no_cpt", "no_cpt+no_pli"};

struct Sweep {
    std::map<std::string, std::vector<RunOutcome>> runs;
    double seconds = 0;
    std::string error;
};

Sweep run_sweep() {
    Sweep s;
    const auto t0 = Clock::now();
    try {
        const SyntheticCorpus corpus = generate(ablation_corpus());
        const ExperimentConfig cfg = ExperimentConfig::desk();
        for (const char* name : kVariants) {
            const Variant v = Variant::parse(name);
            for (std::uint64_t seed : kSeeds) {
                s.runs[name].push_back(run_pipeline(corpus.labeled, corpus.unlabeled, v, cfg, seed));
                const RunOutcome& r = s.runs[name].back();
                std::printf("       %-14s seed %llu: M0 val F1 %.4f, final val F1 %.4f, test F1 %.4f, rare F1 %.3f\n",
                            name, static_cast<unsigned long long>(seed), r.m0_val.macro_f1, r.final_val.macro_f1,
                            r.test.macro_f1, r.test.per_class.back().f1);
                std::fflush(stdout);
            }
        }
    } catch (const std::exception& e) {
        s.error = e.what();
    }
    s.seconds = seconds_since(t0);
    return s;
}

std::vector<double> test_f1(const std::vector<RunOutcome>& runs) {
    std::vector<double> f;
    for (const auto& r : runs) f.push_back(r.test.macro_f1);
    return f;
}

Outcome non_degradation(const Sweep& s) {
    Outcome o;
    if (!s.error.empty()) return {false, s.error};
    std::size_t checked = 0;
    double min_gain = INFINITY;
    for (const char* name : {"full", "no_cpt"}) {
        for (const RunOutcome& r : s.runs.at(name)) {
            ++checked;
            const double gain = r.final_val.macro_f1 - r.m0_val.macro_f1;
            min_gain = std::min(min_gain, gain);
            o.require(gain >= 0, fmt("%s seed %llu lost %.4f", name, static_cast<unsigned long long>(r.seed), -gain));
        }
    }
    o.detail = fmt("%zu iterate runs on 5 seeds, smallest val F1 gain over M0 %+.4f", checked, min_gain) +
               (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

Outcome ablation_trend(const Sweep& s) {
    Outcome o;
    if (!s.error.empty()) return {false, s.error};
    const double full = median(test_f1(s.runs.at("full")));
    const double no_pli = median(test_f1(s.runs.at("no_pli")));
    const double no_cpt = median(test_f1(s.runs.at("no_cpt")));
    o.require(full >= no_pli, "full below no_pli");
    o.require(full >= no_cpt, "full below no_cpt");
    o.require(full - no_pli >= 0.005, "full - no_pli under 0.5 F1 points");
    o.require(s.seconds < 1800, fmt("sweep took %.0fs", s.seconds));
    o.detail = fmt("median test macro-F1 full %.4f, no_pli %.4f, no_cpt %.4f; full - no_pli %+.2f points; "
                   "sweep %.0fs",
                   full, no_pli, no_cpt, 100 * (full - no_pli), s.seconds) +
               (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

Outcome minority_lift(const Sweep& s) {
    Outcome o;
    if (!s.error.empty()) return {false, s.error};
    const auto& full = s.runs.at("full");
    const auto& plain = s.runs.at("no_cpt+no_pli");
    int wins = 0;
    std::string pairs;
    for (std::size_t i = 0; i < full.size(); ++i) {
        const double a = full[i].test.per_class.back().f1, b = plain[i].test.per_class.back().f1;
        wins += a > b;
        pairs += fmt("%s%.2f/%.2f", i ? " " : "", a, b);
    }
    o.require(2 * wins > static_cast<int>(full.size()), "no majority");
    o.detail = fmt("rarest class F1 full/plain per seed: %s; full ahead on %d of %zu", pairs.c_str(), wins,
                   full.size()) +
               (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

// 9 -------------------------------------------------------------------------

Outcome metrics_oracle() {
    Outcome o;
    Rng rng(909);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = static_cast<int>(2 + rng.below(7));
        const auto n = static_cast<std::size_t>(1 + rng.below(200));
        std::vector<int> pred(n), label(n);
        for (std::size_t i = 0; i < n; ++i) {
            label[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
            pred[i] = rng.uniform() < 0.6 ? label[i] : static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
        }
        const MetricsReport r = macro_metrics(pred, label, k);
        double sp = 0, sr = 0, sf = 0, sa = 0;
        std::size_t correct = 0;
        for (int c = 0; c < k; ++c) {
            std::size_t tp = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < n; ++i) {
                tp += pred[i] == c && label[i] == c;
                fp += pred[i] == c && label[i] != c;
                fn += pred[i] != c && label[i] == c;
            }
            const std::size_t tn = n - tp - fp - fn;
            const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
            const double rc = tp + fn ? double(tp) / double(tp + fn) : 0.0;
            const double f = tp ? double(2 * tp) / double(2 * tp + fp + fn) : 0.0;
            const double a = double(tp + tn) / double(n);
            const ClassMetrics& m = r.per_class[static_cast<std::size_t>(c)];
            mismatches += m.precision != p || m.recall != rc || m.f1 != f || m.accuracy != a || m.support != tp + fn;
            for (int q = 0; q < k; ++q) {
                std::size_t cell = 0;
                for (std::size_t i = 0; i < n; ++i) cell += label[i] == c && pred[i] == q;
                mismatches += r.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(q)] != cell;
            }
            sp += p, sr += rc, sf += f, sa += a;
            correct += tp;
        }
        mismatches += r.macro_precision != sp / k || r.macro_recall != sr / k || r.macro_f1 != sf / k ||
                      r.macro_accuracy != sa / k || r.accuracy != double(correct) / double(n);
    }
    o.require(mismatches == 0, fmt("%zu mismatching values", mismatches));
    const MetricsReport two = metrics_from_confusion({{8, 2}, {3, 7}});
    o.require(std::abs(two.macro_f1 - 0.7493) <= 1e-4, fmt("[[8,2],[3,7]] gave %.6f", two.macro_f1));
    o.detail = fmt("1000 random vectors match the recount exactly; [[8,2],[3,7]] macro-F1 %.6f", two.macro_f1) +
               (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

// 10 ------------------------------------------------------------------------

Outcome determinism() {
    Outcome o;
    CorpusSpec spec;
    spec.unlabeled_count = 60;
    ExperimentConfig cfg = ExperimentConfig::desk();
    cfg.cpt.steps = 20;
    cfg.finetune.epochs = 3;
    cfg.pli.limit = 2;
    cfg.pli.thr = 0.5;

    struct Stage {
        std::string corpus, unlabeled, vocab, train, pool, cpt_ckpt, cpt_curve, m0_ckpt, m0_json, it_ckpt, it_json,
            pipeline_ckpt, pipeline_json;
        bool operator==(const Stage&) const = default;
    };
    auto once = [&] {
        Stage st;
        const SyntheticCorpus c = generate(spec);
        st.corpus = bytes_of([&](std::ostream& s) { write_flows(s, c.labeled); });
        st.unlabeled = bytes_of([&](std::ostream& s) { write_flows(s, c.unlabeled); });
        const Vocab v = Vocab::build(c.labeled, cfg.shape);
        st.vocab = bytes_of([&](std::ostream& s) { v.save(s); });
        const Dataset train = encode_flows(c.labeled, v);
        const Dataset pool = encode_flows(c.unlabeled, v);
        st.train = bytes_of([&](std::ostream& s) { write_dataset(s, train); });
        st.pool = bytes_of([&](std::ostream& s) { write_dataset(s, pool); });

        EncoderConfig enc = cfg.encoder;
        enc.vocab_size = v.size();
        enc.max_len = cfg.shape.length();
        ContrastiveConfig cpt = cfg.cpt;
        cpt.seed = 11;
        const PretrainResult pr = pretrain_loop(train, cpt, ModelParams<double>::init(enc, 3));
        const Bytes ck = serialize_checkpoint(pr.params);
        st.cpt_ckpt.assign(ck.begin(), ck.end());
        for (double l : pr.loss_curve) st.cpt_curve += fmt("%.17g\n", l);

        FineTuneConfig ft = cfg.finetune;
        ft.seed = 12;
        const InitResult m0 = init_model(pr.params, count_classes(train), train, train, ft);
        const Bytes m0b = serialize_checkpoint(m0.params);
        st.m0_ckpt.assign(m0b.begin(), m0b.end());
        st.m0_json = m0.val.to_json().dump();

        PseudoLabelConfig pli = cfg.pli;
        pli.seed = 13;
        const IterateResult it = iterate(m0.params, train, train, pool, pli, ft);
        const Bytes itb = serialize_checkpoint(it.params);
        st.it_ckpt.assign(itb.begin(), itb.end());
        st.it_json = it.report_json().dump();

        const RunOutcome run = run_pipeline(c.labeled, c.unlabeled, Variant{}, cfg, 21);
        const Bytes rb = serialize_checkpoint(run.params);
        st.pipeline_ckpt.assign(rb.begin(), rb.end());
        st.pipeline_json = run.summary_json().dump();
        return st;
    };
    const Stage a = once(), b = once();
    const std::pair<const char*, bool> stages[] = {
        {"corpus", a.corpus == b.corpus && a.unlabeled == b.unlabeled},
        {"vocab", a.vocab == b.vocab},
        {"tokens", a.train == b.train && a.pool == b.pool},
        {"pre-training", a.cpt_ckpt == b.cpt_ckpt && a.cpt_curve == b.cpt_curve},
        {"M0", a.m0_ckpt == b.m0_ckpt && a.m0_json == b.m0_json},
        {"iteration", a.it_ckpt == b.it_ckpt && a.it_json == b.it_json},
        {"pipeline", a.pipeline_ckpt == b.pipeline_ckpt && a.pipeline_json == b.pipeline_json}};
    std::string listed;
    for (const auto& [name, same] : stages) {
        o.require(same, std::string(name) + " output differs between runs");
        listed += (listed.empty() ? "" : ", ") + std::string(name);
    }
    o.detail = "byte-identical reruns: " + listed + fmt(" (checkpoint %zu bytes)", a.pipeline_ckpt.size()) +
               (o.pass ? "" : "; " + o.detail);
    return o;
}

// 11 ------------------------------------------------------------------------

Outcome round_trips() {
    Outcome o;
    CorpusSpec spec;
    spec.unlabeled_count = 20;
    const SyntheticCorpus c = generate(spec);
    std::vector<Flow> flows = c.labeled;
    flows.insert(flows.end(), c.unlabeled.begin(), c.unlabeled.end());
    flows.back().comm.tls_cert_fingerprint.reset();

    std::stringstream fs;
    write_flows(fs, flows);
    const std::vector<Flow> back = read_flows(fs);
    o.require(back == flows, "flow records changed through encode/decode");

    const Vocab v = Vocab::build(flows, {.m = 32, .n = 8});
    const std::string vbytes = bytes_of([&](std::ostream& s) { v.save(s); });
    std::istringstream vin(vbytes);
    const Vocab v2 = Vocab::load(vin);
    o.require(v2 == v, "vocab structure changed");
    o.require(bytes_of([&](std::ostream& s) { v2.save(s); }) == vbytes, "vocab bytes changed");

    const Dataset d = encode_flows(flows, v);
    std::stringstream ds;
    write_dataset(ds, d);
    o.require(read_dataset(ds) == d, "token records changed");

    auto params = ModelParams<double>::init(EncoderConfig::desk(v.size(), 4), 8);
    round_to_storage(params);
    const Bytes ck = serialize_checkpoint(params);
    const ModelParams<double> p2 = deserialize_checkpoint(ck);
    o.require(p2 == params, "checkpoint parameters changed");
    o.require(serialize_checkpoint(p2) == ck, "checkpoint bytes changed");
    o.detail = fmt("%zu flows, %d-token vocab, %zu token records, %zu-byte checkpoint", flows.size(), v.size(),
                   d.size(), ck.size()) +
               (o.pass ? "" : "; " + o.detail);
    return o;
}

}  // namespace

int main() {
    std::printf("acceptance criteria (desk encoder: d=64, 4 heads, N=2)\n");
    report(1, "gradients match central differences", 120, gradients);
    report(2, "class weight oracle", 0, weights_oracle);
    report(3, "negative sampling constraint and retry guard", 0, triple_constraint);
    report(4, "InfoNCE oracle", 0, infonce_oracle);
    report(5, "tokenization golden cases", 0, tokenization);
    std::printf("       ablation sweep: 4 variants x 5 seeds on a 500:50:50:20 corpus\n");
    std::fflush(stdout);
    const Sweep sweep = run_sweep();
    report(6, "iteration never degrades validation F1", 0, [&] { return non_degradation(sweep); });
    report(7, "ablation ordering", 0, [&] { return ablation_trend(sweep); });
    report(8, "minority class lift", 0, [&] { return minority_lift(sweep); });
    report(9, "metrics oracle", 0, metrics_oracle);
    report(10, "determinism", 0, determinism);
    report(11, "round trips", 0, round_trips);
    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
