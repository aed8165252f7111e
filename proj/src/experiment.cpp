#include "pass/experiment.hpp"

#include <algorithm>
#include <sstream>

#include "pass/dataset.hpp"
#include "pass/split.hpp"
#include "pass/train.hpp"

namespace pass {

ExperimentConfig ExperimentConfig::desk() {
    ExperimentConfig c;
    c.shape = {.m = 32, .n = 8};
    c.encoder = EncoderConfig::desk(EncoderConfig::special_count());
    c.cpt.steps = 100;
    c.cpt.batch_size = 16;
    c.cpt.optimizer.base_lr = 1e-4;
    c.finetune.epochs = 10;
    c.finetune.batch_size = 16;
    c.finetune.optimizer.base_lr = 1e-3;
    c.pli.limit = 3;
    return c;
}

Variant Variant::parse(const std::string& name) {
    Variant v;
    std::stringstream ss(name);
    std::string part;
    bool any = false;
    while (std::getline(ss, part, '+')) {
        any = true;
        if (part == "full") continue;
        if (part == "no_pli") v.pli = false;
        else if (part == "no_cpt") v.cpt = false;
        else if (part == "no_rp") v.rp = false;
        else if (part == "no_pl") v.pl = false;
        else throw UsageError("unknown variant '" + part + "'");
    }
    if (!any) throw UsageError("empty variant name");
    if (!v.rp && !v.pl) throw UsageError("a variant must keep at least one token segment");
    return v;
}

std::string Variant::name() const {
    std::string out;
    auto add = [&](bool keep, const char* tag) {
        if (keep) return;
        if (!out.empty()) out += '+';
        out += tag;
    };
    add(cpt, "no_cpt");
    add(pli, "no_pli");
    add(rp, "no_rp");
    add(pl, "no_pl");
    return out.empty() ? "full" : out;
}

nlohmann::json RunOutcome::summary_json() const {
    return {{"variant", variant.name()},
            {"seed", seed},
            {"m0_val", m0_val.to_json()},
            {"final_val", final_val.to_json()},
            {"test", test.to_json()},
            {"best_iteration", best_iteration},
            {"cpt_loss", cpt_loss}};
}

RunOutcome run_pipeline(const std::vector<Flow>& labeled, const std::vector<Flow>& unlabeled, const Variant& variant,
                        const ExperimentConfig& config, std::uint64_t seed) {
    if (labeled.empty()) throw InputError("no labeled flows");
    std::vector<int> labels;
    for (const Flow& f : labeled) {
        if (!f.label) throw InputError("labeled corpus contains a flow without a label");
        labels.push_back(*f.label);
    }
    const int k = *std::max_element(labels.begin(), labels.end()) + 1;
    if (k < 2) throw InputError("classification needs at least two classes");

    const SplitIndices split = split_indices(labels, config.ratios, derive_seed(seed, 0x5b1), config.stratified);
    const std::vector<Flow> train_flows = gather(labeled, split.train);

    std::vector<Flow> vocab_corpus = train_flows;
    vocab_corpus.insert(vocab_corpus.end(), unlabeled.begin(), unlabeled.end());
    const Vocab vocab = Vocab::build(vocab_corpus, config.shape);

    const SegmentMask mask{.rp = variant.rp, .pl = variant.pl};
    const Dataset train = encode_flows(train_flows, vocab, mask);
    const Dataset val = encode_flows(gather(labeled, split.val), vocab, mask);
    const Dataset test = encode_flows(gather(labeled, split.test), vocab, mask);
    const Dataset pool = encode_flows(unlabeled, vocab, mask);

    EncoderConfig enc = config.encoder;
    enc.vocab_size = static_cast<int>(vocab.size());
    enc.max_len = config.shape.length();
    enc.num_classes = 0;
    ModelParams<double> params = ModelParams<double>::init(enc, derive_seed(seed, 0x1a17));

    RunOutcome out;
    out.variant = variant;
    out.seed = seed;
    if (variant.cpt) {
        ContrastiveConfig cpt = config.cpt;
        cpt.seed = derive_seed(seed, 0xc97);
        cpt.threads = config.threads;
        PretrainResult pre = pretrain_loop(train, cpt, std::move(params));
        params = std::move(pre.params);
        out.cpt_loss = std::move(pre.loss_curve);
    }

    FineTuneConfig ft = config.finetune;
    ft.seed = derive_seed(seed, 0xf1e);
    ft.threads = config.threads;
    InitResult m0 = init_model(std::move(params), k, train, val, ft);
    out.m0_val = m0.val;
    out.final_val = m0.val;
    out.params = std::move(m0.params);

    if (variant.pli && !pool.empty()) {
        PseudoLabelConfig pli = config.pli;
        pli.seed = derive_seed(seed, 0x9e1);
        FineTuneConfig retrain = ft;
        retrain.w1 = pli.w1;
        retrain.w2 = pli.w2;
        IterateResult it = iterate(out.params, train, val, pool, pli, retrain);
        out.final_val = it.best_val;
        out.best_iteration = it.best_iteration;
        out.params = std::move(it.params);
    }
    out.test = evaluate(out.params, test, config.threads);
    return out;
}

std::vector<RunOutcome> run_ablation(const std::vector<Flow>& labeled, const std::vector<Flow>& unlabeled,
                                     const Variant& variant, const std::vector<std::uint64_t>& seeds,
                                     const ExperimentConfig& config) {
    std::vector<RunOutcome> out;
    out.reserve(seeds.size());
    for (std::uint64_t s : seeds) out.push_back(run_pipeline(labeled, unlabeled, variant, config, s));
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) throw UsageError("median of an empty list");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace pass
