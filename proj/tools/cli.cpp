#include "cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pass/checkpoint.hpp"
#include "pass/config.hpp"
#include "pass/dataset.hpp"
#include "pass/experiment.hpp"
#include "pass/flow_io.hpp"
#include "pass/pcap.hpp"
#include "pass/split.hpp"
#include "pass/synthgen.hpp"
#include "pass/train.hpp"

#ifndef PASS_VERSION
#define PASS_VERSION "0.0.0"
#endif

namespace pass::cli {

namespace {

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out = open_output(path);
    out << text;
    if (!out) throw InputError("failed writing " + path);
}

Bytes read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// "name class" lines; '#' starts a comment.
std::map<std::string, int> read_label_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::map<std::string, int> labels;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string name;
        if (!(ss >> name)) continue;
        int label = -1;
        std::string rest;
        if (!(ss >> label) || label < 0 || (ss >> rest)) {
            throw InputError(path + ":" + std::to_string(lineno) + ": expected '<capture name> <class id>'");
        }
        labels[name] = label;
    }
    return labels;
}

/// Config file, then --set overrides, then dedicated flags.
struct ConfigSource {
    std::string path;
    std::vector<std::string> sets;
    ConfigFile flags;

    void add_options(CLI::App* cmd) {
        cmd->add_option("--config", path, "Config file (key = value with [section] headers)");
        cmd->add_option("--set", sets, "Override one config key, e.g. --set pretrain.step=200");
    }

    template <typename T>
    void flag(const std::string& key, const std::optional<T>& value) {
        if (!value) return;
        if constexpr (std::is_same_v<T, double>) flags.set(key, shortest(*value));
        else flags.set(key, std::to_string(*value));
    }

    void apply(const std::vector<ConfigField>& fields) const {
        if (!path.empty()) apply_config(ConfigFile::load(path), fields);
        ConfigFile overrides;
        for (const std::string& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + s + "'");
            overrides.set(s.substr(0, eq), s.substr(eq + 1));
        }
        apply_config(overrides, fields);
        apply_config(flags, fields);
    }
};

ExperimentConfig preset(const std::string& name) {
    if (name == "large") return ExperimentConfig{};
    if (name == "desk") return ExperimentConfig::desk();
    throw UsageError("unknown preset '" + name + "' (expected large or desk)");
}

void log_config(std::ostream& err, const std::vector<ConfigField>& fields) {
    err << "# resolved configuration\n" << render_config(fields) << std::flush;
}

struct Context {
    std::ostream& out;
    std::ostream& err;
    std::optional<int> threads;
};

ExperimentConfig resolve(const std::string& preset_name, const ConfigSource& source, const Context& ctx) {
    ExperimentConfig cfg = preset(preset_name);
    cfg.threads = default_threads();
    auto fields = config_fields(cfg);
    source.apply(fields);
    if (ctx.threads) cfg.threads = *ctx.threads;
    if (cfg.threads < 1) throw UsageError("thread count must be at least 1");
    cfg.cpt.threads = cfg.threads;
    cfg.finetune.threads = cfg.threads;
    log_config(ctx.err, fields);
    return cfg;
}

Dataset read_tokens(const std::string& path, const char* what) {
    Dataset d = read_dataset_file(path);
    if (d.empty()) throw InputError(std::string(what) + " file " + path + " holds no records");
    return d;
}

void check_lengths(const Dataset& d, int length, const std::string& path) {
    for (const Example& e : d) {
        if (static_cast<int>(e.seq.ids.size()) != length) {
            throw InputError(path + ": sequence length " + std::to_string(e.seq.ids.size()) +
                             " does not match the model length " + std::to_string(length));
        }
    }
}

std::string metrics_line(const MetricsReport& m) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << "AC " << m.accuracy << "  PR " << m.macro_precision << "  RC "
      << m.macro_recall << "  F1 " << m.macro_f1;
    return s.str();
}

// ---------------------------------------------------------------------------

struct IngestArgs {
    std::vector<std::string> pcaps;
    std::string labels;
    std::string out;
    std::size_t payload_cap = 128;
};

void cmd_ingest(const IngestArgs& a, const Context& ctx) {
    std::map<std::string, int> labels;
    if (!a.labels.empty()) labels = read_label_map(a.labels);
    std::vector<Flow> all;
    for (const std::string& path : a.pcaps) {
        const Bytes capture = read_bytes(path);
        IngestResult r = reassemble_flows(capture);
        std::optional<int> label;
        const std::string base = std::filesystem::path(path).filename().string();
        if (auto it = labels.find(path); it != labels.end()) label = it->second;
        else if (auto jt = labels.find(base); jt != labels.end()) label = jt->second;
        else if (!labels.empty()) ctx.err << "warning: no label for " << path << "; flows left unlabeled\n";
        for (Flow& f : r.flows) f.label = label;
        ctx.err << path << ": " << r.stats.records << " records, " << r.flows.size() << " flows, "
                << r.stats.dropped_non_tcp << " non-TCP dropped, " << r.stats.malformed_frames << " malformed, "
                << r.stats.truncated_records << " truncated\n";
        all.insert(all.end(), std::make_move_iterator(r.flows.begin()), std::make_move_iterator(r.flows.end()));
    }
    write_flows_file(a.out, all, a.payload_cap);
    ctx.out << "wrote " << all.size() << " flows to " << a.out << "\n";
}

struct SynthArgs {
    ConfigSource source;
    std::string out;
    std::string unlabeled;
    std::optional<std::uint64_t> seed;
};

void cmd_synth(SynthArgs& a, const Context& ctx) {
    CorpusSpec spec;
    auto fields = config_fields(spec);
    a.source.flag("corpus.seed", a.seed);
    a.source.apply(fields);
    log_config(ctx.err, fields);
    const SyntheticCorpus corpus = generate(spec);
    write_flows_file(a.out, corpus.labeled);
    if (!a.unlabeled.empty()) {
        write_flows_file(a.unlabeled, corpus.unlabeled);
    } else if (!corpus.unlabeled.empty()) {
        ctx.err << "warning: " << corpus.unlabeled.size() << " unlabeled flows generated but --unlabeled not given\n";
    }
    ctx.out << "wrote " << corpus.labeled.size() << " labeled and " << corpus.unlabeled.size()
            << " unlabeled flows\n";
}

struct VocabArgs {
    std::vector<std::string> flows;
    int m = 128;
    int n = 32;
    std::string out;
};

void cmd_vocab(const VocabArgs& a, const Context& ctx) {
    std::vector<Flow> corpus;
    for (const std::string& path : a.flows) {
        auto f = read_flows_file(path);
        corpus.insert(corpus.end(), std::make_move_iterator(f.begin()), std::make_move_iterator(f.end()));
    }
    const SequenceShape shape{.m = a.m, .n = a.n};
    const Vocab v = Vocab::build(corpus, shape);
    v.save_file(a.out);
    ctx.err << "m = " << a.m << ", n = " << a.n << ", flows = " << corpus.size() << "\n";
    ctx.out << "wrote " << v.size() << " tokens to " << a.out << "\n";
}

struct EncodeArgs {
    std::string flows;
    std::string vocab;
    std::string out;
    std::string val_out;
    std::string test_out;
    std::vector<double> ratios{0.8, 0.1, 0.1};
    std::uint64_t seed = 1;
    bool unstratified = false;
    bool no_rp = false;
    bool no_pl = false;
};

void cmd_encode(const EncodeArgs& a, const Context& ctx) {
    const std::vector<Flow> flows = read_flows_file(a.flows);
    const Vocab vocab = Vocab::load_file(a.vocab);
    const SegmentMask mask{.rp = !a.no_rp, .pl = !a.no_pl};
    if (!mask.rp && !mask.pl) throw UsageError("--no-rp and --no-pl together leave nothing to encode");
    if (a.val_out.empty() != a.test_out.empty()) throw UsageError("--val-out and --test-out go together");
    if (a.val_out.empty()) {
        const Dataset d = encode_flows(flows, vocab, mask);
        write_dataset_file(a.out, d);
        ctx.out << "wrote " << d.size() << " sequences to " << a.out << "\n";
        return;
    }
    if (a.ratios.size() != 3) throw UsageError("--ratios expects three values");
    std::vector<int> labels;
    for (const Flow& f : flows) {
        if (!f.label) throw InputError(a.flows + ": splitting needs every flow labeled");
        labels.push_back(*f.label);
    }
    const SplitIndices s = split_indices(labels, {a.ratios[0], a.ratios[1], a.ratios[2]}, a.seed, !a.unstratified);
    for (const std::string& w : s.warnings) ctx.err << "warning: " << w << "\n";
    const std::pair<const std::vector<std::size_t>*, const std::string*> parts[] = {
        {&s.train, &a.out}, {&s.val, &a.val_out}, {&s.test, &a.test_out}};
    for (const auto& [idx, path] : parts) {
        const Dataset d = encode_flows(gather(flows, *idx), vocab, mask);
        write_dataset_file(*path, d);
        ctx.out << "wrote " << d.size() << " sequences to " << *path << "\n";
    }
}

struct PretrainArgs {
    ConfigSource source;
    std::string preset = "large";
    std::string tokens;
    std::string vocab;
    std::string out;
    std::string loss_curve;
    std::optional<std::uint64_t> seed;
};

void cmd_pretrain(PretrainArgs& a, const Context& ctx) {
    a.source.flag("pretrain.seed", a.seed);
    const Vocab vocab = Vocab::load_file(a.vocab);
    a.source.flags.set("tokenize.m", std::to_string(vocab.shape().m));
    a.source.flags.set("tokenize.n", std::to_string(vocab.shape().n));
    const ExperimentConfig cfg = resolve(a.preset, a.source, ctx);
    const Dataset train = read_tokens(a.tokens, "token");
    check_lengths(train, vocab.shape().length(), a.tokens);

    EncoderConfig enc = cfg.encoder;
    enc.vocab_size = vocab.size();
    enc.max_len = vocab.shape().length();
    enc.num_classes = 0;
    auto params = ModelParams<double>::init(enc, derive_seed(cfg.cpt.seed, 0x1a17));
    const PretrainResult r = pretrain_loop(train, cfg.cpt, std::move(params));
    if (r.skipped_slots > 0) ctx.err << "warning: " << r.skipped_slots << " sampling slots skipped\n";
    save_checkpoint(a.out, r.params);

    const std::string curve = a.loss_curve.empty() ? a.out + ".loss.txt" : a.loss_curve;
    std::ostringstream text;
    for (std::size_t i = 0; i < r.loss_curve.size(); ++i) text << r.loss_steps[i] << '\t' << shortest(r.loss_curve[i]) << '\n';
    write_text(curve, text.str());
    ctx.out << "pre-trained " << r.loss_curve.size() << " steps";
    if (!r.loss_curve.empty()) ctx.out << ", final loss " << shortest(r.loss_curve.back());
    ctx.out << "; wrote " << a.out << " and " << curve << "\n";
}

struct FinetuneArgs {
    ConfigSource source;
    std::string preset = "large";
    std::string model;
    std::string vocab;
    std::string train;
    std::string val;
    std::optional<int> classes;
    std::string out;
    std::string metrics;
    std::optional<std::uint64_t> seed;
};

void cmd_finetune(FinetuneArgs& a, const Context& ctx) {
    if (a.model.empty() == a.vocab.empty()) throw UsageError("give exactly one of --model or --vocab");
    a.source.flag("finetune.seed", a.seed);
    const ExperimentConfig cfg = resolve(a.preset, a.source, ctx);
    const Dataset train = read_tokens(a.train, "training");
    const Dataset val = a.val.empty() ? Dataset{} : read_tokens(a.val, "validation");

    ModelParams<double> start;
    if (!a.model.empty()) {
        start = load_checkpoint(a.model);
    } else {
        // No pre-training: a fresh encoder shaped by the config and vocabulary.
        const Vocab vocab = Vocab::load_file(a.vocab);
        EncoderConfig enc = cfg.encoder;
        enc.vocab_size = vocab.size();
        enc.max_len = vocab.shape().length();
        enc.num_classes = 0;
        start = ModelParams<double>::init(enc, derive_seed(cfg.finetune.seed, 0x1a17));
    }
    check_lengths(train, start.config.max_len, a.train);
    check_lengths(val, start.config.max_len, a.val);
    const int k = a.classes ? *a.classes : std::max(count_classes(train), count_classes(val));
    const InitResult m0 = init_model(std::move(start), k, train, val, cfg.finetune);
    save_checkpoint(a.out, m0.params);
    if (!a.metrics.empty()) write_text(a.metrics, m0.val.to_json().dump(2) + "\n");
    ctx.out << "M0 validation " << metrics_line(m0.val) << "; wrote " << a.out << "\n";
}

struct IterateArgs {
    ConfigSource source;
    std::string preset = "large";
    std::string model;
    std::string train;
    std::string val;
    std::string unlabeled;
    std::optional<double> thr;
    std::optional<int> limit;
    std::optional<double> epsilon;
    std::string out;
    std::string report;
    std::optional<std::uint64_t> seed;
};

void cmd_iterate(IterateArgs& a, const Context& ctx) {
    a.source.flag("pli.thr", a.thr);
    a.source.flag("pli.limit", a.limit);
    a.source.flag("pli.epsilon", a.epsilon);
    a.source.flag("pli.seed", a.seed);
    const ExperimentConfig cfg = resolve(a.preset, a.source, ctx);
    const ModelParams<double> m0 = load_checkpoint(a.model);
    if (!m0.has_classifier()) throw InputError(a.model + " has no classification head; run finetune first");
    const Dataset train = read_tokens(a.train, "training");
    const Dataset val = read_tokens(a.val, "validation");
    const Dataset pool = read_dataset_file(a.unlabeled);
    for (const auto& [d, path] : {std::pair{&train, &a.train}, std::pair{&val, &a.val}, std::pair{&pool, &a.unlabeled}}) {
        check_lengths(*d, m0.config.max_len, *path);
    }
    FineTuneConfig retrain = cfg.finetune;
    retrain.seed = derive_seed(cfg.pli.seed, 0xf1e);
    const IterateResult r = iterate(m0, train, val, pool, cfg.pli, retrain);
    for (const IterationReport& it : r.iterations) {
        ctx.err << "iteration " << it.iteration << ": " << it.pseudo_count << " pseudo labels, " << it.sampled_count
                << " sampled, validation " << metrics_line(it.val) << "\n";
        for (const std::string& w : it.warnings) ctx.err << "warning: " << w << "\n";
    }
    save_checkpoint(a.out, r.params);
    if (!a.report.empty()) write_text(a.report, r.report_json().dump(2) + "\n");
    ctx.out << "best iteration " << r.best_iteration << ", validation " << metrics_line(r.best_val) << "; wrote "
            << a.out << "\n";
}

struct EvalArgs {
    std::string model;
    std::string tokens;
    std::string out;
};

void cmd_eval(const EvalArgs& a, const Context& ctx) {
    const ModelParams<double> p = load_checkpoint(a.model);
    if (!p.has_classifier()) throw InputError(a.model + " has no classification head");
    const Dataset d = read_tokens(a.tokens, "token");
    check_lengths(d, p.config.max_len, a.tokens);
    const MetricsReport m = evaluate(p, d, ctx.threads.value_or(default_threads()));
    const std::string json = m.to_json().dump(2) + "\n";
    if (a.out.empty()) ctx.out << json;
    else write_text(a.out, json);
    ctx.err << metrics_line(m) << "\n";
}

struct AblateArgs {
    ConfigSource source;
    std::string preset = "large";
    std::string flows;
    std::string unlabeled;
    std::vector<std::string> variants{"full"};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::string out;
};

void cmd_ablate(AblateArgs& a, const Context& ctx) {
    const ExperimentConfig cfg = resolve(a.preset, a.source, ctx);
    const std::vector<Flow> labeled = read_flows_file(a.flows);
    const std::vector<Flow> unlabeled = a.unlabeled.empty() ? std::vector<Flow>{} : read_flows_file(a.unlabeled);
    std::vector<Variant> variants;
    for (const std::string& v : a.variants) variants.push_back(Variant::parse(v));

    nlohmann::json results = nlohmann::json::array();
    ctx.out << std::left << std::setw(18) << "variant" << "median test F1  per-seed F1\n";
    for (const Variant& v : variants) {
        nlohmann::json runs = nlohmann::json::array();
        std::vector<double> f1;
        for (std::uint64_t seed : a.seeds) {
            const RunOutcome r = run_pipeline(labeled, unlabeled, v, cfg, seed);
            ctx.err << v.name() << " seed " << seed << ": test " << metrics_line(r.test) << "\n";
            runs.push_back(r.summary_json());
            f1.push_back(r.test.macro_f1);
        }
        const double med = median(f1);
        results.push_back({{"variant", v.name()}, {"median_test_macro_f1", med}, {"runs", runs}});
        std::ostringstream row;
        row << std::left << std::setw(18) << v.name() << std::fixed << std::setprecision(4) << std::setw(16) << med;
        for (double x : f1) row << ' ' << x;
        ctx.out << row.str() << "\n";
    }
    if (!a.out.empty()) write_text(a.out, results.dump(2) + "\n");
}

struct ExportArgs {
    std::string model;
    std::string tokens;
    std::string out;
};

void cmd_export(const ExportArgs& a, const Context& ctx) {
    const ModelParams<double> p = load_checkpoint(a.model);
    const Dataset d = read_tokens(a.tokens, "token");
    check_lengths(d, p.config.max_len, a.tokens);
    std::ostringstream text;
    text << "index\tlabel\tcomm";
    for (int j = 0; j < p.config.d_model; ++j) text << "\th" << j;
    text << '\n';
    for (std::size_t i = 0; i < d.size(); ++i) {
        const RowVector<double> h = encoder_forward(p, d[i].seq.ids, Mode::Eval, 0).cls();
        text << i << '\t' << (d[i].label ? std::to_string(*d[i].label) : "") << '\t' << d[i].comm;
        for (Index j = 0; j < h.size(); ++j) text << '\t' << shortest(h(j));
        text << '\n';
    }
    write_text(a.out, text.str());
    ctx.out << "wrote " << d.size() << " vectors of dimension " << p.config.d_model << " to " << a.out << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Encrypted traffic classification: flow ingest, tokenization, contrastive pre-training, "
                 "pseudo-label iteration and evaluation."};
    app.name("pass");
    app.set_version_flag("--version", PASS_VERSION);
    app.require_subcommand(1);
    std::optional<int> threads;
    app.add_option("--threads", threads, "Worker threads (default: PASS_THREADS or 1)");

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Split packet captures into bidirectional TCP flow records");
    c_ingest->add_option("--pcap", ingest.pcaps, "Capture files")->required();
    c_ingest->add_option("--labels", ingest.labels, "File mapping capture names to class ids");
    c_ingest->add_option("--out", ingest.out, "Output flow records (JSONL)")->required();
    c_ingest->add_option("--payload-cap", ingest.payload_cap, "Payload bytes kept per packet")->capture_default_str();

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Generate a labeled synthetic flow corpus");
    c_synth->add_option("--spec", synth.source.path, "Corpus spec file ([corpus] section)");
    c_synth->add_option("--set", synth.source.sets, "Override one corpus key, e.g. --set corpus.counts=50,5,5,2");
    c_synth->add_option("--out", synth.out, "Labeled flow records (JSONL)")->required();
    c_synth->add_option("--unlabeled", synth.unlabeled, "Unlabeled flow records (JSONL)");
    c_synth->add_option("--seed", synth.seed, "Corpus seed");

    VocabArgs vocab;
    auto* c_vocab = app.add_subcommand("vocab", "Build the token vocabulary from flow records");
    c_vocab->add_option("--flows", vocab.flows, "Flow record files")->required();
    c_vocab->add_option("--m", vocab.m, "Raw payload bytes per flow")->capture_default_str();
    c_vocab->add_option("--n", vocab.n, "Packet lengths per flow")->capture_default_str();
    c_vocab->add_option("--out", vocab.out, "Vocabulary file")->required();

    EncodeArgs encode;
    auto* c_encode = app.add_subcommand("encode", "Encode flow records into token sequences");
    c_encode->add_option("--flows", encode.flows, "Flow records")->required();
    c_encode->add_option("--vocab", encode.vocab, "Vocabulary file")->required();
    c_encode->add_option("--out", encode.out, "Token records (the train split when splitting)")->required();
    c_encode->add_option("--val-out", encode.val_out, "Validation split output");
    c_encode->add_option("--test-out", encode.test_out, "Test split output");
    c_encode->add_option("--ratios", encode.ratios, "Train, val, test ratios")->delimiter(',')->expected(3);
    c_encode->add_option("--seed", encode.seed, "Split seed")->capture_default_str();
    c_encode->add_flag("--unstratified", encode.unstratified, "Split without per-class stratification");
    c_encode->add_flag("--no-rp", encode.no_rp, "Replace the raw payload segment with padding");
    c_encode->add_flag("--no-pl", encode.no_pl, "Replace the packet length segment with padding");

    PretrainArgs pretrain;
    auto* c_pretrain = app.add_subcommand("pretrain", "Contrastive pre-training of the encoder");
    pretrain.source.add_options(c_pretrain);
    c_pretrain->add_option("--preset", pretrain.preset, "Base configuration: large or desk")->capture_default_str();
    c_pretrain->add_option("--tokens", pretrain.tokens, "Labeled training tokens")->required();
    c_pretrain->add_option("--vocab", pretrain.vocab, "Vocabulary file")->required();
    c_pretrain->add_option("--out", pretrain.out, "Encoder checkpoint")->required();
    c_pretrain->add_option("--loss-curve", pretrain.loss_curve, "Step/loss text file (default: <out>.loss.txt)");
    c_pretrain->add_option("--seed", pretrain.seed, "Pre-training seed");

    FinetuneArgs finetune;
    auto* c_finetune = app.add_subcommand("finetune", "Attach a classifier and fine-tune (the initial model M0)");
    finetune.source.add_options(c_finetune);
    c_finetune->add_option("--preset", finetune.preset, "Base configuration: large or desk")->capture_default_str();
    c_finetune->add_option("--model", finetune.model, "Pre-trained encoder checkpoint");
    c_finetune->add_option("--vocab", finetune.vocab, "Start from a random encoder for this vocabulary");
    c_finetune->add_option("--train", finetune.train, "Training tokens")->required();
    c_finetune->add_option("--val", finetune.val, "Validation tokens for model selection");
    c_finetune->add_option("--classes", finetune.classes, "Class count (default: inferred from labels)");
    c_finetune->add_option("--out", finetune.out, "Output checkpoint")->required();
    c_finetune->add_option("--metrics", finetune.metrics, "Validation metrics JSON");
    c_finetune->add_option("--seed", finetune.seed, "Fine-tuning seed");

    IterateArgs it;
    auto* c_iterate = app.add_subcommand("iterate", "Pseudo-label iteration starting from M0");
    it.source.add_options(c_iterate);
    c_iterate->add_option("--preset", it.preset, "Base configuration: large or desk")->capture_default_str();
    c_iterate->add_option("--model", it.model, "M0 checkpoint")->required();
    c_iterate->add_option("--train", it.train, "Training tokens")->required();
    c_iterate->add_option("--val", it.val, "Validation tokens")->required();
    c_iterate->add_option("--unlabeled", it.unlabeled, "Unlabeled tokens")->required();
    c_iterate->add_option("--thr", it.thr, "Confidence threshold");
    c_iterate->add_option("--limit", it.limit, "Maximum iterations");
    c_iterate->add_option("--epsilon", it.epsilon, "Minimum validation F1 gain to continue");
    c_iterate->add_option("--out", it.out, "Output checkpoint")->required();
    c_iterate->add_option("--report", it.report, "Per-iteration report JSON");
    c_iterate->add_option("--seed", it.seed, "Iteration seed");

    EvalArgs eval;
    auto* c_eval = app.add_subcommand("eval", "Macro-averaged metrics of a classifier checkpoint");
    c_eval->add_option("--model", eval.model, "Classifier checkpoint")->required();
    c_eval->add_option("--tokens", eval.tokens, "Labeled tokens")->required();
    c_eval->add_option("--out", eval.out, "Metrics JSON (default: stdout)");

    AblateArgs ablate;
    auto* c_ablate = app.add_subcommand("ablate", "Run pipeline variants over several seeds");
    ablate.source.add_options(c_ablate);
    c_ablate->add_option("--preset", ablate.preset, "Base configuration: large or desk")->capture_default_str();
    c_ablate->add_option("--flows", ablate.flows, "Labeled flow records")->required();
    c_ablate->add_option("--unlabeled", ablate.unlabeled, "Unlabeled flow records");
    c_ablate->add_option("--variant", ablate.variants, "full, no_pli, no_cpt, no_rp, no_pl or '+' joins")
        ->capture_default_str();
    c_ablate->add_option("--seeds", ablate.seeds, "Run seeds")->delimiter(',')->capture_default_str();
    c_ablate->add_option("--out", ablate.out, "Results JSON");

    ExportArgs exp;
    auto* c_export = app.add_subcommand("export-vectors", "Write per-flow CLS vectors as TSV");
    c_export->add_option("--model", exp.model, "Checkpoint")->required();
    c_export->add_option("--tokens", exp.tokens, "Token records")->required();
    c_export->add_option("--out", exp.out, "Output TSV")->required();

    if (argc <= 1) {
        out << app.help();
        return Usage;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        const auto parsed = app.get_subcommands();
        err << "error: " << e.what() << "\n\n" << (parsed.empty() ? app.help() : parsed.back()->help());
        return Usage;
    }

    const Context ctx{out, err, threads};
    try {
        if (*c_ingest) cmd_ingest(ingest, ctx);
        else if (*c_synth) cmd_synth(synth, ctx);
        else if (*c_vocab) cmd_vocab(vocab, ctx);
        else if (*c_encode) cmd_encode(encode, ctx);
        else if (*c_pretrain) cmd_pretrain(pretrain, ctx);
        else if (*c_finetune) cmd_finetune(finetune, ctx);
        else if (*c_iterate) cmd_iterate(it, ctx);
        else if (*c_eval) cmd_eval(eval, ctx);
        else if (*c_ablate) cmd_ablate(ablate, ctx);
        else if (*c_export) cmd_export(exp, ctx);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return Usage;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return Numeric;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return Input;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return Input;
    }
    return Ok;
}

}  // namespace pass::cli
