#include "pass/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <type_traits>

namespace pass {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw UsageError("bad value '" + text + "' for config key " + key);
    }
    return value;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

ConfigField make_field(std::string key, int& ref) {
    return {key, [&ref] { return std::to_string(ref); },
            [&ref, key](const std::string& s) { ref = parse_number<int>(key, s); }};
}

ConfigField make_field(std::string key, double& ref) {
    return {key, [&ref] { return format_double(ref); },
            [&ref, key](const std::string& s) { ref = parse_number<double>(key, s); }};
}

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "size_t fields bind through the uint64_t overload");

ConfigField make_field(std::string key, std::uint64_t& ref) {
    return {key, [&ref] { return std::to_string(ref); },
            [&ref, key](const std::string& s) { ref = parse_number<std::uint64_t>(key, s); }};
}

ConfigField make_field(std::string key, bool& ref) {
    return {key, [&ref] { return std::string(ref ? "true" : "false"); },
            [&ref, key](const std::string& s) {
                if (s == "true" || s == "1") ref = true;
                else if (s == "false" || s == "0") ref = false;
                else throw UsageError("bad value '" + s + "' for config key " + key);
            }};
}

ConfigField make_field(std::string key, std::vector<std::size_t>& ref) {
    return {key,
            [&ref] {
                std::string out;
                for (std::size_t i = 0; i < ref.size(); ++i) out += (i ? "," : "") + std::to_string(ref[i]);
                return out;
            },
            [&ref, key](const std::string& s) {
                std::vector<std::size_t> v;
                std::stringstream ss(s);
                std::string part;
                while (std::getline(ss, part, ',')) v.push_back(parse_number<std::size_t>(key, trim(part)));
                if (v.empty()) throw UsageError("config key " + key + " needs at least one count");
                ref = std::move(v);
            }};
}

void add_optimizer(std::vector<ConfigField>& f, const std::string& sec, OptimizerConfig& o) {
    f.push_back(make_field(sec + ".lr", o.base_lr));
    f.push_back(make_field(sec + ".warmup", o.warmup_fraction));
    f.push_back(make_field(sec + ".weight_decay", o.weight_decay));
    f.push_back(make_field(sec + ".max_grad_norm", o.max_grad_norm));
}

}  // namespace

ConfigFile ConfigFile::parse(std::istream& in, const std::string& origin) {
    ConfigFile cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw InputError(origin + ":" + std::to_string(lineno) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InputError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw InputError(origin + ":" + std::to_string(lineno) + ": empty key");
        cfg.set(section.empty() ? key : section + "." + key, trim(line.substr(eq + 1)));
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file " + path);
    return parse(in, path);
}

std::vector<ConfigField> config_fields(ExperimentConfig& c) {
    std::vector<ConfigField> f;
    f.push_back(make_field("tokenize.m", c.shape.m));
    f.push_back(make_field("tokenize.n", c.shape.n));
    f.push_back(make_field("model.d_model", c.encoder.d_model));
    f.push_back(make_field("model.heads", c.encoder.heads));
    f.push_back(make_field("model.d_head", c.encoder.d_head));
    f.push_back(make_field("model.ffn_dim", c.encoder.ffn_dim));
    f.push_back(make_field("model.n_blocks", c.encoder.n_blocks));
    f.push_back(make_field("model.dropout", c.encoder.dropout));
    f.push_back(make_field("model.proj_dim", c.encoder.proj_dim));
    f.push_back(make_field("pretrain.step", c.cpt.steps));
    f.push_back(make_field("pretrain.bz", c.cpt.batch_size));
    f.push_back(make_field("pretrain.tau", c.cpt.tau));
    f.push_back(make_field("pretrain.alpha", c.cpt.alpha));
    f.push_back(make_field("pretrain.beta", c.cpt.beta));
    f.push_back(make_field("pretrain.retry_cap", c.cpt.retry_cap));
    f.push_back(make_field("pretrain.seed", c.cpt.seed));
    add_optimizer(f, "pretrain", c.cpt.optimizer);
    f.push_back(make_field("finetune.epochs", c.finetune.epochs));
    f.push_back(make_field("finetune.bz", c.finetune.batch_size));
    f.push_back(make_field("finetune.seed", c.finetune.seed));
    add_optimizer(f, "finetune", c.finetune.optimizer);
    f.push_back(make_field("pli.thr", c.pli.thr));
    f.push_back(make_field("pli.limit", c.pli.limit));
    f.push_back(make_field("pli.epsilon", c.pli.epsilon));
    f.push_back(make_field("pli.w1", c.pli.w1));
    f.push_back(make_field("pli.w2", c.pli.w2));
    f.push_back(make_field("pli.budget", c.pli.budget));
    f.push_back(make_field("pli.seed", c.pli.seed));
    f.push_back(make_field("split.train", c.ratios[0]));
    f.push_back(make_field("split.val", c.ratios[1]));
    f.push_back(make_field("split.test", c.ratios[2]));
    f.push_back(make_field("split.stratified", c.stratified));
    f.push_back(make_field("run.threads", c.threads));
    return f;
}

std::vector<ConfigField> config_fields(CorpusSpec& s) {
    std::vector<ConfigField> f;
    f.push_back(make_field("corpus.counts", s.class_counts));
    f.push_back(make_field("corpus.unlabeled", s.unlabeled_count));
    f.push_back(make_field("corpus.shared_fraction", s.shared_fraction));
    f.push_back(make_field("corpus.payload_bytes", s.payload_bytes));
    f.push_back(make_field("corpus.shared_prefix_bytes", s.shared_prefix_bytes));
    f.push_back(make_field("corpus.alphabet", s.alphabet));
    f.push_back(make_field("corpus.signal", s.signal));
    f.push_back(make_field("corpus.min_packets", s.min_packets));
    f.push_back(make_field("corpus.max_packets", s.max_packets));
    f.push_back(make_field("corpus.length_jitter", s.length_jitter));
    f.push_back(make_field("corpus.length_signal", s.length_signal));
    f.push_back(make_field("corpus.length_pool", s.length_pool));
    f.push_back(make_field("corpus.domains_per_class", s.domains_per_class));
    f.push_back(make_field("corpus.shared_domains", s.shared_domains));
    f.push_back(make_field("corpus.seed", s.seed));
    return f;
}

void apply_config(const ConfigFile& file, const std::vector<ConfigField>& fields) {
    for (const auto& [key, value] : file.values()) {
        const ConfigField* match = nullptr;
        int matches = 0;
        for (const ConfigField& field : fields) {
            if (field.key == key) {
                match = &field;
                matches = 1;
                break;
            }
            const auto dot = field.key.find('.');
            if (key.find('.') == std::string::npos && field.key.substr(dot + 1) == key) {
                match = &field;
                ++matches;
            }
        }
        if (matches == 0) throw UsageError("unknown config key '" + key + "'");
        if (matches > 1) throw UsageError("ambiguous config key '" + key + "'; qualify it with a section");
        match->set(value);
    }
}

std::string render_config(const std::vector<ConfigField>& fields) {
    std::string out, section;
    for (const ConfigField& field : fields) {
        const auto dot = field.key.find('.');
        const std::string sec = field.key.substr(0, dot);
        if (sec != section) {
            out += (out.empty() ? "[" : "\n[") + sec + "]\n";
            section = sec;
        }
        out += field.key.substr(dot + 1) + " = " + field.get() + "\n";
    }
    return out;
}

}  // namespace pass
