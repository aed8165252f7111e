#include "pass/dataset.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace pass {

using nlohmann::json;

Dataset encode_flows(const std::vector<Flow>& flows, const Vocab& vocab, SegmentMask mask) {
    Dataset data;
    data.reserve(flows.size());
    for (const Flow& f : flows) data.push_back({encode_sequence(f, vocab, mask), f.label, f.comm.key()});
    return data;
}

void write_dataset(std::ostream& out, const Dataset& data) {
    for (const Example& e : data) {
        const json record = {
            {"ids", e.seq.ids},
            {"rp_len", e.seq.rp_len},
            {"pl_len", e.seq.pl_len},
            {"label", e.label ? json(*e.label) : json(nullptr)},
            {"comm", e.comm},
        };
        out << record.dump() << '\n';
    }
}

Dataset read_dataset(std::istream& in) {
    Dataset data;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const json r = json::parse(line);
            Example e;
            e.seq.ids = r.at("ids").get<std::vector<int>>();
            e.seq.rp_len = r.at("rp_len").get<int>();
            e.seq.pl_len = r.at("pl_len").get<int>();
            if (!r.at("label").is_null()) e.label = r.at("label").get<ClassId>();
            e.comm = r.at("comm").get<std::string>();
            data.push_back(std::move(e));
        } catch (const json::exception& ex) {
            throw FormatError("token file line " + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return data;
}

void write_dataset_file(const std::string& path, const Dataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    write_dataset(out, data);
}

Dataset read_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open token file " + path);
    try {
        return read_dataset(in);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

int count_classes(const Dataset& data) {
    int k = 0;
    for (const Example& e : data) {
        if (e.label) k = std::max(k, *e.label + 1);
    }
    return k;
}

std::vector<std::size_t> label_counts(const Dataset& data, int num_classes) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
    for (const Example& e : data) {
        if (!e.label) continue;
        if (*e.label < 0 || *e.label >= num_classes) {
            throw InputError("label " + std::to_string(*e.label) + " outside [0, " +
                             std::to_string(num_classes) + ")");
        }
        ++counts[static_cast<std::size_t>(*e.label)];
    }
    return counts;
}

}  // namespace pass
