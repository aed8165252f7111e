#include "pass/tokenize.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace pass {

namespace {
const char* const kSpecialNames[special::Count] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
constexpr std::string_view kVocabMagic = "pass-vocab 1";
}  // namespace

void SequenceShape::validate() const {
    if (m <= 0 || m % 2 != 0) throw UsageError("m must be positive and even, got " + std::to_string(m));
    if (n <= 0) throw UsageError("n must be positive, got " + std::to_string(n));
}

std::vector<std::string> build_rp_tokens(const Flow& flow, int m) {
    if (m <= 0 || m % 2 != 0) throw UsageError("m must be positive and even");
    Bytes bytes;
    const auto budget = static_cast<std::size_t>(m);
    for (const Packet& p : flow.packets) {
        const std::size_t take = std::min(budget - bytes.size(), p.payload.size());
        bytes.insert(bytes.end(), p.payload.begin(), p.payload.begin() + static_cast<std::ptrdiff_t>(take));
        if (bytes.size() == budget) break;
    }
    std::vector<std::string> tokens;
    tokens.reserve(bytes.size() / 2);
    for (std::size_t i = 0; i + 1 < bytes.size(); i += 2) {
        tokens.push_back(to_hex(ByteView{bytes.data() + i, 2}));
    }
    return tokens;
}

std::vector<std::string> build_pl_tokens(const Flow& flow, int n) {
    if (n <= 0) throw UsageError("n must be positive");
    std::vector<std::string> tokens;
    const std::size_t count = std::min(flow.packets.size(), static_cast<std::size_t>(n));
    tokens.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const Packet& p = flow.packets[i];
        const char sign = p.direction == Direction::ClientToServer ? '+' : '-';
        tokens.push_back(sign + std::to_string(p.payload_len));
    }
    return tokens;
}

void Vocab::add(std::string token, std::uint64_t freq) {
    const int id = size();
    if (!index_.emplace(token, id).second) throw FormatError("duplicate vocab token '" + token + "'");
    tokens_.push_back(std::move(token));
    freq_.push_back(freq);
}

Vocab Vocab::build(std::span<const Flow> corpus, SequenceShape shape) {
    shape.validate();
    std::map<std::string, std::uint64_t> counts;
    for (const Flow& f : corpus) {
        for (auto& t : build_rp_tokens(f, shape.m)) ++counts[t];
        for (auto& t : build_pl_tokens(f, shape.n)) ++counts[t];
    }
    std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
    // counts is already in lexicographic order, so a stable sort on frequency
    // keeps the tie-break.
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    Vocab v;
    v.shape_ = shape;
    for (const char* name : kSpecialNames) v.add(name, 0);
    for (auto& [token, freq] : ranked) v.add(token, freq);
    return v;
}

int Vocab::id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? special::Unk : it->second;
}

bool Vocab::contains(std::string_view token) const {
    return index_.contains(std::string(token));
}

void Vocab::save(std::ostream& out) const {
    out << kVocabMagic << '\n'
        << "m " << shape_.m << '\n'
        << "n " << shape_.n << '\n'
        << "V " << size() << '\n';
    for (int i = 0; i < size(); ++i) {
        out << tokens_[static_cast<std::size_t>(i)] << '\t' << i << '\t'
            << freq_[static_cast<std::size_t>(i)] << '\n';
    }
}

Vocab Vocab::load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kVocabMagic) throw FormatError("not a vocab file");
    auto header = [&](std::string_view key) {
        if (!std::getline(in, line)) throw FormatError("truncated vocab header");
        std::istringstream ss(line);
        std::string k;
        long long value = -1;
        if (!(ss >> k >> value) || k != key) throw FormatError("bad vocab header line '" + line + "'");
        return value;
    };
    Vocab v;
    v.shape_.m = static_cast<int>(header("m"));
    v.shape_.n = static_cast<int>(header("n"));
    const long long size = header("V");
    v.shape_.validate();
    if (size < special::Count) throw FormatError("vocab smaller than the special set");
    for (long long i = 0; i < size; ++i) {
        if (!std::getline(in, line)) throw FormatError("vocab truncated at entry " + std::to_string(i));
        const auto t1 = line.find('\t');
        const auto t2 = line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos) {
            throw FormatError("bad vocab entry '" + line + "'");
        }
        long long id = -1;
        std::uint64_t freq = 0;
        try {
            id = std::stoll(line.substr(t1 + 1, t2 - t1 - 1));
            freq = std::stoull(line.substr(t2 + 1));
        } catch (const std::logic_error&) {
            throw FormatError("bad vocab entry '" + line + "'");
        }
        if (id != i) throw FormatError("vocab ids must be dense and ordered");
        if (v.contains(line.substr(0, t1))) throw FormatError("duplicate vocab token '" + line.substr(0, t1) + "'");
        v.add(line.substr(0, t1), freq);
    }
    for (int i = 0; i < special::Count; ++i) {
        if (v.tokens_[static_cast<std::size_t>(i)] != kSpecialNames[i]) {
            throw FormatError("special tokens must occupy ids 0-3");
        }
    }
    return v;
}

void Vocab::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    save(out);
}

Vocab Vocab::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open vocab file " + path);
    try {
        return load(in);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

TokenSequence encode_sequence(const Flow& flow, const Vocab& vocab, SegmentMask mask) {
    const SequenceShape shape = vocab.shape();
    TokenSequence seq;
    seq.ids.assign(static_cast<std::size_t>(shape.length()), special::Pad);
    seq.ids[0] = special::Cls;
    seq.ids[static_cast<std::size_t>(shape.sep_position())] = special::Sep;
    if (mask.rp) {
        const auto rp = build_rp_tokens(flow, shape.m);
        for (std::size_t i = 0; i < rp.size(); ++i) seq.ids[1 + i] = vocab.id(rp[i]);
        seq.rp_len = static_cast<int>(rp.size());
    }
    if (mask.pl) {
        const auto pl = build_pl_tokens(flow, shape.n);
        const auto base = static_cast<std::size_t>(shape.sep_position() + 1);
        for (std::size_t i = 0; i < pl.size(); ++i) seq.ids[base + i] = vocab.id(pl[i]);
        seq.pl_len = static_cast<int>(pl.size());
    }
    return seq;
}

}  // namespace pass
