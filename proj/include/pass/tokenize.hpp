#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pass/flow.hpp"

namespace pass {

namespace special {
constexpr int Pad = 0;
constexpr int Unk = 1;
constexpr int Cls = 2;
constexpr int Sep = 3;
constexpr int Count = 4;
}  // namespace special

/// Byte budget m for the raw payload segment and packet budget n for the
/// length segment.
struct SequenceShape {
    int m = 128;
    int n = 32;

    int rp_slots() const { return m / 2; }
    int sep_position() const { return 1 + m / 2; }
    int length() const { return m / 2 + n + 2; }
    void validate() const;
    bool operator==(const SequenceShape&) const = default;
};

// First m payload bytes of the flow in capture order, paired into 4-digit hex
// bigrams. A trailing odd byte is dropped.
std::vector<std::string> build_rp_tokens(const Flow& flow, int m);

// "+len" / "-len" for the first n packets, + meaning client to server.
std::vector<std::string> build_pl_tokens(const Flow& flow, int n);

/// Frequency-ranked coding dictionary shared by both segments.
class Vocab {
public:
    Vocab() = default;

    static Vocab build(std::span<const Flow> corpus, SequenceShape shape);

    int size() const { return static_cast<int>(tokens_.size()); }
    SequenceShape shape() const { return shape_; }
    int id(std::string_view token) const;  // Unk when absent
    bool contains(std::string_view token) const;
    const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
    std::uint64_t frequency(int id) const { return freq_.at(static_cast<std::size_t>(id)); }

    void save(std::ostream& out) const;
    static Vocab load(std::istream& in);
    void save_file(const std::string& path) const;
    static Vocab load_file(const std::string& path);

    bool operator==(const Vocab& o) const {
        return shape_ == o.shape_ && tokens_ == o.tokens_ && freq_ == o.freq_;
    }

private:
    void add(std::string token, std::uint64_t freq);

    SequenceShape shape_;
    std::vector<std::string> tokens_;
    std::vector<std::uint64_t> freq_;
    std::unordered_map<std::string, int> index_;
};

struct TokenSequence {
    std::vector<int> ids;
    int rp_len = 0;
    int pl_len = 0;
    bool operator==(const TokenSequence&) const = default;
};

// Segments disabled here are emitted as all-PAD (feature ablations).
struct SegmentMask {
    bool rp = true;
    bool pl = true;
};

/// [CLS] + rp ids padded to m/2 + [SEP] + pl ids padded to n.
TokenSequence encode_sequence(const Flow& flow, const Vocab& vocab, SegmentMask mask = {});

}  // namespace pass
