#include "pass/synthgen.hpp"

#include <algorithm>
#include <cmath>

namespace pass {

void CorpusSpec::validate() const {
    if (class_counts.empty()) throw UsageError("corpus needs at least one class");
    if (class_counts.size() > 200) throw UsageError("corpus supports at most 200 classes");
    for (std::size_t c : class_counts) {
        if (c < 1) throw UsageError("every class needs at least one flow");
    }
    if (!(shared_fraction >= 0 && shared_fraction <= 1)) throw UsageError("shared fraction must lie in [0, 1]");
    if (!(signal >= 0 && signal <= 1)) throw UsageError("signal must lie in [0, 1]");
    if (!(length_signal >= 0 && length_signal <= 1)) throw UsageError("length signal must lie in [0, 1]");
    if (length_pool < 1) throw UsageError("length pool must be non-empty");
    if (payload_bytes < 0 || shared_prefix_bytes < 0 || shared_prefix_bytes > payload_bytes) {
        throw UsageError("shared prefix must fit inside the payload");
    }
    if (alphabet < 1 || alphabet > 256) throw UsageError("alphabet must hold 1 to 256 values");
    if (min_packets < 1 || max_packets < min_packets) throw UsageError("invalid packet count range");
    if (length_jitter < 1 || domains_per_class < 1 || shared_domains < 1) {
        throw UsageError("jitter and domain pools must be positive");
    }
}

CorpusSpec scaled(CorpusSpec spec, double factor) {
    for (auto& c : spec.class_counts) {
        c = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(c) * factor)));
    }
    return spec;
}

namespace {

struct ClassProfile {
    std::vector<int> byte_pref;          // alphabet index per payload position
    std::vector<Direction> direction;    // per packet slot
    std::vector<std::uint32_t> length;   // base payload length per packet slot
};

struct Domain {
    Endpoint server;
    std::string fingerprint;
};

std::uint8_t alphabet_byte(int a, int alphabet) {
    return static_cast<std::uint8_t>(a * (256 / alphabet) + (alphabet < 256 ? 1 : 0));
}

Domain make_domain(bool shared, int owner, int index) {
    Domain d;
    d.server.ip = shared ? IpAddress::v4(200, 0, static_cast<std::uint8_t>(index), 1)
                         : IpAddress::v4(100, static_cast<std::uint8_t>(owner), static_cast<std::uint8_t>(index), 1);
    d.server.port = 443;
    const std::string name = shared ? "pass-synth/shared/" + std::to_string(index)
                                    : "pass-synth/class" + std::to_string(owner) + "/" + std::to_string(index);
    d.fingerprint = sha256_hex({reinterpret_cast<const std::uint8_t*>(name.data()), name.size()});
    return d;
}

class Generator {
public:
    explicit Generator(const CorpusSpec& spec) : spec_(spec) {
        Rng rng(derive_seed(spec.seed, 0x9f0f11e));
        const int k = spec.num_classes();
        for (int c = 0; c < k; ++c) {
            ClassProfile p;
            for (int j = 0; j < spec.payload_bytes; ++j) p.byte_pref.push_back(static_cast<int>(rng.below(spec.alphabet)));
            for (int s = 0; s < spec.max_packets; ++s) {
                p.direction.push_back(s == 0 || rng.uniform() < 0.5 ? (s % 2 == 0 ? Direction::ClientToServer : Direction::ServerToClient)
                                                                   : (s % 2 == 0 ? Direction::ServerToClient : Direction::ClientToServer));
                p.length.push_back(static_cast<std::uint32_t>(40 + rng.below(1360)));
            }
            profiles_.push_back(std::move(p));
        }
        for (int j = 0; j < spec.shared_prefix_bytes; ++j) shared_template_.push_back(static_cast<int>(rng.below(spec.alphabet)));
        for (int j = 0; j < spec.length_pool; ++j) common_lengths_.push_back(static_cast<std::uint32_t>(40 + rng.below(1360)));
    }

    Flow make_flow(int cls, std::uint64_t stream) const {
        Rng rng(stream);
        const ClassProfile& prof = profiles_[static_cast<std::size_t>(cls)];
        const bool shared = rng.uniform() < spec_.shared_fraction;
        const Domain dom = shared ? make_domain(true, 0, static_cast<int>(rng.below(spec_.shared_domains)))
                                  : make_domain(false, cls, static_cast<int>(rng.below(spec_.domains_per_class)));

        Bytes payload(static_cast<std::size_t>(spec_.payload_bytes));
        for (int j = 0; j < spec_.payload_bytes; ++j) {
            const bool templated = shared && j < spec_.shared_prefix_bytes;
            const int pref = templated ? shared_template_[static_cast<std::size_t>(j)]
                                       : prof.byte_pref[static_cast<std::size_t>(j)];
            const int a = rng.uniform() < spec_.signal ? pref : static_cast<int>(rng.below(spec_.alphabet));
            payload[static_cast<std::size_t>(j)] = alphabet_byte(a, spec_.alphabet);
        }

        Flow flow;
        flow.label = cls;
        flow.key.src_ip = IpAddress::v4(10, static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
                                        static_cast<std::uint8_t>(1 + rng.below(254)));
        flow.key.src_port = static_cast<std::uint16_t>(49152 + rng.below(16384));
        flow.key.dst_ip = dom.server.ip;
        flow.key.dst_port = dom.server.port;
        flow.comm.dst = dom.server;
        flow.comm.tls_cert_fingerprint = dom.fingerprint;

        const auto packets = static_cast<int>(spec_.min_packets + rng.below(spec_.max_packets - spec_.min_packets + 1));
        std::size_t used = 0;
        for (int s = 0; s < packets; ++s) {
            Packet p;
            p.direction = prof.direction[static_cast<std::size_t>(s)];
            p.capture_index = static_cast<std::uint64_t>(s);
            const bool typical = rng.uniform() < spec_.length_signal;
            p.payload_len = typical ? prof.length[static_cast<std::size_t>(s)] +
                                          17u * static_cast<std::uint32_t>(rng.below(spec_.length_jitter))
                                    : common_lengths_[rng.below(common_lengths_.size())];
            const std::size_t take = std::min<std::size_t>(p.payload_len, payload.size() - used);
            p.payload.assign(payload.begin() + static_cast<std::ptrdiff_t>(used),
                             payload.begin() + static_cast<std::ptrdiff_t>(used + take));
            used += take;
            flow.packets.push_back(std::move(p));
        }
        return flow;
    }

private:
    const CorpusSpec& spec_;
    std::vector<ClassProfile> profiles_;
    std::vector<int> shared_template_;
    std::vector<std::uint32_t> common_lengths_;
};

}  // namespace

SyntheticCorpus generate(const CorpusSpec& spec) {
    spec.validate();
    const Generator gen(spec);
    SyntheticCorpus corpus;
    const int k = spec.num_classes();
    for (int c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < spec.class_counts[static_cast<std::size_t>(c)]; ++i) {
            corpus.labeled.push_back(gen.make_flow(c, derive_seed(spec.seed, 1, static_cast<std::uint64_t>(c), i)));
        }
    }
    std::vector<double> mixture;
    for (std::size_t n : spec.class_counts) mixture.push_back(static_cast<double>(n));
    Rng pick(derive_seed(spec.seed, 2));
    for (std::size_t i = 0; i < spec.unlabeled_count; ++i) {
        const auto c = static_cast<int>(pick.categorical(mixture));
        Flow f = gen.make_flow(c, derive_seed(spec.seed, 3, static_cast<std::uint64_t>(c), i));
        f.label.reset();
        corpus.unlabeled.push_back(std::move(f));
        corpus.unlabeled_truth.push_back(c);
    }
    return corpus;
}

}  // namespace pass
