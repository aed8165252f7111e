#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pass/flow.hpp"

namespace pass {

/// Parameters of a labeled synthetic flow corpus. Each class has its own
/// positional byte preferences, packet length profile and private
/// destinations; a fraction of flows instead talk to a shared destination
/// pool and open with a class-independent payload prefix (homogeneous traffic).
struct CorpusSpec {
    std::vector<std::size_t> class_counts{50, 5, 5, 2};
    std::size_t unlabeled_count = 0;     // drawn from the same class mixture
    double shared_fraction = 0.3;
    int payload_bytes = 32;              // cleartext bytes generated per flow
    int shared_prefix_bytes = 12;        // bytes replaced by the shared template
    int alphabet = 16;                   // distinct byte values used
    double signal = 0.5;                 // probability a byte follows its class preference
    int min_packets = 4;
    int max_packets = 8;
    int length_jitter = 3;               // distinct length variants per packet slot
    double length_signal = 0.5;          // probability a packet length follows the class profile
    int length_pool = 8;                 // class-independent lengths used otherwise
    int domains_per_class = 3;
    int shared_domains = 2;
    std::uint64_t seed = 1;

    int num_classes() const { return static_cast<int>(class_counts.size()); }
    void validate() const;
};

struct SyntheticCorpus {
    std::vector<Flow> labeled;
    std::vector<Flow> unlabeled;         // label stripped
    std::vector<ClassId> unlabeled_truth;
};

SyntheticCorpus generate(const CorpusSpec& spec);

// Scales every class count by `factor` (at least one flow per class).
CorpusSpec scaled(CorpusSpec spec, double factor);

}  // namespace pass
