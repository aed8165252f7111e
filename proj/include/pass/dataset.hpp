#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pass/flow.hpp"
#include "pass/tokenize.hpp"

namespace pass {

/// An encoded flow with the side information training needs.
struct Example {
    TokenSequence seq;
    std::optional<ClassId> label;
    std::string comm;  // CommInfo::key() of the source flow
    bool operator==(const Example&) const = default;
};

using Dataset = std::vector<Example>;

Dataset encode_flows(const std::vector<Flow>& flows, const Vocab& vocab, SegmentMask mask = {});

// Line-delimited token records: {"ids":[...],"rp_len":..,"pl_len":..,"label":..,"comm":".."}.
void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(std::istream& in);
void write_dataset_file(const std::string& path, const Dataset& data);
Dataset read_dataset_file(const std::string& path);

// Largest label + 1 over labeled examples (0 when none).
int count_classes(const Dataset& data);
std::vector<std::size_t> label_counts(const Dataset& data, int num_classes);

}  // namespace pass
