#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pass/common.hpp"

namespace pass {

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
    std::vector<std::string> warnings;
};

/// Partitions [0, labels.size()) by the given ratios using largest-remainder
/// apportionment. When stratified, each class is apportioned separately and
/// classes with fewer than three samples go entirely to train.
SplitIndices split_indices(const std::vector<int>& labels, std::array<double, 3> ratios, std::uint64_t seed,
                           bool stratified = true);

template <typename T>
std::vector<T> gather(const std::vector<T>& items, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(items[i]);
    return out;
}

}  // namespace pass
