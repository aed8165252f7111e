#include "pass/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace pass {

namespace {

std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& ratios) {
    const double sum = ratios[0] + ratios[1] + ratios[2];
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> rest{};
    std::size_t used = 0;
    for (int i = 0; i < 3; ++i) {
        const double quota = static_cast<double>(n) * ratios[static_cast<std::size_t>(i)] / sum;
        counts[static_cast<std::size_t>(i)] = static_cast<std::size_t>(std::floor(quota));
        rest[static_cast<std::size_t>(i)] = quota - std::floor(quota);
        used += counts[static_cast<std::size_t>(i)];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rest[a] > rest[b]; });
    for (std::size_t k = 0; used < n; ++k, ++used) ++counts[order[k % 3]];
    return counts;
}

void deal(const std::vector<std::size_t>& pool, const std::array<std::size_t, 3>& counts, SplitIndices& out) {
    auto it = pool.begin();
    out.train.insert(out.train.end(), it, it + static_cast<std::ptrdiff_t>(counts[0]));
    it += static_cast<std::ptrdiff_t>(counts[0]);
    out.val.insert(out.val.end(), it, it + static_cast<std::ptrdiff_t>(counts[1]));
    it += static_cast<std::ptrdiff_t>(counts[1]);
    out.test.insert(out.test.end(), it, pool.end());
}

}  // namespace

SplitIndices split_indices(const std::vector<int>& labels, std::array<double, 3> ratios, std::uint64_t seed,
                           bool stratified) {
    if (labels.empty()) throw UsageError("cannot split an empty dataset");
    for (double r : ratios) {
        if (!(r >= 0)) throw UsageError("split ratios must be non-negative");
    }
    Rng rng(seed);
    SplitIndices out;
    if (!stratified) {
        std::vector<std::size_t> all(labels.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        shuffle(all, rng);
        deal(all, apportion(all.size(), ratios), out);
    } else {
        std::map<int, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
        for (auto& [label, pool] : by_class) {
            shuffle(pool, rng);
            if (pool.size() < 3) {
                out.warnings.push_back("class " + std::to_string(label) + " has " + std::to_string(pool.size()) +
                                       " samples; all placed in train");
                out.train.insert(out.train.end(), pool.begin(), pool.end());
                continue;
            }
            deal(pool, apportion(pool.size(), ratios), out);
        }
    }
    for (auto* part : {&out.train, &out.val, &out.test}) std::sort(part->begin(), part->end());
    return out;
}

}  // namespace pass
