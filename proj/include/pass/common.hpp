#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace pass {

using Index = Eigen::Index;
using ClassId = int;
using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

// Error taxonomy. The CLI maps these onto exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Bad input data or files (exit code 2).
struct InputError : Error {
    using Error::Error;
};
// Malformed container formats (pcap, checkpoint, vocab); a kind of input error.
struct FormatError : InputError {
    using InputError::InputError;
};
// Non-finite values or other numeric breakdowns (exit code 3).
struct NumericError : Error {
    using Error::Error;
};
// Contract violations by the caller (shape or config mismatch).
struct UsageError : Error {
    using Error::Error;
};

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view hex);

// SHA-256 as lowercase hex.
std::string sha256_hex(ByteView bytes);
std::array<std::uint8_t, 32> sha256(ByteView bytes);

// SplitMix64 mixing, used to derive independent stream seeds from a root seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0,
                                    std::uint64_t c = 0) {
    return mix_seed(mix_seed(mix_seed(root ^ mix_seed(a)) ^ b) + c);
}

/// Small deterministic generator with portable distributions. The standard
/// library distributions are implementation-defined, which would make corpora
/// and checkpoints differ across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n), n > 0. Rejection sampling avoids modulo bias.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % n;
    }
    // Index drawn proportionally to non-negative weights (at least one positive).
    std::size_t categorical(std::span<const double> weights);

private:
    std::uint64_t state_;
};

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng.below(i)]);
    }
}

}  // namespace pass
