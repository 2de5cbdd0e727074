#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace gq {

using Digest = std::array<std::uint8_t, 32>;

/// SHA-256 of a byte range.
Digest sha256(std::span<const std::uint8_t> bytes);
std::string to_hex(std::span<const std::uint8_t> bytes);

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Independent stream key for candidate `index` of stream `stream` under
/// `master_seed`.
constexpr std::uint64_t stream_key(std::uint64_t master_seed, std::uint64_t stream, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(splitmix64(master_seed) ^ stream) ^ index);
}

/// Deterministic generator. Draws are defined by std::mt19937_64 (whose
/// output sequence is fixed by the standard) plus the conversions below, so
/// results do not depend on the standard library's distribution classes.
class Rng {
public:
    explicit Rng(std::uint64_t state) : engine_(state) {}

    /// Uniform on [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo,hi]; returns lo exactly when lo == hi.
    double uniform(double lo, double hi) { return lo == hi ? lo : lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0,n), n > 0, by rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace gq
