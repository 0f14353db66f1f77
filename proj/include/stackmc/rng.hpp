#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace stackmc {

// Counter-based generator (Philox 4x32, 10 rounds). Streams are a pure
// function of (key, counter), so independent streams come from deriving
// independent 64-bit keys rather than from jumping one long sequence.
// Satisfies UniformRandomBitGenerator with 64-bit output.
class Philox4x32 {
public:
    using result_type = std::uint64_t;

    Philox4x32() : Philox4x32(0) {}
    explicit Philox4x32(std::uint64_t seed)
        : key0_(static_cast<std::uint32_t>(seed)),
          key1_(static_cast<std::uint32_t>(seed >> 32)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        if (phase_ == 0) {
            block_ = run_rounds(ctr_, key0_, key1_);
            advance_counter();
        }
        const int i = 2 * phase_;
        phase_ ^= 1;
        return static_cast<std::uint64_t>(block_[i]) |
               (static_cast<std::uint64_t>(block_[i + 1]) << 32);
    }

    // One keyed block, stateless; exposed for known-answer tests.
    static std::array<std::uint32_t, 4> block(const std::array<std::uint32_t, 4>& counter,
                                              std::uint32_t key0, std::uint32_t key1) {
        return run_rounds(counter, key0, key1);
    }

private:
    static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
        const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
        hi = static_cast<std::uint32_t>(p >> 32);
        lo = static_cast<std::uint32_t>(p);
    }

    static std::array<std::uint32_t, 4> run_rounds(std::array<std::uint32_t, 4> c,
                                                   std::uint32_t k0, std::uint32_t k1) {
        for (int r = 0; r < 10; ++r) {
            std::uint32_t hi0, lo0, hi1, lo1;
            mulhilo(0xD2511F53u, c[0], hi0, lo0);
            mulhilo(0xCD9E8D57u, c[2], hi1, lo1);
            c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        return c;
    }

    void advance_counter() {
        for (int i = 0; i < 4; ++i) {
            if (++ctr_[i] != 0) break;
        }
    }

    std::uint32_t key0_, key1_;
    std::array<std::uint32_t, 4> ctr_{{0, 0, 0, 0}};
    std::array<std::uint32_t, 4> block_{};
    int phase_ = 0;
};

namespace detail {
inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
}  // namespace detail

// Child-seed derivation: hash-chain the root seed with up to three tags
// (trial index, purpose, fold index, ...). Child streams depend only on the
// tags, never on evaluation order.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag0,
                                 std::uint64_t tag1 = 0, std::uint64_t tag2 = 0) {
    std::uint64_t h = detail::splitmix64(root);
    h = detail::splitmix64(h ^ tag0);
    h = detail::splitmix64(h ^ tag1);
    h = detail::splitmix64(h ^ tag2);
    return h;
}

// Purpose tags keeping the per-call streams of one estimator run disjoint.
enum SeedPurpose : std::uint64_t {
    kSeedSamples = 0x01,
    kSeedFolds = 0x02,
    kSeedSurrogateMc = 0x03,
    kSeedPoolDraw = 0x04,
};

// Uniform double in [0, 1): 53 mantissa bits of one 64-bit draw.
inline double uniform01(Philox4x32& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform_real(Philox4x32& g, double lo, double hi) {
    return lo + (hi - lo) * uniform01(g);
}

// Standard normal via Box-Muller (cosine branch only, so each draw
// consumes exactly two uniforms).
inline double normal01(Philox4x32& g) {
    const double u1 = 1.0 - uniform01(g);  // (0, 1], keeps log finite
    const double u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Marsaglia-Tsang gamma sampler, shape a > 0, unit scale.
inline double gamma_sample(Philox4x32& g, double a) {
    if (a < 1.0) {
        const double u = uniform01(g);
        return gamma_sample(g, a + 1.0) * std::pow(u, 1.0 / a);
    }
    const double d = a - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        const double x = normal01(g);
        const double t = 1.0 + c * x;
        if (t <= 0.0) continue;
        const double v = t * t * t;
        const double u = uniform01(g);
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

inline double beta_sample(Philox4x32& g, double a, double b) {
    const double x = gamma_sample(g, a);
    const double y = gamma_sample(g, b);
    return x / (x + y);
}

// Unbiased integer in [0, n) by rejection.
inline std::uint64_t bounded_uint(Philox4x32& g, std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
        const std::uint64_t r = g();
        if (r >= threshold) return r % n;
    }
}

// Fisher-Yates shuffle driven by the given stream.
template <typename T>
void shuffle(Philox4x32& g, std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(bounded_uint(g, i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace stackmc
