#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace levychaos {

// ============================================================================
// Counter-based streams
// ============================================================================
//
// Every random draw is mix(key + (counter + 1) * golden). The key is derived
// from (master seed, replica index, purpose), so a replica's stream does not
// depend on which thread runs it or in what order.

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

enum class Purpose : std::uint64_t {
    disorder = 1,
    cloud = 2,
    refine = 3,
    walk = 4,
    gibbs = 5,
    bootstrap = 6,
    oracle = 7,
    small_jumps = 8,
    config = 9,
};

[[nodiscard]] constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t replica,
                                                 std::uint64_t purpose) noexcept {
    std::uint64_t k = mix64(seed + kGolden);
    k = mix64(k ^ (replica * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
    k = mix64(k ^ (purpose * 0xAEF17502108EF2D9ULL + 0x5851F42D4C957F2DULL));
    return k;
}

[[nodiscard]] constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t replica,
                                                 Purpose purpose) noexcept {
    return derive_key(seed, replica, static_cast<std::uint64_t>(purpose));
}

// Uniform in the open interval (0, 1) from the top 53 bits.
[[nodiscard]] constexpr double to_open_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Random access: the i-th draw of the stream with the given key.
[[nodiscard]] constexpr std::uint64_t stream_at(std::uint64_t key, std::uint64_t i) noexcept {
    return mix64(key + (i + 1) * kGolden);
}

// Satisfies UniformRandomBitGenerator so std distributions can consume it.
class CounterRng {
public:
    using result_type = std::uint64_t;

    constexpr explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
        : key_(key), counter_(counter) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept { return stream_at(key_, counter_++); }

    // (0, 1), never 0 or 1.
    double uniform() noexcept { return to_open_unit((*this)()); }

    double normal() noexcept {
        // Box-Muller; one value per call keeps the stream position simple.
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }
    [[nodiscard]] constexpr std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace levychaos
