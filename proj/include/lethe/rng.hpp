#ifndef LETHE_RNG_HPP
#define LETHE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace lethe {

// Deterministic draws on top of std::mt19937_64. The standard engine is
// portable; the standard <random> distributions are not, so the few draw
// kinds we need are implemented here and used everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, n). Rejection sampling, unbiased.
    std::size_t uniform_index(std::size_t n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % bound);
    }

    // Uniform real in [0, 1) with 53 random bits.
    double uniform_real() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_real();
        double u2 = uniform_real();
        while (u1 <= 0.0) u1 = uniform_real();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Fisher-Yates; std::shuffle is implementation-defined, this is not.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Sub-seed derivation offsets. One 64-bit experiment seed drives a run;
// each consumer offsets it so that draws never alias across stages.
// Documented in the README config reference.
namespace seed_offset {
inline constexpr std::uint64_t kSplit = 101;
inline constexpr std::uint64_t kRelabel = 202;
inline constexpr std::uint64_t kShadowBase = 303;  // shadow s uses kShadowBase + s
inline constexpr std::uint64_t kNoise = 404;
inline constexpr std::uint64_t kAttacker = 505;
inline constexpr std::uint64_t kSynth = 606;
}  // namespace seed_offset

}  // namespace lethe

#endif  // LETHE_RNG_HPP
