#ifndef PIMD_RNG_HPP
#define PIMD_RNG_HPP

#include <cmath>
#include <cstdint>

namespace pimd {

// Counter-based Gaussian stream. Every draw is a pure function of
// (seed, step, mode, component, salt), so trajectories are reproducible
// regardless of evaluation order.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    // Standard normal draw for a given counter tuple.
    double normal(std::uint64_t step, std::uint32_t mode,
                  std::uint32_t component, std::uint32_t salt) const {
        const std::uint64_t key =
            (static_cast<std::uint64_t>(mode) << 40) ^
            (static_cast<std::uint64_t>(component) << 24) ^
            static_cast<std::uint64_t>(salt);
        const std::uint64_t u0 = mix(seed_ ^ mix(step) ^ key);
        const std::uint64_t u1 = mix(u0 ^ 0x9e3779b97f4a7c15ULL);
        // Box-Muller on two uniforms in (0, 1].
        const double r1 = to_unit(u0);
        const double r2 = to_unit(u1);
        return std::sqrt(-2.0 * std::log(r1)) *
               std::cos(6.283185307179586476925286766559 * r2);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        // splitmix64 finalizer
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static double to_unit(std::uint64_t x) {
        // 53-bit mantissa, shifted into (0, 1]
        return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53;
    }

    std::uint64_t seed_;
};

} // namespace pimd

#endif
