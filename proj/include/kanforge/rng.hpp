#pragma once

#include <cmath>
#include <cstdint>

namespace kf {

// SplitMix64 stream. Chosen over std::mt19937 + distributions because the
// standard distributions are implementation-defined; this generator gives
// bit-identical sequences on every platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform index in [0, n)
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

    // standard normal via Box-Muller; consumes two uniforms per call
    double gaussian() {
        double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

  private:
    std::uint64_t state_;
};

}  // namespace kf
