#pragma once

#include <cstdint>
#include <random>

namespace octotrap {

// All randomness in the project flows through these helpers so that a given
// seed produces bit-identical streams on every platform. std::mt19937_64 is
// fully specified by the standard; the distributions are not, so we convert
// raw draws to doubles ourselves.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(mix(seed)) {}
    Rng(std::uint64_t seed, std::uint64_t stream) : gen_(mix(seed + 0x9e3779b97f4a7c15ULL * (stream + 1))) {}

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t raw() { return gen_(); }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        // splitmix64 finalizer; decorrelates adjacent seeds.
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 gen_;
};

}  // namespace octotrap
