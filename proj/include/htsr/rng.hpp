#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace htsr {

/// Seeded random stream. All randomness in the library flows through this
/// class so that runs are reproducible bit-for-bit: mt19937_64 for the raw
/// stream and Box-Muller for normals (std::normal_distribution is
/// implementation-defined and would break cross-toolchain determinism).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; consumes two uniforms, the sine
    /// branch is discarded so the stream position is input-independent.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log1p(-u1));
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Derive an independent child seed from (master, stream index).
    /// splitmix64 finalizer over the combined words; adding streams never
    /// perturbs earlier ones.
    static std::uint64_t derive(std::uint64_t master, std::uint64_t stream) {
        std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace htsr
