#pragma once

#include <cstdint>
#include <random>

#include "crlbpf/linalg.hpp"

namespace crlbpf {

// SplitMix64 finalizer; used both as a mixer and for seed derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic per-run / per-stream seed derivation from a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x6a09e667f3bcc909ULL));
}

/// Seeded random source. Normal deviates via Box-Muller so the draw sequence
/// is fixed by this code alone, not the standard library's distribution.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform on [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal();
    Vector normal_vector(int n);

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Draws from N(mean, cov) with the covariance factored once up front.
class GaussianSampler {
public:
    GaussianSampler(Vector mean, const Matrix& cov)
        : mean_(std::move(mean)), factor_(psd_sqrt(cov)) {}

    Vector draw(Rng& rng) const { return mean_ + factor_ * rng.normal_vector(static_cast<int>(mean_.size())); }

private:
    Vector mean_;
    Matrix factor_;
};

}  // namespace crlbpf
