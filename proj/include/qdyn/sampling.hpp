#pragma once

// Reproducible random sampling for the randomized checks.
//
// SplitMix64 (Steele, Lea, Flood 2014): 64-bit state, output is a fixed
// bijective mix of a Weyl sequence, so the stream is identical on every
// platform. Doubles are built from the top 53 bits directly instead of
// going through <random> distributions, whose output is implementation
// defined.

#include "qdyn/core_model.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace qdyn {

class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Independent child stream seeded from this one.
    constexpr SplitMix64 split() noexcept { return SplitMix64((*this)()); }

    /// Uniform in [0, 1).
    constexpr double uniform01() noexcept {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    /// Uniform in (lo, hi].
    constexpr double uniform_left_open(double lo, double hi) noexcept {
        return hi - (hi - lo) * uniform01();
    }

    /// Uniform integer in [lo, hi].
    constexpr std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) noexcept {
        return lo + (*this)() % (hi - lo + 1);
    }

private:
    std::uint64_t state_;
};

/// theta uniform in (lo, hi]^n.
inline ThetaParams sample_theta(SplitMix64& rng, std::size_t n, double lo = 0.05, double hi = 3.0) {
    std::vector<double> theta(n);
    for (double& t : theta) t = rng.uniform_left_open(lo, hi);
    return ThetaParams(std::move(theta));
}

namespace detail {

inline std::vector<double> positive_direction(SplitMix64& rng, std::size_t n) {
    std::vector<double> d(n);
    for (double& v : d) v = rng.uniform_left_open(0.0, 1.0);
    return d;
}

inline std::vector<double> weighted_sums_of(const std::vector<double>& d) {
    double total = 0.0;
    for (double v : d) total += v;
    std::vector<double> out(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) out[k] = 2.0 * total - d[k];
    return out;
}

} // namespace detail

/// A point c * d with d random positive and c chosen so that every
/// x_k + 2 sum_{i != k} x_i equals `scale` times the tightest 2/theta_k.
/// scale < 1 lands strictly inside Mbar1.
inline State sample_in_mbar1(SplitMix64& rng, const ThetaParams& params, double scale) {
    const auto d = detail::positive_direction(rng, params.size());
    const auto lhs = detail::weighted_sums_of(d);
    double c = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < d.size(); ++k) c = std::min(c, (2.0 / params[k]) / lhs[k]);
    std::vector<double> x(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) x[k] = scale * c * d[k];
    return State(std::move(x));
}

/// Mirror of sample_in_mbar1; scale > 1 lands strictly inside Mbar2.
inline State sample_in_mbar2(SplitMix64& rng, const ThetaParams& params, double scale) {
    const auto d = detail::positive_direction(rng, params.size());
    const auto lhs = detail::weighted_sums_of(d);
    double c = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) c = std::max(c, (2.0 / params[k]) / lhs[k]);
    std::vector<double> x(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) x[k] = scale * c * d[k];
    return State(std::move(x));
}

} // namespace qdyn
