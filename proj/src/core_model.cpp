#include "qdyn/core_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace qdyn {

namespace {

void require_same_dimension(std::size_t expected, std::size_t got) {
    if (expected != got) {
        throw ContractError("dimension mismatch: expected " + std::to_string(expected) +
                            " coordinates, got " + std::to_string(got));
    }
}

void require_finite(std::span<const double> x) {
    for (double v : x) {
        if (!std::isfinite(v)) throw ContractError("coordinates must be finite");
    }
}

} // namespace

SupportMask::SupportMask(std::size_t n, std::uint64_t bits) : n_(n), bits_(bits) {
    if (n > max_dimension) throw ContractError("support mask dimension exceeds 63");
    if (n < 64 && (bits >> n) != 0) throw ContractError("support mask has bits beyond dimension");
}

SupportMask SupportMask::from_indices(std::size_t n, std::span<const std::size_t> indices) {
    std::uint64_t bits = 0;
    for (std::size_t k : indices) {
        if (k >= n) throw ContractError("support index out of range");
        const std::uint64_t bit = std::uint64_t{1} << k;
        if (bits & bit) throw ContractError("support indices must be distinct");
        bits |= bit;
    }
    return {n, bits};
}

std::size_t SupportMask::support_size() const noexcept {
    return static_cast<std::size_t>(std::popcount(bits_));
}

std::vector<std::size_t> SupportMask::indices() const {
    std::vector<std::size_t> out;
    out.reserve(support_size());
    for (std::size_t k = 0; k < n_; ++k) {
        if (contains(k)) out.push_back(k);
    }
    return out;
}

ThetaParams::ThetaParams(std::vector<double> theta) : theta_(std::move(theta)) {
    if (theta_.size() < 2) throw ContractError("n must be ≥ 2");
    for (double t : theta_) {
        if (!std::isfinite(t) || t <= 0.0) throw ContractError("theta entries must be finite and > 0");
    }
}

double ThetaParams::reciprocal_sum() const noexcept {
    double s = 0.0;
    for (double t : theta_) s += 1.0 / t;
    return s;
}

double ThetaParams::reciprocal_sum(const SupportMask& support) const {
    require_same_dimension(size(), support.dimension());
    double s = 0.0;
    for (std::size_t k : support.indices()) s += 1.0 / theta_[k];
    return s;
}

State::State(std::vector<double> x) : x_(std::move(x)) {
    for (double v : x_) {
        if (!std::isfinite(v)) throw ContractError("state coordinates must be finite");
        if (v < 0.0) throw ContractError("state coordinates must be nonnegative");
    }
}

double State::max_norm() const noexcept { return qdyn::max_norm(x_); }

double max_norm(std::span<const double> x) noexcept {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

void apply_into(std::span<const double> theta, std::span<const double> x,
                std::span<double> out) noexcept {
    double total = 0.0;
    for (double v : x) total += v;
    // x_k + 2 sum_{i != k} x_i == 2 total - x_k
    for (std::size_t k = 0; k < x.size(); ++k) {
        out[k] = 0.5 * theta[k] * x[k] * (2.0 * total - x[k]);
    }
}

std::vector<double> apply(const ThetaParams& params, std::span<const double> x) {
    require_same_dimension(params.size(), x.size());
    require_finite(x);
    std::vector<double> out(x.size());
    apply_into(params.values(), x, out);
    return out;
}

State apply(const ThetaParams& params, const State& x) {
    auto out = apply(params, x.values());
    require_finite(out);
    return State(std::move(out));
}

SquareMatrix jacobian(const ThetaParams& params, std::span<const double> x) {
    require_same_dimension(params.size(), x.size());
    require_finite(x);
    const auto n = static_cast<Eigen::Index>(x.size());
    double total = 0.0;
    for (double v : x) total += v;
    SquareMatrix j(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double row = params[k] * x[k];
        for (Eigen::Index c = 0; c < n; ++c) j(k, c) = row;
        j(k, k) = params[k] * total;
    }
    return j;
}

} // namespace qdyn
