#include "qdyn/fixed_points.hpp"

#include <cmath>
#include <string>

namespace qdyn {

std::vector<double> interior_coordinates(std::span<const double> theta) {
    const std::size_t m = theta.size();
    if (m == 0) return {};
    if (m == 1) return {2.0 / theta[0]};

    double reciprocal_total = 0.0;
    for (double t : theta) reciprocal_total += 1.0 / t;

    const double md = static_cast<double>(m);
    std::vector<double> x(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double own = 1.0 / theta[i];
        x[i] = (4.0 * (reciprocal_total - own) - (4.0 * md - 6.0) * own) / (2.0 * md - 1.0);
    }
    return x;
}

FixedPoint fixed_point_for_support(const ThetaParams& params, const SupportMask& support) {
    const std::size_t n = params.size();
    if (support.dimension() != n) throw ContractError("support mask dimension does not match theta");

    const auto idx = support.indices();
    std::vector<double> sub;
    sub.reserve(idx.size());
    for (std::size_t k : idx) sub.push_back(params[k]);
    const auto sub_x = interior_coordinates(sub);

    FixedPoint fp{std::vector<double>(n, 0.0), support, true, 0.0};
    for (std::size_t j = 0; j < idx.size(); ++j) {
        fp.coords[idx[j]] = sub_x[j];
        if (!(sub_x[j] > 0.0)) fp.feasible = false;
    }
    const auto image = qdyn::apply(params, fp.coords);
    for (std::size_t k = 0; k < n; ++k) {
        fp.residual = std::max(fp.residual, std::abs(image[k] - fp.coords[k]));
    }
    return fp;
}

FixedPoint interior_fixed_point(const ThetaParams& params) {
    return fixed_point_for_support(params, SupportMask::full(params.size()));
}

std::vector<FixedPoint> enumerate_fixed_points(const ThetaParams& params) {
    const std::size_t n = params.size();
    if (n > max_enumeration_dimension) {
        throw ContractError("enumeration supports n ≤ " + std::to_string(max_enumeration_dimension) +
                            ", got n = " + std::to_string(n));
    }
    const std::uint64_t count = std::uint64_t{1} << n;
    std::vector<FixedPoint> out;
    out.reserve(count);
    for (std::uint64_t bits = 0; bits < count; ++bits) {
        out.push_back(fixed_point_for_support(params, SupportMask(n, bits)));
    }
    return out;
}

double coefficient_determinant(std::size_t n) {
    if (n == 0) throw ContractError("coefficient_determinant requires n ≥ 1");
    const double magnitude = 2.0 * static_cast<double>(n) - 1.0;
    return (n % 2 == 1) ? magnitude : -magnitude;
}

} // namespace qdyn
