#pragma once

#include "qdyn/core_model.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace qdyn {

/// Largest dimension accepted by enumerate_fixed_points (2^20 points).
inline constexpr std::size_t max_enumeration_dimension = 20;

/// One algebraic fixed point of H. Coordinates outside the support are
/// exactly zero. Infeasible points (a negative support coordinate) are kept,
/// so `coords` is a plain vector rather than a State.
struct FixedPoint {
    std::vector<double> coords;
    SupportMask support;
    bool feasible = false;
    double residual = 0.0; ///< ||H(x) - x||_inf
};

/// Solution of x_k + 2 sum_{i != k} x_i = 2 / theta_k over the given rates,
/// in reciprocal-sum form. A single rate yields 2 / theta.
std::vector<double> interior_coordinates(std::span<const double> theta);

FixedPoint interior_fixed_point(const ThetaParams& params);

/// Fixed point whose nonzero coordinates are exactly those in `support`.
/// The empty support gives the origin.
FixedPoint fixed_point_for_support(const ThetaParams& params, const SupportMask& support);

/// All 2^n fixed points, ordered by support mask read as a binary number
/// (bit k = coordinate k). Entry i therefore has support bits == i.
std::vector<FixedPoint> enumerate_fixed_points(const ThetaParams& params);

/// Determinant of the n x n matrix with 1 on the diagonal and 2 elsewhere:
/// (-1)^(n-1) (2n - 1).
double coefficient_determinant(std::size_t n);

} // namespace qdyn
