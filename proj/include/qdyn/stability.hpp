#pragma once

#include "qdyn/core_model.hpp"
#include "qdyn/fixed_points.hpp"

#include <complex>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace qdyn {

/// Raised when the eigenvalue iteration fails to converge within its sweep cap.
class EigenSolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double default_unit_tolerance = 1e-9;

/// Eigenvalues of a real matrix, sorted by descending modulus, ties broken
/// by ascending argument. Conjugate pairs appear together.
struct Spectrum {
    std::vector<std::complex<double>> eigenvalues;
};

enum class StabilityTag { Attracting, Repelling, Saddle, Nonhyperbolic };

struct StabilityClass {
    StabilityTag tag;
    std::size_t inside = 0;  ///< |lambda| < 1 - tol
    std::size_t outside = 0; ///< |lambda| > 1 + tol
    std::size_t on_unit = 0; ///< |lambda| within tol of 1
};

std::string_view to_string(StabilityTag tag) noexcept;

/// Dense nonsymmetric eigenvalues (Hessenberg reduction + shifted QR),
/// at most 30 n sweeps.
Spectrum spectrum_of(const SquareMatrix& m);

Spectrum spectrum_at(const ThetaParams& params, const FixedPoint& point);

StabilityClass classify(const Spectrum& spectrum, double tol = default_unit_tolerance);

enum class RootLocation {
    OneRootAboveOne_OtherInsideUnit,
    OneRootAboveOne_OtherOutsideUnit,
    NotApplicable,
};

std::string_view to_string(RootLocation loc) noexcept;

/// Location of the roots of F(l) = l^2 + B l + C when F(1) < 0: one root
/// lies in (1, inf) and the other is inside the unit disc iff F(-1) > 0.
RootLocation root_location(double b, double c) noexcept;

/// Characteristic polynomial l^2 + B l + C of the Jacobian at the n = 2
/// interior fixed point, with F(1) and F(-1) in factored form.
struct CharPolyN2 {
    double b;
    double c;
    double f_at_one;
    double f_at_minus_one;
};

CharPolyN2 char_poly_coeffs_n2(const ThetaParams& params);

/// |det(J(x) - 2 I)| / ||J(x)||_inf^n. Zero in exact arithmetic at every
/// fixed point other than the origin; passing the origin throws.
double eigenvalue_two_residual(const ThetaParams& params, const FixedPoint& point);

/// True iff some i in the support satisfies
/// theta_i * sum_{j in support} 1/theta_j == (2 (n - r) - 1) / 2
/// to relative 1e-12. At such parameters the fixed point with this support
/// has a unit multiplier.
bool nonhyperbolic_condition(const ThetaParams& params, const SupportMask& support);

} // namespace qdyn
