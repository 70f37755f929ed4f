#include "qdyn/stability.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace qdyn {

namespace {

// Parlett-Reinsch balancing by powers of two. Similarity transform, so the
// spectrum is unchanged; it only evens out row/column norms before QR.
void balance(SquareMatrix& a) {
    const Eigen::Index n = a.rows();
    constexpr double radix = 2.0;
    constexpr double sqr_radix = radix * radix;
    bool done = false;
    while (!done) {
        done = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            double r = 0.0;
            double c = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(a(j, i));
                r += std::abs(a(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= sqr_radix;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= sqr_radix;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                a.row(i) /= f;
                a.col(i) *= f;
            }
        }
    }
}

} // namespace

std::string_view to_string(StabilityTag tag) noexcept {
    switch (tag) {
    case StabilityTag::Attracting: return "attracting";
    case StabilityTag::Repelling: return "repelling";
    case StabilityTag::Saddle: return "saddle";
    case StabilityTag::Nonhyperbolic: return "nonhyperbolic";
    }
    return "unknown";
}

std::string_view to_string(RootLocation loc) noexcept {
    switch (loc) {
    case RootLocation::OneRootAboveOne_OtherInsideUnit: return "one_root_above_one_other_inside_unit";
    case RootLocation::OneRootAboveOne_OtherOutsideUnit: return "one_root_above_one_other_outside_unit";
    case RootLocation::NotApplicable: return "not_applicable";
    }
    return "unknown";
}

Spectrum spectrum_of(const SquareMatrix& m) {
    if (m.rows() != m.cols()) throw ContractError("spectrum_of requires a square matrix");
    if (!m.allFinite()) throw ContractError("spectrum_of requires finite entries");

    SquareMatrix a = m;
    balance(a);

    Eigen::EigenSolver<SquareMatrix> solver;
    solver.setMaxIterations(30 * std::max<Eigen::Index>(a.rows(), 1));
    solver.compute(a, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw EigenSolverError("eigenvalue iteration did not converge within 30n sweeps");
    }

    Spectrum s;
    const auto& ev = solver.eigenvalues();
    s.eigenvalues.assign(ev.begin(), ev.end());
    std::sort(s.eigenvalues.begin(), s.eigenvalues.end(),
              [](const std::complex<double>& lhs, const std::complex<double>& rhs) {
                  const double ml = std::abs(lhs);
                  const double mr = std::abs(rhs);
                  if (ml != mr) return ml > mr;
                  return std::arg(lhs) < std::arg(rhs);
              });
    return s;
}

Spectrum spectrum_at(const ThetaParams& params, const FixedPoint& point) {
    return spectrum_of(jacobian(params, point.coords));
}

StabilityClass classify(const Spectrum& spectrum, double tol) {
    if (!(tol > 0.0)) throw ContractError("unit-circle tolerance must be > 0");
    StabilityClass out{StabilityTag::Nonhyperbolic};
    for (const auto& lambda : spectrum.eigenvalues) {
        const double modulus = std::abs(lambda);
        if (modulus < 1.0 - tol) {
            ++out.inside;
        } else if (modulus > 1.0 + tol) {
            ++out.outside;
        } else {
            ++out.on_unit;
        }
    }
    if (out.on_unit > 0) {
        out.tag = StabilityTag::Nonhyperbolic;
    } else if (out.outside == 0) {
        out.tag = StabilityTag::Attracting;
    } else if (out.inside == 0) {
        out.tag = StabilityTag::Repelling;
    } else {
        out.tag = StabilityTag::Saddle;
    }
    return out;
}

RootLocation root_location(double b, double c) noexcept {
    const double f_one = 1.0 + b + c;
    if (!(f_one < 0.0)) return RootLocation::NotApplicable;
    const double f_minus_one = 1.0 - b + c;
    return f_minus_one > 0.0 ? RootLocation::OneRootAboveOne_OtherInsideUnit
                             : RootLocation::OneRootAboveOne_OtherOutsideUnit;
}

CharPolyN2 char_poly_coeffs_n2(const ThetaParams& params) {
    if (params.size() != 2) throw ContractError("char_poly_coeffs_n2 requires n = 2");
    const double t1 = params[0];
    const double t2 = params[1];
    const double sum = t1 + t2;
    const double prod = t1 * t2;
    CharPolyN2 out{};
    out.b = -2.0 * sum * sum / (3.0 * prod);
    out.c = (4.0 * sum * sum - 4.0 * (5.0 * prod - 2.0 * t1 * t1 - 2.0 * t2 * t2)) / (9.0 * prod);
    out.f_at_one = (2.0 * t1 - t2) * (t1 - 2.0 * t2) / (3.0 * prod);
    out.f_at_minus_one = (2.0 * t1 * t1 + 2.0 * t2 * t2 + prod) / prod;
    return out;
}

double eigenvalue_two_residual(const ThetaParams& params, const FixedPoint& point) {
    if (point.support.empty()) {
        throw ContractError("eigenvalue_two_residual is undefined at the origin");
    }
    const SquareMatrix j = jacobian(params, point.coords);
    const auto n = j.rows();
    const double norm = j.cwiseAbs().rowwise().sum().maxCoeff();
    const SquareMatrix shifted = j - 2.0 * SquareMatrix::Identity(n, n);
    const double det = shifted.partialPivLu().determinant();
    return std::abs(det) / std::pow(norm, static_cast<double>(n));
}

bool nonhyperbolic_condition(const ThetaParams& params, const SupportMask& support) {
    if (support.dimension() != params.size()) {
        throw ContractError("support mask dimension does not match theta");
    }
    if (support.empty()) throw ContractError("nonhyperbolic_condition requires a nonempty support");
    const double restricted = params.reciprocal_sum(support);
    const double target = (2.0 * static_cast<double>(support.support_size()) - 1.0) / 2.0;
    for (std::size_t i : support.indices()) {
        if (std::abs(params[i] * restricted - target) <= 1e-12 * target) return true;
    }
    return false;
}

} // namespace qdyn
