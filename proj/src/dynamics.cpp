#include "qdyn/dynamics.hpp"

#include "qdyn/fixed_points.hpp"
#include "qdyn/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qdyn {

namespace {

bool all_finite(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

// x_k + 2 sum_{i != k} x_i for every k.
std::vector<double> weighted_sums(std::span<const double> x) {
    double total = 0.0;
    for (double v : x) total += v;
    std::vector<double> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = 2.0 * total - x[k];
    return out;
}

bool strictly_inside_mbar1(const ThetaParams& params, std::span<const double> x, double margin) {
    const auto lhs = weighted_sums(x);
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(lhs[k] < (2.0 / params[k]) * (1.0 - margin))) return false;
    }
    return true;
}

bool strictly_inside_mbar2(const ThetaParams& params, std::span<const double> x, double margin) {
    const auto lhs = weighted_sums(x);
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(lhs[k] > (2.0 / params[k]) * (1.0 + margin))) return false;
    }
    return true;
}

double distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
    return d;
}

std::optional<std::size_t> nearest_feasible(const std::vector<FixedPoint>& points,
                                            std::span<const double> x, double rel_tol) {
    std::optional<std::size_t> best;
    double best_distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (!points[i].feasible) continue;
        const double d = distance(points[i].coords, x);
        if (d <= rel_tol * std::max(1.0, max_norm(points[i].coords)) && d < best_distance) {
            best = i;
            best_distance = d;
        }
    }
    return best;
}

void require_n2(const ThetaParams& params, const char* what) {
    if (params.size() != 2) throw ContractError(std::string(what) + " requires n = 2");
}

} // namespace

std::string_view to_string(Region region) noexcept {
    switch (region) {
    case Region::M1: return "M1";
    case Region::M2: return "M2";
    case Region::M3: return "M3";
    case Region::M4: return "M4";
    case Region::M5: return "M5";
    case Region::M6: return "M6";
    case Region::Mbar1: return "Mbar1";
    case Region::Mbar2: return "Mbar2";
    }
    return "unknown";
}

std::string_view to_string(Outcome outcome) noexcept {
    switch (outcome) {
    case Outcome::ToOrigin: return "to_origin";
    case Outcome::ToInfinity: return "to_infinity";
    case Outcome::ToFixedPoint: return "to_fixed_point";
    case Outcome::Undetermined: return "undetermined";
    }
    return "unknown";
}

std::string_view to_string(Evidence evidence) noexcept {
    switch (evidence) {
    case Evidence::RegionContainment: return "region_containment";
    case Evidence::NormThreshold: return "norm_threshold";
    case Evidence::FixedPointProximity: return "fixed_point_proximity";
    case Evidence::IterationCap: return "iteration_cap";
    }
    return "unknown";
}

std::string_view to_string(BoundaryFlag flag) noexcept {
    switch (flag) {
    case BoundaryFlag::None: return "none";
    case BoundaryFlag::UndeterminedFate: return "undetermined_fate";
    case BoundaryFlag::NonMonotone: return "non_monotone";
    case BoundaryFlag::NoCrossing: return "no_crossing";
    }
    return "unknown";
}

Trajectory iterate(const ThetaParams& params, const State& x0, std::size_t max_steps,
                   const FateOptions& options) {
    if (x0.size() != params.size()) throw ContractError("dimension mismatch between theta and x0");
    Trajectory traj;
    traj.states.push_back(x0);
    std::vector<double> next(x0.size());
    for (std::size_t step = 0;; ++step) {
        const State& x = traj.states.back();
        const double norm = x.max_norm();
        if (norm < options.eps_conv) {
            traj.stop = TrajectoryStop::Converged;
            break;
        }
        if (norm > options.r_escape) {
            traj.stop = TrajectoryStop::Escaped;
            break;
        }
        if (step == max_steps) {
            traj.stop = TrajectoryStop::StepLimit;
            break;
        }
        apply_into(params.values(), x.values(), next);
        if (!all_finite(next)) {
            traj.stop = TrajectoryStop::Overflow;
            break;
        }
        traj.states.emplace_back(next);
    }
    return traj;
}

bool region_applicable(const ThetaParams& params, Region region) noexcept {
    if (region == Region::Mbar1 || region == Region::Mbar2) return true;
    if (params.size() != 2) return false;
    const double t1 = params[0];
    const double t2 = params[1];
    switch (region) {
    case Region::M1:
    case Region::M2: return t1 < 2.0 * t2 && t2 < 2.0 * t1;
    case Region::M3:
    case Region::M4: return t1 > 2.0 * t2;
    case Region::M5:
    case Region::M6: return t2 > 2.0 * t1;
    default: return false;
    }
}

bool region_membership(const ThetaParams& params, const State& x, Region region) {
    if (x.size() != params.size()) throw ContractError("dimension mismatch between theta and x");
    if (!region_applicable(params, region)) {
        throw NotApplicableError(std::string("region ") + std::string(to_string(region)) +
                                 " is not defined for these theta values");
    }
    const auto lhs = weighted_sums(x.values());
    auto below = [&](std::size_t k) { return lhs[k] <= 2.0 / params[k]; };
    auto above = [&](std::size_t k) { return lhs[k] >= 2.0 / params[k]; };

    switch (region) {
    case Region::M1: return below(0) && below(1);
    case Region::M2: return above(0) && above(1);
    case Region::M3: return below(0);
    case Region::M4: return above(1);
    case Region::M5: return below(1);
    case Region::M6: return above(0);
    case Region::Mbar1:
        for (std::size_t k = 0; k < x.size(); ++k) {
            if (!below(k)) return false;
        }
        return true;
    case Region::Mbar2:
        for (std::size_t k = 0; k < x.size(); ++k) {
            if (!above(k)) return false;
        }
        return true;
    }
    return false;
}

FateReport classify_fate(const ThetaParams& params, const State& x0, std::size_t budget,
                         const FateOptions& options) {
    if (budget < 1) throw ContractError("fate budget must be ≥ 1");
    if (x0.size() != params.size()) throw ContractError("dimension mismatch between theta and x0");

    const auto fixed = enumerate_fixed_points(params);

    FateReport report;
    report.final_state = x0;

    if (x0.max_norm() >= options.eps_conv && options.fixed_point_tol > 0.0) {
        if (auto idx = nearest_feasible(fixed, x0.values(), options.fixed_point_tol)) {
            report.outcome = Outcome::ToFixedPoint;
            report.fixed_point_index = idx;
            report.evidence = Evidence::FixedPointProximity;
            return report;
        }
    }

    constexpr double stationary_tol = 4.0 * std::numeric_limits<double>::epsilon();
    std::vector<double> x(x0.values().begin(), x0.values().end());
    std::vector<double> next(x.size());

    auto finish = [&](Outcome outcome, Evidence evidence, std::size_t steps) {
        report.outcome = outcome;
        report.evidence = evidence;
        report.steps_used = steps;
        report.final_state = State(x);
        return report;
    };

    for (std::size_t step = 0;; ++step) {
        const double norm = max_norm(x);
        if (norm < options.eps_conv) return finish(Outcome::ToOrigin, Evidence::NormThreshold, step);
        if (norm > options.r_escape) return finish(Outcome::ToInfinity, Evidence::NormThreshold, step);
        if (strictly_inside_mbar1(params, x, options.region_margin)) {
            return finish(Outcome::ToOrigin, Evidence::RegionContainment, step);
        }
        if (strictly_inside_mbar2(params, x, options.region_margin)) {
            return finish(Outcome::ToInfinity, Evidence::RegionContainment, step);
        }

        apply_into(params.values(), x, next);
        if (!all_finite(next)) {
            // Overflowed before crossing r_escape; keep the last finite iterate.
            return finish(Outcome::ToInfinity, Evidence::NormThreshold, step);
        }
        if (distance(next, x) <= stationary_tol * std::max(1.0, norm)) {
            if (auto idx = nearest_feasible(fixed, x, 1e-9)) {
                report.fixed_point_index = idx;
                return finish(Outcome::ToFixedPoint, Evidence::FixedPointProximity, step);
            }
        }
        if (step == budget) return finish(Outcome::Undetermined, Evidence::IterationCap, step);
        x.swap(next);
    }
}

double unstable_line_slope(const ThetaParams& params) {
    require_n2(params, "unstable_line_slope");
    const double t1 = params[0];
    const double t2 = params[1];
    const double denom = 2.0 * t1 - t2;
    if (denom == 0.0) throw VerticalLineError("2 theta_1 == theta_2: the unstable line is x1 = 0");
    return (2.0 * t2 - t1) / denom;
}

RayDirection unstable_ray(const ThetaParams& params) {
    const FixedPoint interior = interior_fixed_point(params);
    if (!interior.feasible) {
        throw NotApplicableError("interior fixed point is infeasible; no unstable ray in the orthant");
    }
    const double scale = max_norm(interior.coords);
    RayDirection ray{interior.coords};
    for (double& v : ray.direction) v /= scale;
    return ray;
}

std::array<double, 2> stable_tangent_n2(const ThetaParams& params) {
    require_n2(params, "stable_tangent_n2");
    const FixedPoint interior = interior_fixed_point(params);
    if (!interior.feasible) throw NotApplicableError("interior fixed point is infeasible");
    if (classify(spectrum_at(params, interior)).tag != StabilityTag::Saddle) {
        throw NotApplicableError("interior fixed point is not a saddle");
    }
    return {1.0, -params[1] / params[0]};
}

namespace {

enum class Side { Below, Above, Unknown };

Side side_of(const ThetaParams& params, double x1, double x2, std::size_t budget,
             const FateOptions& options) {
    const FateReport fate = classify_fate(params, State{x1, x2}, budget, options);
    switch (fate.outcome) {
    case Outcome::ToInfinity: return Side::Above;
    case Outcome::ToOrigin:
    case Outcome::ToFixedPoint: return Side::Below;
    case Outcome::Undetermined: return Side::Unknown;
    }
    return Side::Unknown;
}

BoundarySample bisect_line(const ThetaParams& params, double x1, double tol, std::size_t budget,
                           const FateOptions& options) {
    BoundarySample sample;
    sample.x1 = x1;
    auto close = [&](double lo, double hi, BoundaryFlag flag) {
        sample.x2_low = lo;
        sample.x2_high = hi;
        sample.width = hi - lo;
        sample.flag = flag;
        return sample;
    };

    double lo = 0.0;
    const Side at_axis = side_of(params, x1, lo, budget, options);
    if (at_axis == Side::Above) return close(0.0, 0.0, BoundaryFlag::NoCrossing);
    if (at_axis == Side::Unknown) return close(0.0, 0.0, BoundaryFlag::UndeterminedFate);

    double hi = std::max(2.0 / params[1], 1.0);
    Side at_hi = side_of(params, x1, hi, budget, options);
    for (int doublings = 0; at_hi == Side::Below && doublings < 60; ++doublings) {
        lo = hi;
        hi *= 2.0;
        at_hi = side_of(params, x1, hi, budget, options);
    }
    if (at_hi != Side::Above) return close(lo, hi, BoundaryFlag::UndeterminedFate);

    // Probe three interior points; a single flip means Below* Above*.
    std::array<double, 3> probes{};
    std::array<Side, 3> sides{};
    for (std::size_t i = 0; i < probes.size(); ++i) {
        probes[i] = lo + (hi - lo) * 0.25 * static_cast<double>(i + 1);
        sides[i] = side_of(params, x1, probes[i], budget, options);
        if (sides[i] == Side::Unknown) return close(lo, hi, BoundaryFlag::UndeterminedFate);
    }
    for (std::size_t i = 1; i < sides.size(); ++i) {
        if (sides[i - 1] == Side::Above && sides[i] == Side::Below) {
            return close(lo, hi, BoundaryFlag::NonMonotone);
        }
    }
    double new_lo = lo;
    double new_hi = hi;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        if (sides[i] == Side::Below) new_lo = probes[i];
    }
    for (std::size_t i = probes.size(); i-- > 0;) {
        if (sides[i] == Side::Above) new_hi = probes[i];
    }
    lo = new_lo;
    hi = new_hi;

    while (hi - lo > tol) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break; // bracket at floating-point resolution
        switch (side_of(params, x1, mid, budget, options)) {
        case Side::Below: lo = mid; break;
        case Side::Above: hi = mid; break;
        case Side::Unknown: return close(lo, hi, BoundaryFlag::UndeterminedFate);
        }
    }
    return close(lo, hi, BoundaryFlag::None);
}

} // namespace

std::vector<BoundarySample> basin_boundary(const ThetaParams& params, std::span<const double> x1_grid,
                                           double tol, std::size_t budget,
                                           const FateOptions& options) {
    require_n2(params, "basin_boundary");
    if (!(tol > 0.0)) throw ContractError("bisection tolerance must be > 0");
    for (double x1 : x1_grid) {
        if (!std::isfinite(x1) || x1 < 0.0) throw ContractError("x1 grid values must be finite and ≥ 0");
    }
    // Proximity would swallow every probe near the interior saddle.
    FateOptions fate_options = options;
    fate_options.fixed_point_tol = 0.0;

    std::vector<BoundarySample> out;
    out.reserve(x1_grid.size());
    for (double x1 : x1_grid) out.push_back(bisect_line(params, x1, tol, budget, fate_options));
    return out;
}

} // namespace qdyn
