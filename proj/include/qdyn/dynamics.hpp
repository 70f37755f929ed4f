#pragma once

#include "qdyn/core_model.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace qdyn {

/// A well-formed request whose mathematical precondition does not hold for
/// the given parameters (region undefined, infeasible interior point, ...).
class NotApplicableError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// 2 theta_1 == theta_2: the unstable line is vertical and has no slope.
class VerticalLineError : public NotApplicableError {
public:
    using NotApplicableError::NotApplicableError;
};

inline constexpr std::size_t default_budget = 100000;

struct FateOptions {
    double eps_conv = 1e-12;       ///< ||x||_inf below this counts as the origin
    double r_escape = 1e8;         ///< ||x||_inf above this counts as escape
    double region_margin = 1e-12;  ///< strictness margin for the region shortcut
    /// x0 within this (relative) distance of a feasible nonzero fixed point
    /// is reported as that fixed point. Zero disables the proximity test;
    /// exact stationarity is still detected at every step.
    double fixed_point_tol = 1e-6;
};

enum class TrajectoryStop { StepLimit, Converged, Escaped, Overflow };

struct Trajectory {
    std::vector<State> states; ///< x0, H(x0), ...
    TrajectoryStop stop = TrajectoryStop::StepLimit;
};

/// Up to max_steps applications of H. Stops early once ||x||_inf leaves
/// [eps_conv, r_escape], or before the first nonfinite iterate.
Trajectory iterate(const ThetaParams& params, const State& x0, std::size_t max_steps,
                   const FateOptions& options = {});

enum class Region { M1, M2, M3, M4, M5, M6, Mbar1, Mbar2 };

std::string_view to_string(Region region) noexcept;

/// Whether `region` is defined for these rates. M1..M6 need n = 2 plus the
/// matching theta ordering; Mbar1 and Mbar2 always exist.
bool region_applicable(const ThetaParams& params, Region region) noexcept;

/// Closed (non-strict) membership. Throws NotApplicableError if the region
/// is not defined for `params`.
bool region_membership(const ThetaParams& params, const State& x, Region region);

enum class Outcome { ToOrigin, ToInfinity, ToFixedPoint, Undetermined };
enum class Evidence { RegionContainment, NormThreshold, FixedPointProximity, IterationCap };

std::string_view to_string(Outcome outcome) noexcept;
std::string_view to_string(Evidence evidence) noexcept;

struct FateReport {
    Outcome outcome = Outcome::Undetermined;
    /// Index into enumerate_fixed_points (== support bits) for ToFixedPoint.
    std::optional<std::size_t> fixed_point_index;
    std::size_t steps_used = 0;
    State final_state;
    Evidence evidence = Evidence::IterationCap;
};

/// Asymptotic fate of the orbit of x0, using at most `budget` applications
/// of H. The region shortcut (strict interior of Mbar1 / Mbar2) is checked at
/// every step.
FateReport classify_fate(const ThetaParams& params, const State& x0,
                         std::size_t budget = default_budget, const FateOptions& options = {});

/// n = 2 only: slope of the invariant line x2 = s x1 through the origin and
/// the interior fixed point, s = (2 theta_2 - theta_1) / (2 theta_1 - theta_2).
double unstable_line_slope(const ThetaParams& params);

struct RayDirection {
    std::vector<double> direction; ///< unit infinity-norm
};

/// Direction of the invariant ray through the origin and the interior fixed
/// point. Requires the interior fixed point to be feasible.
RayDirection unstable_ray(const ThetaParams& params);

/// n = 2 only: tangent (1, -theta_2 / theta_1) of the stable curve at the
/// interior saddle.
std::array<double, 2> stable_tangent_n2(const ThetaParams& params);

enum class BoundaryFlag {
    None,
    UndeterminedFate, ///< a bracket end never reached a decisive fate
    NonMonotone,      ///< probes inside the bracket disagree with a single flip
    NoCrossing,       ///< the whole vertical line escapes (x1 beyond the curve)
};

std::string_view to_string(BoundaryFlag flag) noexcept;

/// A bracket [x2_low, x2_high] on the vertical line through x1 across which
/// the fate flips from bounded (origin or a fixed point) to escape.
struct BoundarySample {
    double x1 = 0.0;
    double x2_low = 0.0;
    double x2_high = 0.0;
    double width = 0.0;
    BoundaryFlag flag = BoundaryFlag::None;

    bool flagged() const noexcept { return flag != BoundaryFlag::None; }
    double midpoint() const noexcept { return 0.5 * (x2_low + x2_high); }
};

/// n = 2 only: bisects the basin boundary on each vertical line x1 = const
/// until the bracket is no wider than tol. Output follows the grid order.
std::vector<BoundarySample> basin_boundary(const ThetaParams& params, std::span<const double> x1_grid,
                                           double tol, std::size_t budget = default_budget,
                                           const FateOptions& options = {});

} // namespace qdyn
