#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qdyn/dynamics.hpp"
#include "qdyn/fixed_points.hpp"
#include "qdyn/sampling.hpp"
#include "qdyn/stability.hpp"

#include <array>
#include <cmath>

using namespace qdyn;

namespace {

// Point s * d on the positive quadrant with weights . d equal to scale * bound.
State scaled_to(const std::array<double, 2>& weights, double bound, double scale, SplitMix64& rng) {
    const double d1 = rng.uniform_left_open(0.0, 1.0);
    const double d2 = rng.uniform_left_open(0.0, 1.0);
    const double s = scale * bound / (weights[0] * d1 + weights[1] * d2);
    return State{s * d1, s * d2};
}

} // namespace

TEST_CASE("iterate") {
    const ThetaParams unit{1, 1};
    const auto down = iterate(unit, State{0.1, 0.1}, 50);
    CHECK(down.stop == TrajectoryStop::Converged);
    CHECK(down.states.back().max_norm() < 1e-12);
    CHECK(down.states.size() <= 51);

    const auto up = iterate(unit, State{2, 2}, 50);
    CHECK(up.stop == TrajectoryStop::Escaped);
    CHECK(up.states.back().max_norm() > 1e8);

    const ThetaParams p{0.4, 0.6};
    const auto e1 = iterate(p, State{5, 0}, 20);
    CHECK(e1.stop == TrajectoryStop::StepLimit);
    CHECK(e1.states.size() == 21);
    for (const auto& s : e1.states) CHECK(s == State{5, 0});

    // Overflow before r_escape is noticed: the nonfinite iterate is dropped.
    FateOptions huge;
    huge.r_escape = 1e300;
    const auto over = iterate(unit, State{1e100, 1e100}, 10, huge);
    CHECK(over.stop == TrajectoryStop::Overflow);
    CHECK(over.states.size() == 2);

    CHECK_THROWS_AS(iterate(unit, State{1, 1, 1}, 5), ContractError);
}

TEST_CASE("region membership") {
    const ThetaParams p{0.4, 0.6};
    CHECK(region_membership(p, State{0.1, 0.1}, Region::M1));
    CHECK_FALSE(region_membership(p, State{0.1, 0.1}, Region::M2));
    // The interior point sits on both boundary lines.
    const double shrink = 1.0 - 1e-12;
    const double grow = 1.0 + 1e-12;
    CHECK(region_membership(p, State{shrink * 5.0 / 9.0, shrink * 20.0 / 9.0}, Region::M1));
    CHECK(region_membership(p, State{grow * 5.0 / 9.0, grow * 20.0 / 9.0}, Region::M2));
    CHECK(region_membership(p, State{3, 3}, Region::Mbar2));
    CHECK(region_membership(ThetaParams{1, 1, 1}, State{0, 0, 0}, Region::Mbar1));

    CHECK_THROWS_AS(region_membership(p, State{0.1, 0.1}, Region::M3), NotApplicableError);
    CHECK_THROWS_AS(region_membership(p, State{0.1, 0.1}, Region::M6), NotApplicableError);
    CHECK_THROWS_AS(region_membership(ThetaParams{1, 1, 1}, State{0, 0, 0}, Region::M1), NotApplicableError);

    const ThetaParams wide{0.8, 0.2};
    CHECK(region_applicable(wide, Region::M3));
    CHECK(region_applicable(wide, Region::M4));
    CHECK_FALSE(region_applicable(wide, Region::M5));
    CHECK(region_membership(wide, State{1, 0.5}, Region::M3));
    CHECK(region_membership(wide, State{0, 11}, Region::M4));
}

TEST_CASE("classify fate") {
    const ThetaParams p{0.4, 0.6};
    const auto low = classify_fate(p, State{0.1, 0.1}, 10);
    CHECK(low.outcome == Outcome::ToOrigin);
    CHECK(low.evidence == Evidence::RegionContainment);
    CHECK(low.steps_used == 0);

    const auto high = classify_fate(p, State{3, 3}, 10);
    CHECK(high.outcome == Outcome::ToInfinity);
    CHECK(high.evidence == Evidence::RegionContainment);

    const auto fixed = classify_fate(p, State{5.0 / 9.0, 20.0 / 9.0}, 10);
    CHECK(fixed.outcome == Outcome::ToFixedPoint);
    CHECK(fixed.fixed_point_index == 3u);

    const auto origin = classify_fate(p, State{0, 0}, 1);
    CHECK(origin.outcome == Outcome::ToOrigin);

    // E1 exactly: stationary, found even with proximity disabled.
    FateOptions exact;
    exact.fixed_point_tol = 0.0;
    const auto e1 = classify_fate(p, State{5, 0}, 10, exact);
    CHECK(e1.outcome == Outcome::ToFixedPoint);
    CHECK(e1.fixed_point_index == 1u);

    // Close to the basin boundary the orbit needs several steps; a tiny budget gives up.
    const State between{2.0, 0.835};
    CHECK_FALSE(region_membership(p, between, Region::M1));
    CHECK_FALSE(region_membership(p, between, Region::M2));
    const auto undetermined = classify_fate(p, between, 1, exact);
    CHECK(undetermined.outcome == Outcome::Undetermined);
    CHECK(undetermined.evidence == Evidence::IterationCap);
    const auto resolved = classify_fate(p, between, default_budget, exact);
    CHECK(resolved.outcome != Outcome::Undetermined);
    CHECK(resolved.steps_used > 0);

    CHECK_THROWS_AS(classify_fate(p, State{0.1, 0.1}, 0), ContractError);
}

TEST_CASE("unstable line and ray") {
    CHECK(unstable_line_slope(ThetaParams{0.4, 0.6}) == doctest::Approx(4.0));
    CHECK(unstable_line_slope(ThetaParams{1, 1}) == doctest::Approx(1.0));
    CHECK(unstable_line_slope(ThetaParams{0.6, 0.4}) == doctest::Approx(0.25));
    CHECK_THROWS_AS(unstable_line_slope(ThetaParams{1, 2}), VerticalLineError);
    CHECK_THROWS_AS(unstable_line_slope(ThetaParams{1, 1, 1}), ContractError);

    const auto sym = unstable_ray(ThetaParams{1, 1, 1}).direction;
    for (double v : sym) CHECK(v == doctest::Approx(1.0));

    const auto r2 = unstable_ray(ThetaParams{0.4, 0.6}).direction;
    CHECK(r2[1] == doctest::Approx(1.0));
    CHECK(r2[1] / r2[0] == doctest::Approx(4.0));

    const ThetaParams p{1, 1, 1.5};
    const auto dir = unstable_ray(p).direction;
    const auto image = qdyn::apply(p, State(dir));
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = 0; b < 3; ++b) {
            CHECK(std::abs(image[a] / image[b] - dir[a] / dir[b]) <= 1e-12 * (dir[a] / dir[b]));
        }
    }
    CHECK_THROWS_AS(unstable_ray(ThetaParams{0.8, 0.2}), NotApplicableError);
}

TEST_CASE("stable tangent is the second eigenvector at the interior saddle") {
    for (const auto& theta : {std::array<double, 2>{0.4, 0.6}, {1.0, 1.0}, {0.5, 0.8}}) {
        const ThetaParams p{theta[0], theta[1]};
        const auto v = stable_tangent_n2(p);
        CHECK(v[0] == 1.0);
        CHECK(v[1] == doctest::Approx(-theta[1] / theta[0]));
        const double lambda2 = 2.0 * (theta[0] * theta[0] + theta[1] * theta[1] - theta[0] * theta[1]) /
                               (3.0 * theta[0] * theta[1]);
        const auto j = jacobian(p, interior_fixed_point(p).coords);
        const Eigen::Vector2d ev(v[0], v[1]);
        CHECK((j * ev - lambda2 * ev).cwiseAbs().maxCoeff() <= 1e-10);
    }
    CHECK(2.0 * (0.16 + 0.36 - 0.24) / 0.72 == doctest::Approx(0.7777777777));
    CHECK_THROWS_AS(stable_tangent_n2(ThetaParams{0.8, 0.2}), NotApplicableError);
    CHECK_THROWS_AS(stable_tangent_n2(ThetaParams{1, 1, 1}), ContractError);
}

TEST_CASE("basin boundary anchors") {
    const double tol = 1e-8;
    const ThetaParams p{0.4, 0.6};
    const std::vector<double> grid{0.0, 5.0 / 9.0, 5.0, 6.0};
    const auto s = basin_boundary(p, grid, tol);
    REQUIRE(s.size() == 4);

    CHECK_FALSE(s[0].flagged());
    CHECK(s[0].width <= tol);
    CHECK(std::abs(s[0].midpoint() - 10.0 / 3.0) <= tol);

    CHECK_FALSE(s[1].flagged());
    CHECK(std::abs(s[1].midpoint() - 20.0 / 9.0) <= 10 * tol);

    // The curve meets the x1 axis at E1 = (5, 0).
    CHECK_FALSE(s[2].flagged());
    CHECK(s[2].midpoint() <= 10 * tol);

    // Beyond E1 every point of the vertical line escapes.
    CHECK(s[3].flag == BoundaryFlag::NoCrossing);

    const auto wide = basin_boundary(ThetaParams{0.8, 0.2}, std::vector<double>{0.0}, tol);
    CHECK(std::abs(wide[0].midpoint() - 10.0) <= tol);

    CHECK_THROWS_AS(basin_boundary(ThetaParams{1, 1, 1}, grid, tol), ContractError);
    CHECK_THROWS_AS(basin_boundary(p, std::vector<double>{-1.0}, tol), ContractError);
    CHECK_THROWS_AS(basin_boundary(p, grid, 0.0), ContractError);
}

TEST_CASE("basin boundary slope at the saddle matches the stable tangent") {
    const ThetaParams p{0.4, 0.6};
    const double xbar = 5.0 / 9.0;
    const double h = 1e-3;
    const auto s = basin_boundary(p, std::vector<double>{xbar - h, xbar + h}, 1e-10);
    const double slope = (s[1].midpoint() - s[0].midpoint()) / (2 * h);
    CHECK(std::abs(slope - stable_tangent_n2(p)[1]) <= 5e-2);
}

TEST_CASE("property: Mbar1 and Mbar2 are invariant, monotone, and decide the fate") {
    SplitMix64 rng(31);
    for (int trial = 0; trial < 500; ++trial) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(2, 6));
        const ThetaParams p = sample_theta(rng, n);

        const State low = sample_in_mbar1(rng, p, rng.uniform_left_open(0.0, 0.999));
        const State low_next = qdyn::apply(p, low);
        CHECK(region_membership(p, low_next, Region::Mbar1));
        for (std::size_t k = 0; k < n; ++k) CHECK(low_next[k] <= low[k]);

        const State high = sample_in_mbar2(rng, p, rng.uniform_left_open(1.001, 4.0));
        const State high_next = qdyn::apply(p, high);
        CHECK(region_membership(p, high_next, Region::Mbar2));
        for (std::size_t k = 0; k < n; ++k) CHECK(high_next[k] >= high[k]);

        if (trial % 10 == 0) {
            CHECK(iterate(p, low, default_budget).stop == TrajectoryStop::Converged);
            CHECK(iterate(p, high, default_budget).stop == TrajectoryStop::Escaped);
        }
    }
}

TEST_CASE("property: M1..M6 invariance under their parameter conditions") {
    SplitMix64 rng(32);
    int m12 = 0, m34 = 0, m56 = 0;
    while (m12 < 100 || m34 < 100 || m56 < 100) {
        const ThetaParams p = sample_theta(rng, 2);
        const double b1 = 2.0 / p[0];
        const double b2 = 2.0 / p[1];
        const std::array<double, 2> w1{1.0, 2.0}; // x1 + 2 x2
        const std::array<double, 2> w2{2.0, 1.0}; // x2 + 2 x1
        auto check_step = [&](const State& x, Region r) {
            REQUIRE(region_membership(p, x, r));
            CHECK(region_membership(p, qdyn::apply(p, x), r));
        };
        if (region_applicable(p, Region::M1)) {
            ++m12;
            // For n = 2, M1 and M2 coincide with Mbar1 and Mbar2.
            check_step(sample_in_mbar1(rng, p, rng.uniform_left_open(0.0, 0.999)), Region::M1);
            check_step(sample_in_mbar2(rng, p, rng.uniform_left_open(1.001, 3.0)), Region::M2);
        }
        if (region_applicable(p, Region::M3)) {
            ++m34;
            check_step(scaled_to(w1, b1, rng.uniform_left_open(0.0, 0.999), rng), Region::M3);
            check_step(scaled_to(w2, b2, rng.uniform_left_open(1.001, 3.0), rng), Region::M4);
        }
        if (region_applicable(p, Region::M5)) {
            ++m56;
            check_step(scaled_to(w2, b2, rng.uniform_left_open(0.0, 0.999), rng), Region::M5);
            check_step(scaled_to(w1, b1, rng.uniform_left_open(1.001, 3.0), rng), Region::M6);
        }
    }
}

TEST_CASE("property: the unstable ray is invariant and splits into origin and infinity") {
    SplitMix64 rng(33);
    int checked = 0;
    while (checked < 100) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(2, 6));
        const ThetaParams p = sample_theta(rng, n, 0.5, 1.5);
        if (!interior_fixed_point(p).feasible) continue;
        ++checked;
        const auto dir = unstable_ray(p).direction;
        for (double v : dir) CHECK(v > 0.0);

        const auto xbar = interior_fixed_point(p).coords;
        const double scale = max_norm(xbar);
        for (double c : {0.3, 0.9, 1.1, 1.7}) {
            std::vector<double> x(n);
            for (std::size_t k = 0; k < n; ++k) x[k] = c * scale * dir[k];
            const State xs(x);
            const State img = qdyn::apply(p, xs);
            for (std::size_t k = 1; k < n; ++k) {
                const double before = x[k] / x[0];
                CHECK(std::abs(img[k] / img[0] - before) <= 1e-12 * before);
            }
            const auto stop = iterate(p, xs, default_budget).stop;
            CHECK(stop == (c < 1.0 ? TrajectoryStop::Converged : TrajectoryStop::Escaped));
        }
    }
}
