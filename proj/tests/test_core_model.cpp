#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qdyn/core_model.hpp"
#include "qdyn/sampling.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <limits>

using namespace qdyn;

TEST_CASE("theta and state reject bad input") {
    CHECK_THROWS_AS(ThetaParams({0.4}), ContractError);
    CHECK_THROWS_WITH(ThetaParams({0.4}), "n must be ≥ 2");
    CHECK_THROWS_AS(ThetaParams({0.4, 0.0}), ContractError);
    CHECK_THROWS_AS(ThetaParams({0.4, -1.0}), ContractError);
    CHECK_THROWS_AS(ThetaParams({0.4, std::numeric_limits<double>::quiet_NaN()}), ContractError);
    CHECK_THROWS_AS(State({0.1, -1e-300}), ContractError);
    CHECK_THROWS_AS(State({0.1, std::numeric_limits<double>::infinity()}), ContractError);
}

TEST_CASE("reciprocal sums") {
    const ThetaParams p{1.0, 2.0, 4.0};
    CHECK(p.reciprocal_sum() == doctest::Approx(1.75));
    CHECK(p.reciprocal_sum(SupportMask(3, 0b110)) == doctest::Approx(0.75));
    CHECK(p.reciprocal_sum(SupportMask(3, 0)) == 0.0);
}

TEST_CASE("support mask") {
    const std::vector<std::size_t> idx{2, 0};
    const auto m = SupportMask::from_indices(3, idx);
    CHECK(m.bits() == 0b101);
    CHECK(m.zero_count() == 1);
    CHECK(m.indices() == std::vector<std::size_t>{0, 2});
    const std::vector<std::size_t> dup{1, 1};
    CHECK_THROWS_AS(SupportMask::from_indices(3, dup), ContractError);
    const std::vector<std::size_t> out_of_range{3};
    CHECK_THROWS_AS(SupportMask::from_indices(3, out_of_range), ContractError);
    CHECK_THROWS_AS(SupportMask(2, 0b100), ContractError);
}

TEST_CASE("apply: worked values") {
    CHECK(qdyn::apply(ThetaParams{1, 1}, State{0, 0}) == State{0, 0});

    const auto e1 = qdyn::apply(ThetaParams{0.4, 0.6}, State{5, 0});
    CHECK(e1[0] == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(e1[1] == 0.0);

    const auto sym = qdyn::apply(ThetaParams{1, 1, 1}, State{0.4, 0.4, 0.4});
    for (std::size_t k = 0; k < 3; ++k) CHECK(sym[k] == doctest::Approx(0.4).epsilon(1e-15));

    const auto ones = qdyn::apply(ThetaParams{1, 1}, State{1, 1});
    CHECK(ones[0] == doctest::Approx(1.5));
    CHECK(ones[1] == doctest::Approx(1.5));
}

TEST_CASE("apply: contract errors") {
    CHECK_THROWS_AS(qdyn::apply(ThetaParams{1, 1}, State{1, 1, 1}), ContractError);
    const std::vector<double> bad{1.0, std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_AS(qdyn::apply(ThetaParams{1, 1}, bad), ContractError);
    // Image overflows to infinity.
    CHECK_THROWS_AS(qdyn::apply(ThetaParams{1, 1}, State{1e200, 1e200}), ContractError);
}

TEST_CASE("jacobian: worked values") {
    const auto zero = jacobian(ThetaParams{1, 1}, State{0, 0});
    CHECK(zero.isZero());

    // Interior point (5/9, 20/9) for theta = (0.4, 0.6).
    const ThetaParams p{0.4, 0.6};
    const std::vector<double> e{5.0 / 9.0, 20.0 / 9.0};
    const auto j = jacobian(p, e);
    CHECK(j(0, 0) == doctest::Approx(10.0 / 9.0));
    CHECK(j(0, 1) == doctest::Approx(2.0 / 9.0));
    CHECK(j(1, 0) == doctest::Approx(4.0 / 3.0));
    CHECK(j(1, 1) == doctest::Approx(5.0 / 3.0));
    const auto fd = oracle::fd_jacobian(p, e);
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) CHECK(std::abs(j(r, c) - fd[r][c]) <= 1e-6);
    }

    const auto s = jacobian(ThetaParams{1, 1, 1}, State{0.4, 0.4, 0.4});
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) CHECK(s(r, c) == doctest::Approx(r == c ? 1.2 : 0.4));
    }
}

TEST_CASE("property: positivity, jacobian against finite differences, degree-2 homogeneity") {
    SplitMix64 rng(20240611);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(2, 6));
        const ThetaParams p = sample_theta(rng, n, 0.0, 2.0);
        std::vector<double> xs(n);
        for (double& v : xs) v = rng.uniform_left_open(0.0, 2.0);
        const State x(xs);

        const State hx = qdyn::apply(p, x);
        for (std::size_t k = 0; k < n; ++k) CHECK(hx[k] >= 0.0);

        const auto j = jacobian(p, x);
        const auto fd = oracle::fd_jacobian(p, xs);
        double diff = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                diff = std::max(diff, std::abs(j(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) - fd[r][c]));
            }
        }
        CHECK(diff <= 1e-6);

        for (double c : {0.0, 0.5, 2.0}) {
            std::vector<double> scaled(xs);
            for (double& v : scaled) v *= c;
            const State hs = qdyn::apply(p, State(scaled));
            for (std::size_t k = 0; k < n; ++k) {
                CHECK(hs[k] == doctest::Approx(c * c * hx[k]).epsilon(1e-14));
            }
        }
    }
}
