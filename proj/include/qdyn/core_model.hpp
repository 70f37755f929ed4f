#pragma once

// The quadratic operator
//
//     x'_k = (theta_k x_k / 2) (x_k + 2 sum_{i != k} x_i),   k = 1..n
//
// on the nonnegative orthant, its Jacobian, and the parameter/state types
// the rest of the library consumes.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace qdyn {

/// Thrown when a caller violates a documented precondition
/// (dimension mismatch, negative or nonfinite input, bad parameter).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using SquareMatrix = Eigen::MatrixXd;

/// Which coordinates of a fixed point are nonzero. Bit k set means
/// coordinate k (0-based) belongs to the support.
class SupportMask {
public:
    static constexpr std::size_t max_dimension = 63;

    SupportMask(std::size_t n, std::uint64_t bits);
    /// Support made of the given 0-based coordinate indices.
    static SupportMask from_indices(std::size_t n, std::span<const std::size_t> indices);
    static SupportMask full(std::size_t n) { return {n, (std::uint64_t{1} << n) - 1}; }

    std::size_t dimension() const noexcept { return n_; }
    std::uint64_t bits() const noexcept { return bits_; }
    bool contains(std::size_t k) const noexcept { return k < n_ && ((bits_ >> k) & 1u) != 0; }
    std::size_t support_size() const noexcept;
    /// Number of coordinates forced to zero (r).
    std::size_t zero_count() const noexcept { return n_ - support_size(); }
    bool empty() const noexcept { return bits_ == 0; }
    std::vector<std::size_t> indices() const;

    bool operator==(const SupportMask&) const = default;

private:
    std::size_t n_;
    std::uint64_t bits_;
};

/// Strictly positive rate vector theta = (theta_1, ..., theta_n), n >= 2.
class ThetaParams {
public:
    explicit ThetaParams(std::vector<double> theta);
    ThetaParams(std::initializer_list<double> theta)
        : ThetaParams(std::vector<double>(theta)) {}

    std::size_t size() const noexcept { return theta_.size(); }
    double operator[](std::size_t k) const { return theta_[k]; }
    std::span<const double> values() const noexcept { return theta_; }

    /// sum_j 1/theta_j over all coordinates.
    double reciprocal_sum() const noexcept;
    /// sum_j 1/theta_j restricted to the coordinates in `support`.
    double reciprocal_sum(const SupportMask& support) const;

private:
    std::vector<double> theta_;
};

/// A point of the nonnegative orthant. Every coordinate is finite and >= 0.
class State {
public:
    State() = default;
    explicit State(std::vector<double> x);
    State(std::initializer_list<double> x) : State(std::vector<double>(x)) {}

    std::size_t size() const noexcept { return x_.size(); }
    double operator[](std::size_t k) const { return x_[k]; }
    std::span<const double> values() const noexcept { return x_; }
    double max_norm() const noexcept;

    bool operator==(const State&) const = default;

private:
    std::vector<double> x_;
};

/// H(x) for a point of the orthant. Throws ContractError on dimension
/// mismatch or if the image is not finite.
State apply(const ThetaParams& params, const State& x);

/// H evaluated at arbitrary real coordinates (no sign check). Used for the
/// algebraic fixed points, some of which leave the orthant.
std::vector<double> apply(const ThetaParams& params, std::span<const double> x);

/// Writes H(x) into `out` without allocating. Sizes must already agree.
void apply_into(std::span<const double> theta, std::span<const double> x,
                std::span<double> out) noexcept;

/// J[k][k] = theta_k sum_i x_i, J[k][j] = theta_k x_k for j != k.
SquareMatrix jacobian(const ThetaParams& params, std::span<const double> x);
inline SquareMatrix jacobian(const ThetaParams& params, const State& x) {
    return jacobian(params, x.values());
}

double max_norm(std::span<const double> x) noexcept;

} // namespace qdyn
