#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "dmdp/errors.hpp"

// Internal dense linear-algebra helpers shared by the oracle and
// policy-evaluation modules.
namespace dmdp::detail {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

/// Solves (I - gamma P) v = r with partial-pivoting LU. The system matrix is
/// strictly diagonally dominant, so one refinement pass is enough whenever
/// plain LU misses the residual target.
inline std::vector<double> discounted_value_solve(std::span<const double> transition,
                                                  std::span<const double> reward, int n,
                                                  double gamma, double residual_tol) {
    RowMajorMap p(transition.data(), n, n);
    Eigen::Map<const Eigen::VectorXd> r(reward.data(), n);
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - gamma * p;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    Eigen::VectorXd v = lu.solve(r);
    double residual = (a * v - r).lpNorm<Eigen::Infinity>();
    if (residual > residual_tol) {
        v += lu.solve(r - a * v);
        residual = (a * v - r).lpNorm<Eigen::Infinity>();
        if (residual > residual_tol)
            throw NumericError("discounted_value_solve: residual " + std::to_string(residual) +
                               " above tolerance after refinement");
    }
    return std::vector<double>(v.data(), v.data() + n);
}

}  // namespace dmdp::detail
