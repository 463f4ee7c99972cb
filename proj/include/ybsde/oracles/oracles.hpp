#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ybsde::oracles {

/// p-variation by enumerating every sub-partition that keeps both endpoints
/// (2^(m-2) subsets). Rows of `values` are grid points.
double brute_force_p_variation(const Eigen::MatrixXd& values, double p);

/// Adaptive Gauss-Kronrod (15 points) quadrature to relative tolerance `tol`.
double quadrature(const std::function<double(double)>& f, double a, double b, double tol = 1e-12);

/// exp(A) by scaling and squaring with Pade approximants.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& A);

struct CrankNicolsonResult {
    std::vector<double> x;
    std::vector<double> u0;  ///< u(0, x)
    double at(double xq) const;
};

/// Backward equation  d_t u + 1/2 sigma^2 u'' + mu u' + c(x) u = 0  on [lo, hi] x [0, T],
/// u(T, x) = terminal(x), homogeneous Dirichlet boundary, Crank-Nicolson in
/// time with `space_points` nodes and `time_steps` steps.
CrankNicolsonResult crank_nicolson(const std::function<double(double)>& potential,
                                   const std::function<double(double)>& terminal, double sigma, double mu, double lo,
                                   double hi, double T, std::size_t space_points, std::size_t time_steps);

/// Solve a tridiagonal system; sub/diag/sup have equal length, sub[0] and sup[n-1] unused.
std::vector<double> thomas(std::span<const double> sub, std::span<const double> diag, std::span<const double> sup,
                           std::span<const double> rhs);

} // namespace ybsde::oracles
