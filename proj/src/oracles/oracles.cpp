#include "ybsde/oracles/oracles.hpp"

#include "ybsde/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

namespace ybsde::oracles {

double brute_force_p_variation(const Eigen::MatrixXd& values, double p) {
    const auto m = static_cast<std::size_t>(values.rows());
    require(m >= 2 && m <= 24, "brute_force_p_variation: 2..24 points");
    const std::size_t interior = m - 2;
    double best = 0.0;
    std::vector<std::size_t> idx;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << interior); ++mask) {
        idx.assign(1, 0);
        for (std::size_t b = 0; b < interior; ++b)
            if (mask >> b & 1U) idx.push_back(b + 1);
        idx.push_back(m - 1);
        double acc = 0.0;
        for (std::size_t k = 1; k < idx.size(); ++k)
            acc += std::pow((values.row(static_cast<Eigen::Index>(idx[k])) - values.row(static_cast<Eigen::Index>(idx[k - 1]))).norm(), p);
        best = std::max(best, acc);
    }
    return std::pow(best, 1.0 / p);
}

double quadrature(const std::function<double(double)>& f, double a, double b, double tol) {
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 30, tol, &err);
    return v;
}

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& A) {
    require(A.rows() == A.cols(), "matrix_exponential: square matrix required");
    return A.exp();
}

std::vector<double> thomas(std::span<const double> sub, std::span<const double> diag, std::span<const double> sup,
                           std::span<const double> rhs) {
    const std::size_t n = diag.size();
    require(sub.size() == n && sup.size() == n && rhs.size() == n && n >= 1, "thomas: size mismatch");
    std::vector<double> c(n), d(n), x(n);
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for (std::size_t i = 1; i < n; ++i) {
        const double den = diag[i] - sub[i] * c[i - 1];
        c[i] = i + 1 < n ? sup[i] / den : 0.0;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / den;
    }
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

CrankNicolsonResult crank_nicolson(const std::function<double(double)>& potential,
                                   const std::function<double(double)>& terminal, double sigma, double mu, double lo,
                                   double hi, double T, std::size_t space_points, std::size_t time_steps) {
    require(space_points >= 3 && time_steps >= 1 && hi > lo && T > 0.0, "crank_nicolson: invalid grid");
    const std::size_t n = space_points - 2;  // interior unknowns
    const double h = (hi - lo) / static_cast<double>(space_points - 1);
    const double dt = T / static_cast<double>(time_steps);
    CrankNicolsonResult out;
    out.x.resize(space_points);
    for (std::size_t i = 0; i < space_points; ++i) out.x[i] = lo + h * static_cast<double>(i);

    // A u = a u_{i-1} + b_i u_i + c u_{i+1}
    const double a = 0.5 * sigma * sigma / (h * h) - mu / (2 * h);
    const double c = 0.5 * sigma * sigma / (h * h) + mu / (2 * h);
    std::vector<double> bdiag(n);
    for (std::size_t i = 0; i < n; ++i) bdiag[i] = -sigma * sigma / (h * h) + potential(out.x[i + 1]);

    std::vector<double> u(n), sub(n, -0.5 * dt * a), sup(n, -0.5 * dt * c), diag(n), rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = terminal(out.x[i + 1]);
        diag[i] = 1.0 - 0.5 * dt * bdiag[i];
    }
    for (std::size_t step = 0; step < time_steps; ++step) {
        for (std::size_t i = 0; i < n; ++i) {
            const double left = i ? u[i - 1] : 0.0;
            const double right = i + 1 < n ? u[i + 1] : 0.0;
            rhs[i] = u[i] + 0.5 * dt * (a * left + bdiag[i] * u[i] + c * right);
        }
        u = thomas(sub, diag, sup, rhs);
    }
    out.u0.assign(space_points, 0.0);
    std::copy(u.begin(), u.end(), out.u0.begin() + 1);
    return out;
}

double CrankNicolsonResult::at(double xq) const {
    require(xq >= x.front() && xq <= x.back(), "CrankNicolsonResult::at: outside the grid");
    auto it = std::upper_bound(x.begin(), x.end(), xq);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - x.begin()), x.size() - 1);
    const std::size_t j = k - 1;
    const double w = (xq - x[j]) / (x[k] - x[j]);
    return (1 - w) * u0[j] + w * u0[k];
}

} // namespace ybsde::oracles
