#include "ybsde/regression.hpp"

#include "ybsde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace ybsde {

PolynomialBasis::PolynomialBasis(std::size_t dim, int degree) : dim_(dim), degree_(degree) {
    require(degree >= 0, "PolynomialBasis: negative degree");
    std::vector<int> e(dim, 0);
    std::function<void(std::size_t, int)> rec = [&](std::size_t k, int left) {
        if (k == dim) {
            exponents_.push_back(e);
            return;
        }
        for (int p = 0; p <= left; ++p) {
            e[k] = p;
            rec(k + 1, left - p);
        }
        e[k] = 0;
    };
    rec(0, degree);
    // order by total degree so the constant comes first
    std::stable_sort(exponents_.begin(), exponents_.end(), [](const auto& a, const auto& b) {
        int sa = 0, sb = 0;
        for (int v : a) sa += v;
        for (int v : b) sb += v;
        return sa < sb;
    });
}

void PolynomialBasis::evaluate(std::span<const double> z, std::span<double> out) const {
    for (std::size_t j = 0; j < exponents_.size(); ++j) {
        double v = 1.0;
        for (std::size_t k = 0; k < dim_; ++k)
            for (int p = 0; p < exponents_[j][k]; ++p) v *= z[k];
        out[j] = v;
    }
}

RegressionModel RegressionModel::fit(const Eigen::MatrixXd& states, const Eigen::MatrixXd& targets, int degree,
                                     double ridge, std::span<const char> mask) {
    require(states.rows() == targets.rows(), "RegressionModel::fit: state and target row counts differ");
    require(mask.empty() || static_cast<Eigen::Index>(mask.size()) == states.rows(), "RegressionModel::fit: mask length");
    const Eigen::Index n = states.rows(), d = states.cols(), q = targets.cols();
    auto use = [&](Eigen::Index i) { return mask.empty() || mask[static_cast<std::size_t>(i)]; };

    RegressionModel model;
    model.input_dim_ = static_cast<std::size_t>(d);
    model.degree_ = degree;
    Eigen::Index count = 0;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d), sq = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < n; ++i)
        if (use(i)) {
            ++count;
            mean += states.row(i).transpose();
        }
    model.rows_ = static_cast<std::size_t>(count);
    if (count == 0) {
        model.coef_ = Eigen::MatrixXd::Zero(1, q);
        model.degree_ = 0;
        return model;
    }
    mean /= static_cast<double>(count);
    for (Eigen::Index i = 0; i < n; ++i)
        if (use(i)) sq += (states.row(i).transpose() - mean).array().square().matrix();
    const Eigen::VectorXd sd = (sq / static_cast<double>(count)).cwiseSqrt();
    for (Eigen::Index k = 0; k < d; ++k)
        if (sd(k) > 1e-12 * std::max(1.0, std::abs(mean(k)))) model.used_dims_.push_back(k);
    const auto du = static_cast<Eigen::Index>(model.used_dims_.size());
    if (du == 0 || count < 2) model.degree_ = 0;
    model.center_.resize(du);
    model.scale_.resize(du);
    for (Eigen::Index k = 0; k < du; ++k) {
        model.center_(k) = mean(model.used_dims_[static_cast<std::size_t>(k)]);
        model.scale_(k) = sd(model.used_dims_[static_cast<std::size_t>(k)]);
    }

    const PolynomialBasis basis(static_cast<std::size_t>(du), model.degree_);
    const auto p = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p), rhs = Eigen::MatrixXd::Zero(p, q);
    Eigen::VectorXd phi(p), z(du);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!use(i)) continue;
        for (Eigen::Index k = 0; k < du; ++k)
            z(k) = (states(i, model.used_dims_[static_cast<std::size_t>(k)]) - model.center_(k)) / model.scale_(k);
        basis.evaluate(std::span<const double>(z.data(), static_cast<std::size_t>(du)), std::span<double>(phi.data(), static_cast<std::size_t>(p)));
        gram.selfadjointView<Eigen::Lower>().rankUpdate(phi);
        rhs.noalias() += phi * targets.row(i);
    }
    gram = gram.selfadjointView<Eigen::Lower>();
    const double scale = std::max(1.0, gram.diagonal().maxCoeff());
    for (double r : {ridge, ridge * 1e2, ridge * 1e4}) {
        Eigen::MatrixXd a = gram;
        a.diagonal().tail(p - 1).array() += r * scale;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) continue;
        Eigen::MatrixXd c = ldlt.solve(rhs);
        if (!c.allFinite()) continue;
        // reject near-singular systems: relative residual of the solve
        if ((a * c - rhs).norm() > 1e-6 * std::max(1.0, rhs.norm())) continue;
        model.coef_ = std::move(c);
        model.ridge_used_ = r;
        return model;
    }
    throw NumericalError("RegressionModel::fit: normal equations rank deficient after ridge fallback");
}

Eigen::VectorXd RegressionModel::predict(std::span<const double> x) const {
    const auto du = static_cast<Eigen::Index>(used_dims_.size());
    const PolynomialBasis basis(static_cast<std::size_t>(du), degree_);
    Eigen::VectorXd z(du), phi(static_cast<Eigen::Index>(basis.size()));
    for (Eigen::Index k = 0; k < du; ++k) z(k) = (x[static_cast<std::size_t>(used_dims_[static_cast<std::size_t>(k)])] - center_(k)) / scale_(k);
    basis.evaluate(std::span<const double>(z.data(), static_cast<std::size_t>(du)), std::span<double>(phi.data(), basis.size()));
    return coef_.transpose() * phi;
}

Eigen::MatrixXd RegressionModel::predict(const Eigen::MatrixXd& states) const {
    const auto du = static_cast<Eigen::Index>(used_dims_.size());
    const PolynomialBasis basis(static_cast<std::size_t>(du), degree_);
    Eigen::MatrixXd out(states.rows(), coef_.cols());
    Eigen::VectorXd z(du), phi(static_cast<Eigen::Index>(basis.size()));
    for (Eigen::Index i = 0; i < states.rows(); ++i) {
        for (Eigen::Index k = 0; k < du; ++k) z(k) = (states(i, used_dims_[static_cast<std::size_t>(k)]) - center_(k)) / scale_(k);
        basis.evaluate(std::span<const double>(z.data(), static_cast<std::size_t>(du)), std::span<double>(phi.data(), basis.size()));
        out.row(i) = (coef_.transpose() * phi).transpose();
    }
    return out;
}

} // namespace ybsde
