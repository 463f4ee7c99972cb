#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace ybsde {

/// Monomials of total degree <= degree in d variables, evaluated on
/// standardized coordinates (x - center) / scale.
class PolynomialBasis {
public:
    PolynomialBasis(std::size_t dim, int degree);

    std::size_t dim() const { return dim_; }
    int degree() const { return degree_; }
    std::size_t size() const { return exponents_.size(); }
    const std::vector<std::vector<int>>& exponents() const { return exponents_; }

    void evaluate(std::span<const double> z, std::span<double> out) const;

private:
    std::size_t dim_;
    int degree_;
    std::vector<std::vector<int>> exponents_;
};

/// Least-squares conditional expectation E[target | state] on a polynomial
/// basis, fitted by ridge-regularized normal equations (the constant term is
/// not penalized, so fitted values keep the sample mean). One fit serves
/// several target columns.
class RegressionModel {
public:
    RegressionModel() = default;

    /// `states`: n x d, `targets`: n x q. Rows whose `mask` entry is false are
    /// ignored (an empty mask uses all rows). Coordinates with no spread are
    /// dropped from the basis; if none remain the fit is the sample mean.
    static RegressionModel fit(const Eigen::MatrixXd& states, const Eigen::MatrixXd& targets, int degree, double ridge = 1e-8,
                               std::span<const char> mask = {});

    /// Fitted values for every row of `states` (n x q).
    Eigen::MatrixXd predict(const Eigen::MatrixXd& states) const;
    Eigen::VectorXd predict(std::span<const double> x) const;

    const Eigen::MatrixXd& coefficients() const { return coef_; }  ///< basis size x q
    const Eigen::VectorXd& center() const { return center_; }
    const Eigen::VectorXd& scale() const { return scale_; }
    double ridge_used() const { return ridge_used_; }
    std::size_t fitted_rows() const { return rows_; }

private:
    std::vector<Eigen::Index> used_dims_;
    Eigen::VectorXd center_, scale_;
    Eigen::MatrixXd coef_;
    int degree_ = 0;
    std::size_t input_dim_ = 0;
    double ridge_used_ = 0.0;
    std::size_t rows_ = 0;
};

} // namespace ybsde
