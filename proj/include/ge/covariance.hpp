#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ge/core.hpp"

namespace ge {

/// Sample covariance with divisor n: (1/n) sum_t R_t R_t' - Rbar Rbar'.
Matrix sample_covariance_matrix(const Matrix& returns);
CovarianceEstimate sample_covariance(const ReturnPanel& panel);

/// Variance of a univariate series with divisor n, centered by its own mean.
double sample_variance(const Vector& series);

struct FactorModelFit {
    Matrix loadings;        ///< p x k
    Vector intercepts;      ///< p
    Matrix factor_cov;      ///< k x k, divisor n
    Vector idio_var;        ///< p, residual variances (divisor T - k - 1), clamped at 0
    std::vector<std::string> factor_ids;
    int clamped_count = 0;  ///< how many residual variances were negative and clamped

    /// B cov(f) B' + diag(idio_var)
    Matrix implied_covariance() const;
};

struct FactorCovariance {
    FactorModelFit fit;
    CovarianceEstimate estimate;
};

/**
 * Per-asset OLS of returns on the factors (with intercept), assembled as
 * B cov(f) B' + diag(sigma_i^2). Throws DataError when the design
 * [1, F] is rank deficient or when T < k + 2.
 */
FactorModelFit fit_factor_model(const Matrix& returns, const Matrix& factors);
FactorCovariance factor_covariance(const ReturnPanel& panel, const ReturnPanel& factors);

/**
 * Zero-mean exponentially weighted covariance:
 *   S_1 = R_1 R_1',  S_t = lambda S_{t-1} + (1 - lambda) R_t R_t'.
 * Accepts T >= 1 rows.
 */
Matrix ewma_covariance_matrix(const Matrix& returns, double lambda);
CovarianceEstimate ewma_covariance(const ReturnPanel& panel, double lambda = 0.97);

using VarianceEstimator = std::function<double(const Vector&)>;

/**
 * Covariances from univariate variances only:
 *   s_ij = [var(R_i + R_j) - var(R_i - R_j)] / 4,  s_ii = var(R_i).
 * The result need not be positive semi-definite.
 */
Matrix pairwise_covariance_matrix(const VarianceEstimator& var_estimator, const Matrix& returns);
CovarianceEstimate pairwise_covariance(const VarianceEstimator& var_estimator,
                                       const ReturnPanel& panel);

}  // namespace ge
