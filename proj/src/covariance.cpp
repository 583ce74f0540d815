#include "ge/covariance.hpp"

#include <cmath>

namespace ge {

Matrix sample_covariance_matrix(const Matrix& returns) {
    if (returns.rows() < 2) {
        throw DataError("sample covariance needs at least 2 periods");
    }
    const double n = static_cast<double>(returns.rows());
    const Eigen::RowVectorXd mean = returns.colwise().mean();
    const Matrix centered = returns.rowwise() - mean;
    Matrix s = (centered.transpose() * centered) / n;
    return 0.5 * (s + s.transpose());
}

CovarianceEstimate sample_covariance(const ReturnPanel& panel) {
    return CovarianceEstimate(sample_covariance_matrix(panel.returns()), EstimatorTag::sample,
                              panel.periods_per_year());
}

double sample_variance(const Vector& series) {
    if (series.size() < 1) throw DataError("variance of an empty series");
    const double mean = series.mean();
    return (series.array() - mean).square().sum() / static_cast<double>(series.size());
}

Matrix FactorModelFit::implied_covariance() const {
    Matrix s = loadings * factor_cov * loadings.transpose();
    s.diagonal() += idio_var;
    return 0.5 * (s + s.transpose());
}

FactorModelFit fit_factor_model(const Matrix& returns, const Matrix& factors) {
    const Index t = returns.rows();
    const Index k = factors.cols();
    if (factors.rows() != t) {
        throw DataError("factor panel has " + std::to_string(factors.rows()) +
                        " periods, return panel has " + std::to_string(t));
    }
    if (k < 1) throw DataError("factor panel has no factors");
    if (t < k + 2) {
        throw DataError("factor regression needs T >= k + 2 periods");
    }

    Matrix design(t, k + 1);
    design.col(0).setOnes();
    design.rightCols(k) = factors;

    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    // Relative threshold on the R diagonal; a constant factor column is
    // collinear with the intercept and lands here.
    qr.setThreshold(1e-10);
    if (qr.rank() < k + 1) {
        throw DataError("factor panel is rank deficient (rank " + std::to_string(qr.rank()) +
                        " < " + std::to_string(k + 1) + " including intercept)");
    }

    const Matrix coef = qr.solve(returns);  // (k+1) x p
    const Matrix residuals = returns - design * coef;

    FactorModelFit fit;
    fit.intercepts = coef.row(0).transpose();
    fit.loadings = coef.bottomRows(k).transpose();
    fit.factor_cov = sample_covariance_matrix(factors);
    const double dof = static_cast<double>(t - k - 1);
    fit.idio_var = residuals.colwise().squaredNorm().transpose() / dof;
    for (Index i = 0; i < fit.idio_var.size(); ++i) {
        if (fit.idio_var[i] < 0.0) {
            fit.idio_var[i] = 0.0;
            ++fit.clamped_count;
        }
    }
    return fit;
}

FactorCovariance factor_covariance(const ReturnPanel& panel, const ReturnPanel& factors) {
    FactorModelFit fit = fit_factor_model(panel.returns(), factors.returns());
    fit.factor_ids = factors.asset_ids();
    CovarianceEstimate estimate(fit.implied_covariance(), EstimatorTag::factor,
                                panel.periods_per_year());
    return FactorCovariance{std::move(fit), std::move(estimate)};
}

Matrix ewma_covariance_matrix(const Matrix& returns, double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw DataError("EWMA decay must lie in (0, 1), got " + std::to_string(lambda));
    }
    if (returns.rows() < 1) throw DataError("EWMA covariance needs at least 1 period");
    const Vector r0 = returns.row(0).transpose();
    Matrix s = r0 * r0.transpose();
    for (Index t = 1; t < returns.rows(); ++t) {
        const Vector r = returns.row(t).transpose();
        s *= lambda;
        s.noalias() += (1.0 - lambda) * (r * r.transpose());
    }
    return 0.5 * (s + s.transpose());
}

CovarianceEstimate ewma_covariance(const ReturnPanel& panel, double lambda) {
    return CovarianceEstimate(ewma_covariance_matrix(panel.returns(), lambda),
                              EstimatorTag::ewma, panel.periods_per_year());
}

Matrix pairwise_covariance_matrix(const VarianceEstimator& var_estimator, const Matrix& returns) {
    const Index p = returns.cols();
    Matrix s(p, p);
    for (Index i = 0; i < p; ++i) {
        s(i, i) = var_estimator(returns.col(i));
        for (Index j = i + 1; j < p; ++j) {
            const double plus = var_estimator(returns.col(i) + returns.col(j));
            const double minus = var_estimator(returns.col(i) - returns.col(j));
            s(i, j) = s(j, i) = 0.25 * (plus - minus);
        }
    }
    return s;
}

CovarianceEstimate pairwise_covariance(const VarianceEstimator& var_estimator,
                                       const ReturnPanel& panel) {
    return CovarianceEstimate(pairwise_covariance_matrix(var_estimator, panel.returns()),
                              EstimatorTag::pairwise, panel.periods_per_year());
}

}  // namespace ge
