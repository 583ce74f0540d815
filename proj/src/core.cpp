#include "ge/core.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace ge {

ReturnPanel::ReturnPanel(Matrix returns, std::vector<std::string> asset_ids,
                         int periods_per_year, std::vector<std::string> dates)
    : returns_(std::move(returns)),
      asset_ids_(std::move(asset_ids)),
      dates_(std::move(dates)),
      periods_per_year_(periods_per_year) {
    if (returns_.rows() < 2) {
        throw DataError("return panel needs at least 2 periods, got " +
                        std::to_string(returns_.rows()));
    }
    if (returns_.cols() < 1) {
        throw DataError("return panel needs at least one asset");
    }
    if (static_cast<Index>(asset_ids_.size()) != returns_.cols()) {
        throw DataError("asset id count (" + std::to_string(asset_ids_.size()) +
                        ") does not match panel width (" + std::to_string(returns_.cols()) + ")");
    }
    if (periods_per_year_ <= 0) {
        throw DataError("periods_per_year must be positive");
    }
    if (!returns_.allFinite()) {
        throw DataError("return panel contains non-finite entries");
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : asset_ids_) {
        if (!seen.insert(id).second) {
            throw DataError("duplicate asset id '" + id + "'");
        }
    }
    if (dates_.empty()) {
        dates_.reserve(static_cast<std::size_t>(returns_.rows()));
        for (Index t = 0; t < returns_.rows(); ++t) {
            dates_.push_back(std::to_string(t));
        }
    } else if (static_cast<Index>(dates_.size()) != returns_.rows()) {
        throw DataError("date count does not match panel length");
    }
}

ReturnPanel ReturnPanel::rows(Index begin, Index count) const {
    if (begin < 0 || count < 0 || begin + count > periods()) {
        throw DataError("panel row range out of bounds");
    }
    std::vector<std::string> dates(dates_.begin() + begin, dates_.begin() + begin + count);
    return ReturnPanel(returns_.middleRows(begin, count), asset_ids_, periods_per_year_,
                       std::move(dates));
}

std::string_view to_string(EstimatorTag tag) {
    switch (tag) {
        case EstimatorTag::sample: return "sample";
        case EstimatorTag::factor: return "factor";
        case EstimatorTag::ewma: return "ewma";
        case EstimatorTag::pairwise: return "pairwise";
        case EstimatorTag::exogenous: return "exogenous";
    }
    return "exogenous";
}

EstimatorTag estimator_tag_from_string(std::string_view name) {
    for (auto tag : {EstimatorTag::sample, EstimatorTag::factor, EstimatorTag::ewma,
                     EstimatorTag::pairwise, EstimatorTag::exogenous}) {
        if (to_string(tag) == name) return tag;
    }
    throw DataError("unknown estimator '" + std::string(name) + "'");
}

CovarianceEstimate::CovarianceEstimate(const Matrix& matrix, EstimatorTag tag,
                                       int periods_per_year)
    : tag_(tag), periods_per_year_(periods_per_year) {
    if (matrix.rows() != matrix.cols() || matrix.rows() == 0) {
        throw DataError("covariance matrix must be square and non-empty, got " +
                        std::to_string(matrix.rows()) + "x" + std::to_string(matrix.cols()));
    }
    if (!matrix.allFinite()) {
        throw DataError("covariance matrix contains non-finite entries");
    }
    if (periods_per_year <= 0) {
        throw DataError("periods_per_year must be positive");
    }
    matrix_ = 0.5 * (matrix + matrix.transpose());
    for (Index i = 0; i < matrix_.rows(); ++i) {
        if (matrix_(i, i) < 0.0) {
            throw DataError("covariance matrix has a negative variance at index " +
                            std::to_string(i));
        }
    }
}

AllocationVector::AllocationVector(Vector weights) : weights_(std::move(weights)) {
    if (weights_.size() == 0) {
        throw DataError("allocation vector is empty");
    }
    if (!weights_.allFinite()) {
        throw DataError("allocation vector contains non-finite weights");
    }
    const double total = weights_.sum();
    if (std::abs(total - 1.0) > kWeightSumTolerance) {
        throw DataError("weights sum to " + std::to_string(total) + ", expected 1");
    }
    gross_exposure_ = weights_.cwiseAbs().sum();
    for (Index i = 0; i < weights_.size(); ++i) {
        if (weights_[i] > 0.0) ++n_long_;
        if (weights_[i] < 0.0) ++n_short_;
    }
}

AllocationVector AllocationVector::renormalized(const Vector& weights) {
    const double total = weights.sum();
    if (!std::isfinite(total) || std::abs(total) < 1e-14) {
        throw DataError("cannot renormalize weights with zero sum");
    }
    return AllocationVector(weights / total);
}

AllocationVector AllocationVector::equal_weight(Index p) {
    if (p < 1) throw DataError("equal weights need p >= 1");
    return AllocationVector(Vector::Constant(p, 1.0 / static_cast<double>(p)));
}

double AllocationVector::short_fraction() const {
    return -weights_.cwiseMin(0.0).sum();
}

double annualized_percent(double variance, int periods_per_year) {
    return std::sqrt(std::max(variance, 0.0) * periods_per_year) * 100.0;
}

PortfolioRisk portfolio_risk(const Vector& w, const CovarianceEstimate& sigma) {
    if (w.size() != sigma.dim()) {
        throw DataError("weight vector has " + std::to_string(w.size()) +
                        " entries but covariance is " + std::to_string(sigma.dim()) + "x" +
                        std::to_string(sigma.dim()));
    }
    PortfolioRisk risk;
    risk.raw_variance = w.dot(sigma.matrix() * w);
    risk.variance = std::max(risk.raw_variance, 0.0);
    risk.annualized_volatility = std::sqrt(risk.variance * sigma.periods_per_year());
    return risk;
}

PortfolioRisk portfolio_risk(const AllocationVector& w, const CovarianceEstimate& sigma) {
    return portfolio_risk(w.weights(), sigma);
}

double sup_norm_error(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DataError("sup-norm error needs matrices of equal shape");
    }
    return (a - b).cwiseAbs().maxCoeff();
}

double sup_norm_error(const CovarianceEstimate& a, const CovarianceEstimate& b) {
    return sup_norm_error(a.matrix(), b.matrix());
}

namespace {

BoundCheck check_gap(double x, double y, double allowed) {
    BoundCheck check;
    check.lhs = std::abs(x - y);
    check.rhs = allowed;
    check.slack = allowed - check.lhs;
    // Absorb rounding in the subtraction of the inputs.
    const double tol = 1e-12 * std::max({1.0, std::abs(x), std::abs(y)});
    check.pass = check.lhs <= allowed + tol;
    return check;
}

}  // namespace

BoundReport risk_gap_bounds(double oracle_risk, double actual_risk, double empirical_risk,
                            double a_n, double c) {
    if (!(a_n >= 0.0)) throw DataError("a_n must be nonnegative");
    if (!(c >= 1.0)) throw DataError("exposure bound c must be >= 1");
    const double unit = a_n * c * c;
    BoundReport report;
    report.actual_oracle = check_gap(actual_risk, oracle_risk, 2.0 * unit);
    report.actual_empirical = check_gap(actual_risk, empirical_risk, unit);
    report.oracle_empirical = check_gap(oracle_risk, empirical_risk, 3.0 * unit);
    return report;
}

}  // namespace ge
