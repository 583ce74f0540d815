#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Malformed or inconsistent input data (bad shapes, non-finite cells, ...).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a valid answer (singular matrix,
/// infeasible constraints, iteration limit).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kDefaultPeriodsPerYear = 252;

/**
 * T x p panel of per-period simple returns.
 *
 * Invariants: T >= 2, p >= 1, all cells finite, asset ids unique.
 * Dates are optional labels for the rows; when absent they are the
 * row numbers.
 */
class ReturnPanel {
public:
    ReturnPanel(Matrix returns, std::vector<std::string> asset_ids,
                int periods_per_year = kDefaultPeriodsPerYear,
                std::vector<std::string> dates = {});

    const Matrix& returns() const { return returns_; }
    const std::vector<std::string>& asset_ids() const { return asset_ids_; }
    const std::vector<std::string>& dates() const { return dates_; }
    int periods_per_year() const { return periods_per_year_; }

    Index periods() const { return returns_.rows(); }
    Index assets() const { return returns_.cols(); }

    /// Rows [begin, begin + count). The result must itself hold >= 2 rows.
    ReturnPanel rows(Index begin, Index count) const;

private:
    Matrix returns_;
    std::vector<std::string> asset_ids_;
    std::vector<std::string> dates_;
    int periods_per_year_;
};

enum class EstimatorTag { sample, factor, ewma, pairwise, exogenous };

std::string_view to_string(EstimatorTag tag);
EstimatorTag estimator_tag_from_string(std::string_view name);

/**
 * Symmetric p x p covariance matrix in per-period variance units.
 *
 * The input is symmetrized as (M + M^T) / 2 on construction. Positive
 * semi-definiteness is not required; solvers that need it check it.
 */
class CovarianceEstimate {
public:
    explicit CovarianceEstimate(const Matrix& matrix,
                                EstimatorTag tag = EstimatorTag::exogenous,
                                int periods_per_year = kDefaultPeriodsPerYear);

    const Matrix& matrix() const { return matrix_; }
    EstimatorTag tag() const { return tag_; }
    int periods_per_year() const { return periods_per_year_; }
    Index dim() const { return matrix_.rows(); }

    double operator()(Index i, Index j) const { return matrix_(i, j); }

private:
    Matrix matrix_;
    EstimatorTag tag_;
    int periods_per_year_;
};

inline constexpr double kWeightSumTolerance = 1e-8;

/**
 * Portfolio weights that sum to one (within kWeightSumTolerance).
 * Gross exposure and long/short counts are recomputed from the weights.
 */
class AllocationVector {
public:
    explicit AllocationVector(Vector weights);

    /// Rescales w by 1 / sum(w). Throws if the sum is (numerically) zero.
    static AllocationVector renormalized(const Vector& weights);

    static AllocationVector equal_weight(Index p);

    const Vector& weights() const { return weights_; }
    Index size() const { return weights_.size(); }
    double operator[](Index i) const { return weights_[i]; }

    double gross_exposure() const { return gross_exposure_; }
    int n_long() const { return n_long_; }
    int n_short() const { return n_short_; }
    /// Sum of the negative weights' magnitudes.
    double short_fraction() const;

private:
    Vector weights_;
    double gross_exposure_ = 0.0;
    int n_long_ = 0;
    int n_short_ = 0;
};

struct PortfolioRisk {
    double raw_variance = 0.0;  ///< w' S w, negative possible for indefinite S
    double variance = 0.0;      ///< max(raw_variance, 0)
    double annualized_volatility = 0.0;
};

PortfolioRisk portfolio_risk(const AllocationVector& w, const CovarianceEstimate& sigma);
PortfolioRisk portfolio_risk(const Vector& w, const CovarianceEstimate& sigma);

/// Annualized volatility in percent: sqrt(max(var, 0) * periods_per_year) * 100.
double annualized_percent(double variance, int periods_per_year);

/// max_ij |a_ij - b_ij|.
double sup_norm_error(const CovarianceEstimate& a, const CovarianceEstimate& b);
double sup_norm_error(const Matrix& a, const Matrix& b);

struct BoundCheck {
    double lhs = 0.0;    ///< observed gap
    double rhs = 0.0;    ///< allowed gap
    double slack = 0.0;  ///< rhs - lhs
    bool pass = false;
};

/**
 * The three risk-approximation inequalities for exposure bound c and
 * sup-norm covariance error a_n, on raw variances:
 *   |actual - oracle|    <= 2 a_n c^2
 *   |actual - empirical| <=   a_n c^2
 *   |oracle - empirical| <= 3 a_n c^2
 */
struct BoundReport {
    BoundCheck actual_oracle;
    BoundCheck actual_empirical;
    BoundCheck oracle_empirical;

    bool all_pass() const {
        return actual_oracle.pass && actual_empirical.pass && oracle_empirical.pass;
    }
};

BoundReport risk_gap_bounds(double oracle_risk, double actual_risk, double empirical_risk,
                            double a_n, double c);

}  // namespace ge
