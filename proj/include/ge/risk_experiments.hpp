#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ge/core.hpp"
#include "ge/lars.hpp"
#include "ge/simulation.hpp"

namespace ge {

enum class SweepSolver { exact, lars };

std::string_view to_string(SweepSolver solver);
SweepSolver sweep_solver_from_string(std::string_view name);

/**
 * Risks of one exposure bound c. The `*_risk` fields are annualized
 * volatilities in percent; the `*_variance` fields are the per-period
 * quadratic forms they come from (empirical_variance is the raw w'S w and
 * may be slightly negative for an indefinite estimate).
 *
 *   oracle:    optimum for the true covariance, evaluated on it
 *   actual:    optimum for the estimate, evaluated on the true covariance
 *   empirical: optimum for the estimate, evaluated on the estimate
 */
struct RiskTriple {
    double c = 1.0;
    double oracle_risk = 0.0;
    double actual_risk = 0.0;
    double empirical_risk = 0.0;
    double oracle_variance = 0.0;
    double actual_variance = 0.0;
    double empirical_variance = 0.0;
    double a_n = 0.0;
    BoundReport bounds;
    double gross_exposure = 0.0;  ///< of the estimate-based portfolio
    int n_long = 0;
    int n_short = 0;
};

/// Exact optima of the true covariance along an ascending c grid.
std::vector<AllocationVector> oracle_portfolios(const CovarianceEstimate& true_sigma,
                                                const std::vector<double>& c_grid);

/**
 * For each c: optimize on `est_sigma` (exact QP, or the LARS approximation
 * with the estimate's no-short portfolio as the tracked portfolio) and
 * evaluate oracle, actual and empirical risk together with the
 * risk-gap bounds for a_n = max |est - true|.
 */
std::vector<RiskTriple> risk_sweep(const CovarianceEstimate& true_sigma,
                                   const CovarianceEstimate& est_sigma,
                                   const std::vector<double>& c_grid,
                                   SweepSolver solver = SweepSolver::exact);

/// As above with the oracle portfolios already computed (one per c).
std::vector<RiskTriple> risk_sweep(const CovarianceEstimate& true_sigma,
                                   const std::vector<AllocationVector>& oracle,
                                   const CovarianceEstimate& est_sigma,
                                   const std::vector<double>& c_grid,
                                   SweepSolver solver = SweepSolver::exact);

/// Linearly interpolated sample quantile (the "type 7" definition), 0 <= q <= 1.
double empirical_quantile(std::vector<double> values, double q);

struct ReplicateOptions {
    std::size_t n_reps = 101;
    std::vector<double> c_grid{1.0, 1.5, 2.0, 3.0, 4.0, 5.0};
    std::vector<EstimatorTag> estimators{EstimatorTag::sample};
    SweepSolver solver = SweepSolver::exact;
    double ewma_lambda = 0.97;
};

struct ReplicateRecord {
    std::size_t replicate = 0;
    EstimatorTag estimator = EstimatorTag::sample;
    RiskTriple risk;
};

struct QuantileRow {
    EstimatorTag estimator = EstimatorTag::sample;
    double c = 1.0;
    double actual_q10 = 0.0;
    double actual_q50 = 0.0;
    double actual_q90 = 0.0;
    double empirical_median = 0.0;
    double oracle = 0.0;
};

struct ReplicateResult {
    std::vector<ReplicateRecord> records;  ///< ordered by replicate, estimator, c
    std::vector<QuantileRow> quantiles;    ///< ordered by estimator, c
    std::size_t bound_violations = 0;      ///< records whose risk-gap bounds fail
};

/**
 * Monte Carlo over a fixed simulated universe: each replicate draws a new
 * panel, estimates the covariance with every requested estimator (sample,
 * factor or ewma) and runs risk_sweep. Replicates run in parallel; the
 * result depends only on the config and options.
 */
ReplicateResult replicate(const FactorSimConfig& config, const ReplicateOptions& options);

struct ImprovementRow {
    double d = 0.0;
    double implied_c = 1.0;
    int modified = 0;             ///< nonzero tracking coefficients
    double short_percent = 0.0;   ///< total short weight of the portfolio, percent
    double gross_exposure = 1.0;
    double empirical_risk = 0.0;  ///< annualized percent
    std::optional<double> actual_risk;
    AllocationVector weights{Vector::Ones(1)};
};

struct ImprovementReport {
    std::vector<ImprovementRow> rows;
    /// Grid values of d at which the modified count fell below the previous row's.
    std::vector<double> modified_decreases;
};

/**
 * Improves `base` by the tracking-regression path with base as the tracked
 * portfolio, on `est_sigma`. One row per d in `d_grid`.
 */
ImprovementReport improve_portfolio(const CovarianceEstimate& est_sigma, const AllocationVector& base,
                                    const std::optional<CovarianceEstimate>& true_sigma,
                                    const std::vector<double>& d_grid,
                                    const LarsOptions& options = {});

/// Same, on the sample covariance of `panel`.
ImprovementReport improve_portfolio(const ReturnPanel& panel, const AllocationVector& base,
                                    const std::optional<CovarianceEstimate>& true_sigma,
                                    const std::vector<double>& d_grid,
                                    const LarsOptions& options = {});

struct ConvergencePoint {
    Index n = 0;
    Index p = 0;
    double rate = 0.0;          ///< sqrt(log p / n)
    double median_error = 0.0;  ///< median over replicates of max |S_n - Sigma|
};

struct ConvergenceStudy {
    std::vector<ConvergencePoint> points;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/**
 * Sample-covariance sup-norm error against the true covariance on the
 * simulated factor model, for every (n, p) pair, followed by a least-squares
 * line through (rate, median_error).
 */
ConvergenceStudy convergence_study(const FactorSimConfig& config, const std::vector<Index>& ns,
                                   const std::vector<Index>& ps, std::size_t n_reps);

/// Columns: replicate, estimator, c, oracle, actual, empirical, a_n, three bound slacks, bounds_ok.
void write_replicate_csv(std::ostream& out, const std::vector<ReplicateRecord>& records);
/// Columns: estimator, c, actual_q10, actual_q50, actual_q90, empirical_median, oracle.
void write_quantile_csv(std::ostream& out, const std::vector<QuantileRow>& rows);
/// Columns: c, oracle, actual, empirical, a_n, bound slacks, gross_exposure, n_long, n_short.
void write_sweep_csv(std::ostream& out, const std::vector<RiskTriple>& sweep);
/// Columns: d, implied_c, modified, short_percent, gross_exposure, empirical_risk, actual_risk.
void write_improvement_csv(std::ostream& out, const ImprovementReport& report);

}  // namespace ge
