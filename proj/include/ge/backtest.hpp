#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ge/core.hpp"

namespace ge {

enum class StrategyKind { no_short, exact_qp, lars_approx, equal_weight };

/// Tracked portfolio for the LARS strategy: the window's no-short optimum or one named asset.
enum class TrackedPortfolio { no_short_portfolio, named_index };

struct Strategy {
    StrategyKind kind = StrategyKind::no_short;
    double c = 1.0;
    TrackedPortfolio tracked = TrackedPortfolio::no_short_portfolio;
    std::string index_asset;  ///< asset id when tracked == named_index

    static Strategy no_short() { return {}; }
    static Strategy exact_qp(double c) { return {StrategyKind::exact_qp, c, {}, {}}; }
    static Strategy lars_approx(double c, TrackedPortfolio tracked = TrackedPortfolio::no_short_portfolio,
                                std::string index_asset = {}) {
        return {StrategyKind::lars_approx, c, tracked, std::move(index_asset)};
    }
    static Strategy equal_weight() { return {StrategyKind::equal_weight, 1.0, {}, {}}; }

    /// e.g. "no_short", "exact_qp(c=2)", "lars_approx(c=1.5)".
    std::string label() const;
};

struct BacktestConfig {
    Index estimation_window = 252;
    Index rebalance_frequency = 21;
    EstimatorTag estimator = EstimatorTag::sample;
    Strategy strategy;
    double ewma_lambda = 0.97;
};

struct RebalanceRecord {
    Index period = 0;  ///< first row held with these weights
    std::string date;
    AllocationVector weights{Vector::Ones(1)};
    double max_weight = 0.0;
    double min_weight = 0.0;
    int n_long = 0;
    int n_short = 0;
};

/**
 * Out-of-sample result. Mean and volatility are annualized percent
 * (mean x periods_per_year, sd x sqrt(periods_per_year), sd with divisor
 * T); the Sharpe ratio is their quotient, with no risk-free rate (NaN when
 * the volatility is zero). max/min weight and the position counts are
 * averages over the rebalances, the counts rounded to the nearest integer.
 */
struct BacktestReport {
    std::string label;
    std::vector<RebalanceRecord> per_rebalance;
    Vector realized;  ///< one return per out-of-sample period
    std::vector<std::string> realized_dates;
    double annualized_mean = 0.0;
    double annualized_volatility = 0.0;
    double sharpe = 0.0;
    double max_weight = 0.0;
    double min_weight = 0.0;
    int n_long = 0;
    int n_short = 0;
};

/**
 * Rolling backtest: at rows t = W, W + h, ... the covariance is estimated
 * from rows [t - W, t), the strategy is solved and the weights are held
 * unchanged over rows [t, t + h). A factor estimator needs `factors`
 * aligned row by row with the panel.
 */
BacktestReport run_backtest(const ReturnPanel& panel, const BacktestConfig& config,
                            const ReturnPanel* factors = nullptr);

/// Weights 1/p on the same schedule.
BacktestReport equal_weight_benchmark(const ReturnPanel& panel, const BacktestConfig& config);

/// Several configurations over one panel, run concurrently; results in input order.
std::vector<BacktestReport> run_backtests(const ReturnPanel& panel,
                                          const std::vector<BacktestConfig>& configs,
                                          const ReturnPanel* factors = nullptr);

/// Columns: period, date, gross_exposure, max_weight, min_weight, n_long, n_short, one per asset.
void write_rebalance_csv(std::ostream& out, const BacktestReport& report,
                         const std::vector<std::string>& asset_ids);
/// Columns: strategy, mean, std_dev, sharpe, max_weight, min_weight, n_long, n_short.
void write_aggregate_csv(std::ostream& out, const std::vector<BacktestReport>& reports);
/// Columns: date, return.
void write_realized_csv(std::ostream& out, const BacktestReport& report);

}  // namespace ge
