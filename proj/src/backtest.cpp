#include "ge/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "ge/covariance.hpp"
#include "ge/csv_io.hpp"
#include "ge/lars.hpp"
#include "ge/parallel.hpp"
#include "ge/qp.hpp"

namespace ge {

std::string Strategy::label() const {
    switch (kind) {
        case StrategyKind::no_short: return "no_short";
        case StrategyKind::exact_qp: return "exact_qp(c=" + csv::format_double(c) + ")";
        case StrategyKind::lars_approx:
            return "lars_approx(c=" + csv::format_double(c) +
                   (tracked == TrackedPortfolio::named_index ? ";y=" + index_asset : "") + ")";
        case StrategyKind::equal_weight: return "equal_weight";
    }
    return "unknown";
}

namespace {

void check_config(const ReturnPanel& panel, const BacktestConfig& config) {
    if (config.estimation_window < 2) throw DataError("estimation window must be >= 2 periods");
    if (config.rebalance_frequency < 1) throw DataError("rebalance frequency must be >= 1 period");
    if (panel.periods() < config.estimation_window + config.rebalance_frequency) {
        throw DataError("insufficient history: " + std::to_string(panel.periods()) +
                        " periods for a " + std::to_string(config.estimation_window) +
                        "-period window plus one " +
                        std::to_string(config.rebalance_frequency) + "-period holding");
    }
    const Strategy& s = config.strategy;
    if ((s.kind == StrategyKind::exact_qp || s.kind == StrategyKind::lars_approx) && !(s.c >= 1.0)) {
        throw DataError("strategy exposure bound c must be >= 1");
    }
}

CovarianceEstimate estimate_window(const ReturnPanel& panel, const ReturnPanel* factors,
                                   const BacktestConfig& config, Index begin) {
    const ReturnPanel window = panel.rows(begin, config.estimation_window);
    switch (config.estimator) {
        case EstimatorTag::sample:
            return sample_covariance(window);
        case EstimatorTag::ewma:
            return ewma_covariance(window, config.ewma_lambda);
        case EstimatorTag::factor:
            return factor_covariance(window, factors->rows(begin, config.estimation_window))
                .estimate;
        default:
            throw DataError("backtest estimator must be sample, factor or ewma");
    }
}

Index asset_index(const ReturnPanel& panel, const std::string& id) {
    const auto& ids = panel.asset_ids();
    const auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) throw DataError("index asset '" + id + "' is not in the panel");
    return static_cast<Index>(it - ids.begin());
}

AllocationVector choose_weights(const CovarianceEstimate& sigma, const Strategy& s,
                                const ReturnPanel& panel) {
    switch (s.kind) {
        case StrategyKind::no_short:
            return solve_no_short(sigma).weights;
        case StrategyKind::exact_qp:
            return solve(QpProblem(sigma, s.c)).weights;
        case StrategyKind::lars_approx: {
            const TrackingProblem tp =
                s.tracked == TrackedPortfolio::named_index
                    ? transform_regression(sigma, asset_index(panel, s.index_asset))
                    : transform_regression(sigma, solve_no_short(sigma).weights);
            return approx_solution_at(lars_path(tp), s.c).weights;
        }
        case StrategyKind::equal_weight:
            return AllocationVector::equal_weight(sigma.dim());
    }
    throw DataError("unknown strategy");
}

void summarize(BacktestReport& report, int ppy) {
    const Index n = report.realized.size();
    const double mean = report.realized.mean();
    const double var = (report.realized.array() - mean).square().sum() / static_cast<double>(n);
    report.annualized_mean = 100.0 * mean * ppy;
    report.annualized_volatility = 100.0 * std::sqrt(var * ppy);
    report.sharpe = report.annualized_volatility > 0.0
                        ? report.annualized_mean / report.annualized_volatility
                        : std::numeric_limits<double>::quiet_NaN();
    double max_w = 0, min_w = 0, n_long = 0, n_short = 0;
    for (const auto& r : report.per_rebalance) {
        max_w += r.max_weight;
        min_w += r.min_weight;
        n_long += r.n_long;
        n_short += r.n_short;
    }
    const auto k = static_cast<double>(report.per_rebalance.size());
    report.max_weight = max_w / k;
    report.min_weight = min_w / k;
    report.n_long = static_cast<int>(std::lround(n_long / k));
    report.n_short = static_cast<int>(std::lround(n_short / k));
}

}  // namespace

BacktestReport run_backtest(const ReturnPanel& panel, const BacktestConfig& config,
                            const ReturnPanel* factors) {
    check_config(panel, config);
    if (config.estimator == EstimatorTag::factor && config.strategy.kind != StrategyKind::equal_weight) {
        if (factors == nullptr) {
            throw DataError("factor estimator needs a factor panel aligned with the returns");
        }
        if (factors->periods() != panel.periods()) {
            throw DataError("factor panel has " + std::to_string(factors->periods()) +
                            " periods, return panel has " + std::to_string(panel.periods()));
        }
    }

    const Matrix& r = panel.returns();
    const Index T = panel.periods();
    const Index W = config.estimation_window;
    const Index h = config.rebalance_frequency;

    BacktestReport report;
    report.label = config.strategy.label();
    report.realized.resize(T - W);
    for (Index t = W; t < T; t += h) {
        const std::string& date = panel.dates()[static_cast<std::size_t>(t)];
        AllocationVector w = AllocationVector::equal_weight(panel.assets());
        if (config.strategy.kind != StrategyKind::equal_weight) {
            try {
                w = choose_weights(estimate_window(panel, factors, config, t - W), config.strategy,
                                   panel);
            } catch (const NumericalError& e) {
                throw NumericalError("rebalance at " + date + ": " + e.what());
            } catch (const DataError& e) {
                throw DataError("rebalance at " + date + ": " + e.what());
            }
        }
        const Index end = std::min(t + h, T);
        for (Index s = t; s < end; ++s) report.realized[s - W] = r.row(s).dot(w.weights());
        RebalanceRecord rec;
        rec.period = t;
        rec.date = date;
        rec.max_weight = w.weights().maxCoeff();
        rec.min_weight = w.weights().minCoeff();
        rec.n_long = w.n_long();
        rec.n_short = w.n_short();
        rec.weights = std::move(w);
        report.per_rebalance.push_back(std::move(rec));
    }
    report.realized_dates.assign(panel.dates().begin() + W, panel.dates().end());
    summarize(report, panel.periods_per_year());
    return report;
}

BacktestReport equal_weight_benchmark(const ReturnPanel& panel, const BacktestConfig& config) {
    BacktestConfig cfg = config;
    cfg.strategy = Strategy::equal_weight();
    return run_backtest(panel, cfg);
}

std::vector<BacktestReport> run_backtests(const ReturnPanel& panel,
                                          const std::vector<BacktestConfig>& configs,
                                          const ReturnPanel* factors) {
    return parallel_map(configs.size(),
                        [&](std::size_t i) { return run_backtest(panel, configs[i], factors); });
}

void write_rebalance_csv(std::ostream& out, const BacktestReport& report,
                         const std::vector<std::string>& asset_ids) {
    out << "period,date,gross_exposure,max_weight,min_weight,n_long,n_short";
    for (const auto& id : asset_ids) out << ',' << id;
    out << '\n';
    for (const auto& r : report.per_rebalance) {
        out << r.period << ',' << r.date << ',' << csv::format_double(r.weights.gross_exposure())
            << ',' << csv::format_double(r.max_weight) << ',' << csv::format_double(r.min_weight)
            << ',' << r.n_long << ',' << r.n_short;
        for (Index i = 0; i < r.weights.size(); ++i) out << ',' << csv::format_double(r.weights[i]);
        out << '\n';
    }
}

void write_aggregate_csv(std::ostream& out, const std::vector<BacktestReport>& reports) {
    out << "strategy,mean,std_dev,sharpe,max_weight,min_weight,n_long,n_short\n";
    for (const auto& r : reports) {
        out << r.label << ',' << csv::format_double(r.annualized_mean) << ','
            << csv::format_double(r.annualized_volatility) << ',' << csv::format_double(r.sharpe)
            << ',' << csv::format_double(r.max_weight) << ',' << csv::format_double(r.min_weight)
            << ',' << r.n_long << ',' << r.n_short << '\n';
    }
}

void write_realized_csv(std::ostream& out, const BacktestReport& report) {
    out << "date,return\n";
    for (Index i = 0; i < report.realized.size(); ++i) {
        out << report.realized_dates[static_cast<std::size_t>(i)] << ','
            << csv::format_double(report.realized[i]) << '\n';
    }
}

}  // namespace ge
