#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "ge/backtest.hpp"
#include "ge/simulation.hpp"
#include "helpers.hpp"

using namespace ge;

namespace {

BacktestConfig config(Strategy s, Index window = 60, Index rebalance = 20) {
    BacktestConfig c;
    c.estimation_window = window;
    c.rebalance_frequency = rebalance;
    c.strategy = std::move(s);
    return c;
}

SimulatedPanel simulated(Index p, Index n, std::uint64_t seed) {
    FactorSimConfig cfg;
    cfg.p = p;
    cfg.n = n;
    cfg.seed = seed;
    return draw_panel(draw_universe(cfg), cfg, 0);
}

}  // namespace

TEST(Backtest, ConstantPanelHasZeroVolatility) {
    const ReturnPanel panel(Matrix::Constant(100, 2, 0.001), {"a", "b"});
    for (auto s : {Strategy::equal_weight(), Strategy::no_short(), Strategy::exact_qp(2.0)}) {
        const auto rep = run_backtest(panel, config(s));
        EXPECT_NEAR(rep.annualized_mean, 100 * 0.001 * 252, 1e-9) << rep.label;
        EXPECT_NEAR(rep.annualized_volatility, 0.0, 1e-9) << rep.label;
    }
}

TEST(Backtest, NoShortOnDiagonalFavoursLowVariance) {
    std::mt19937_64 rng(41);
    Matrix r = testutil::random_returns(rng, 200, 4);
    r.col(0) *= 0.2;  // lowest-variance asset
    r.col(3) *= 3.0;
    const ReturnPanel panel(r, testutil::ids(4));
    const auto rep = run_backtest(panel, config(Strategy::no_short(), 100, 25));
    for (const auto& rec : rep.per_rebalance) {
        EXPECT_GE(rec.weights.weights().minCoeff(), 0.0);
        EXPECT_LE(rec.max_weight, 1.0 + 1e-12);
        EXPECT_EQ(rec.max_weight, rec.weights[0]);
        EXPECT_EQ(rec.n_short, 0);
    }
}

TEST(Backtest, EqualWeightBenchmark) {
    std::mt19937_64 rng(42);
    const ReturnPanel panel(testutil::random_returns(rng, 120, 5), testutil::ids(5));
    const auto rep = equal_weight_benchmark(panel, config(Strategy::no_short()));
    EXPECT_EQ(rep.n_long, 5);
    EXPECT_EQ(rep.n_short, 0);
    for (const auto& rec : rep.per_rebalance) EXPECT_DOUBLE_EQ(rec.weights[3], 0.2);
    const Vector expect = panel.returns().bottomRows(60).rowwise().mean();
    EXPECT_LE((rep.realized - expect).cwiseAbs().maxCoeff(), 1e-16);
}

TEST(Backtest, SingleAssetIsTheAsset) {
    std::mt19937_64 rng(43);
    const ReturnPanel panel(testutil::random_returns(rng, 90, 1), {"only"});
    const auto rep = equal_weight_benchmark(panel, config(Strategy::no_short(), 30, 7));
    EXPECT_EQ(rep.realized, panel.returns().col(0).tail(60));
}

TEST(Backtest, ScheduleAndStatistics) {
    std::mt19937_64 rng(44);
    const ReturnPanel panel(testutil::random_returns(rng, 130, 3), testutil::ids(3), 12);
    const auto rep = run_backtest(panel, config(Strategy::exact_qp(1.5), 60, 20));
    ASSERT_EQ(rep.per_rebalance.size(), 4u);  // rows 60, 80, 100, 120 (last holds 10 rows)
    EXPECT_EQ(rep.per_rebalance[3].period, 120);
    EXPECT_EQ(rep.realized.size(), 70);
    const double mean = rep.realized.mean();
    const double sd = std::sqrt((rep.realized.array() - mean).square().mean());
    EXPECT_NEAR(rep.annualized_mean, 100 * 12 * mean, 1e-12);
    EXPECT_NEAR(rep.annualized_volatility, 100 * std::sqrt(12.0) * sd, 1e-12);
    EXPECT_NEAR(rep.sharpe, rep.annualized_mean / rep.annualized_volatility, 1e-12);
}

TEST(Backtest, NoLookAhead) {
    const auto sim = simulated(15, 400, 3);
    const auto full = run_backtest(sim.returns, config(Strategy::exact_qp(2.0), 100, 30));
    const auto cut = run_backtest(sim.returns.rows(0, 250), config(Strategy::exact_qp(2.0), 100, 30));
    ASSERT_LT(cut.per_rebalance.size(), full.per_rebalance.size());
    for (std::size_t i = 0; i < cut.per_rebalance.size(); ++i) {
        EXPECT_EQ(cut.per_rebalance[i].weights.weights(), full.per_rebalance[i].weights.weights());
    }
}

TEST(Backtest, ReproducibleAndExposureCompliant) {
    const auto sim = simulated(40, 500, 4);
    std::vector<BacktestConfig> cfgs{config(Strategy::exact_qp(1.7), 150, 50),
                                     config(Strategy::lars_approx(1.7), 150, 50),
                                     config(Strategy::lars_approx(1.7, TrackedPortfolio::named_index, "A5"), 150, 50)};
    const auto a = run_backtests(sim.returns, cfgs);
    const auto b = run_backtests(sim.returns, cfgs);
    for (std::size_t k = 0; k < a.size(); ++k) {
        std::ostringstream x, y;
        write_rebalance_csv(x, a[k], sim.returns.asset_ids());
        write_rebalance_csv(y, b[k], sim.returns.asset_ids());
        EXPECT_EQ(x.str(), y.str());
        for (const auto& rec : a[k].per_rebalance) {
            EXPECT_LE(rec.weights.gross_exposure(), 1.7 + 1e-6) << a[k].label;
        }
    }
    EXPECT_EQ(a[2].label, "lars_approx(c=1.7;y=A5)");
}

TEST(Backtest, FactorEstimatorNeedsAlignedFactors) {
    const auto sim = simulated(10, 200, 5);
    auto cfg = config(Strategy::no_short(), 60, 20);
    cfg.estimator = EstimatorTag::factor;
    EXPECT_THROW(run_backtest(sim.returns, cfg), DataError);
    const ReturnPanel short_factors = sim.factors.rows(0, 150);
    EXPECT_THROW(run_backtest(sim.returns, cfg, &short_factors), DataError);
    const auto rep = run_backtest(sim.returns, cfg, &sim.factors);
    EXPECT_EQ(rep.per_rebalance.size(), 7u);
}

TEST(Backtest, EstimationWindowSmallerThanUniverse) {
    const auto sim = simulated(50, 200, 6);
    const auto rep = run_backtest(sim.returns, config(Strategy::exact_qp(3.0), 30, 20));
    for (const auto& rec : rep.per_rebalance) EXPECT_LE(rec.weights.gross_exposure(), 3.0 + 1e-6);
}

TEST(Backtest, InsufficientHistory) {
    const ReturnPanel panel(Matrix::Zero(50, 2), {"a", "b"});
    EXPECT_THROW(run_backtest(panel, config(Strategy::no_short(), 40, 20)), DataError);
    EXPECT_THROW(run_backtest(panel, config(Strategy::no_short(), 1, 20)), DataError);
    EXPECT_THROW(run_backtest(panel, config(Strategy::exact_qp(0.5), 20, 5)), DataError);
}

TEST(Backtest, AggregateCsvColumns) {
    const ReturnPanel panel(Matrix::Constant(60, 2, 0.0), {"a", "b"});
    std::ostringstream out;
    write_aggregate_csv(out, {equal_weight_benchmark(panel, config(Strategy::no_short(), 20, 10))});
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
              "strategy,mean,std_dev,sharpe,max_weight,min_weight,n_long,n_short");
}
