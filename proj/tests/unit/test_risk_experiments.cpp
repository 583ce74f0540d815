#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "ge/covariance.hpp"
#include "ge/risk_experiments.hpp"
#include "helpers.hpp"

using namespace ge;

namespace {

const std::vector<double> kGrid{1.0, 1.5, 2.0, 3.0, 4.0, 5.0};

FactorSimConfig small_config(Index p, Index n) {
    FactorSimConfig cfg;
    cfg.p = p;
    cfg.n = n;
    return cfg;
}

}  // namespace

TEST(RiskSweep, TrueEstimateGivesIdenticalRisks) {
    const auto u = draw_universe(small_config(30, 252));
    for (auto solver : {SweepSolver::exact, SweepSolver::lars}) {
        for (const auto& t : risk_sweep(u.true_sigma, u.true_sigma, kGrid, solver)) {
            EXPECT_DOUBLE_EQ(t.actual_risk, t.empirical_risk);
            EXPECT_EQ(t.a_n, 0.0);
            if (solver == SweepSolver::exact) {
                EXPECT_DOUBLE_EQ(t.oracle_risk, t.actual_risk);
            }
        }
    }
}

TEST(RiskSweep, OracleOrderingAndBounds) {
    const auto cfg = small_config(40, 252);
    const auto u = draw_universe(cfg);
    const auto sim = draw_panel(u, cfg, 0);
    const auto sweep = risk_sweep(u.true_sigma, sample_covariance(sim.returns), kGrid);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& t : sweep) {
        EXPECT_LE(t.oracle_risk, t.actual_risk + 1e-9);
        EXPECT_LE(t.oracle_risk, prev + 1e-12);
        EXPECT_GE(t.empirical_risk, 0.0);
        EXPECT_TRUE(t.bounds.all_pass());
        EXPECT_LE(t.gross_exposure, t.c + 1e-9);
        prev = t.oracle_risk;
    }
}

TEST(RiskSweep, LarsActualRiskAtLeastOracle) {
    const auto cfg = small_config(40, 252);
    const auto u = draw_universe(cfg);
    const auto sim = draw_panel(u, cfg, 0);
    for (const auto& t : risk_sweep(u.true_sigma, sample_covariance(sim.returns), kGrid,
                                    SweepSolver::lars)) {
        EXPECT_LE(t.oracle_risk, t.actual_risk + 1e-9);
        EXPECT_LE(t.gross_exposure, t.c + 1e-9);
    }
}

TEST(RiskSweep, RejectsBadGrids) {
    const CovarianceEstimate s(Matrix::Identity(3, 3));
    EXPECT_THROW(risk_sweep(s, s, {}), DataError);
    EXPECT_THROW(risk_sweep(s, s, {0.5, 1.0}), DataError);
    EXPECT_THROW(risk_sweep(s, s, {2.0, 1.0}), DataError);
    EXPECT_THROW(risk_sweep(s, CovarianceEstimate(Matrix::Identity(2, 2)), {1.0}), DataError);
}

TEST(Quantile, LinearInterpolation) {
    EXPECT_DOUBLE_EQ(empirical_quantile({3, 1, 2}, 0.5), 2.0);
    EXPECT_DOUBLE_EQ(empirical_quantile({1, 2, 3, 4}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(empirical_quantile({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}, 0.1), 2.0);
    EXPECT_DOUBLE_EQ(empirical_quantile({5}, 0.9), 5.0);
    EXPECT_THROW(empirical_quantile({}, 0.5), DataError);
}

TEST(Replicate, SingleReplicateQuantilesCoincide) {
    ReplicateOptions opts;
    opts.n_reps = 1;
    const auto r = replicate(small_config(20, 100), opts);
    for (const auto& q : r.quantiles) {
        EXPECT_EQ(q.actual_q10, q.actual_q50);
        EXPECT_EQ(q.actual_q50, q.actual_q90);
    }
}

TEST(Replicate, OrderedQuantilesDeterminismAndBounds) {
    ReplicateOptions opts;
    opts.n_reps = 6;
    opts.estimators = {EstimatorTag::sample, EstimatorTag::factor, EstimatorTag::ewma};
    const auto cfg = small_config(25, 120);
    const auto a = replicate(cfg, opts);
    const auto b = replicate(cfg, opts);
    ASSERT_EQ(a.records.size(), 6u * 3 * kGrid.size());
    ASSERT_EQ(a.quantiles.size(), 3 * kGrid.size());
    for (const auto& q : a.quantiles) {
        EXPECT_LE(q.actual_q10, q.actual_q50);
        EXPECT_LE(q.actual_q50, q.actual_q90);
        EXPECT_LE(q.oracle, q.actual_q10 + 1e-9);
    }
    EXPECT_EQ(a.bound_violations, 0u);
    std::ostringstream sa, sb;
    write_replicate_csv(sa, a.records);
    write_replicate_csv(sb, b.records);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(a.records[7].replicate, 0u);
    EXPECT_EQ(a.records[7].estimator, EstimatorTag::factor);
}

TEST(Replicate, ActualGapWidensWithExposure) {
    // Sample covariance on p = 200, n = 252: the actual - empirical gap at
    // c = 4 exceeds the gap at c = 1.5 in almost every replicate.
    ReplicateOptions opts;
    opts.n_reps = 10;
    opts.c_grid = {1.5, 4.0};
    const auto r = replicate(small_config(200, 252), opts);
    int wider = 0;
    for (std::size_t i = 0; i < r.records.size(); i += 2) {
        const auto& lo = r.records[i].risk;
        const auto& hi = r.records[i + 1].risk;
        if (hi.actual_risk - hi.empirical_risk > lo.actual_risk - lo.empirical_risk) ++wider;
    }
    EXPECT_GE(wider, 9);
}

TEST(Improve, ZeroDKeepsBaseAndRisksMonotone) {
    const auto cfg = small_config(30, 252);
    const auto u = draw_universe(cfg);
    const auto sim = draw_panel(u, cfg, 0);
    const auto base = AllocationVector::equal_weight(30);
    const std::vector<double> grid{0, 0.25, 0.5, 1, 2, 3, 4, 5};
    const auto rep = improve_portfolio(sim.returns, base, u.true_sigma, grid);
    ASSERT_EQ(rep.rows.size(), grid.size());
    const auto& r0 = rep.rows[0];
    EXPECT_EQ(r0.modified, 0);
    EXPECT_EQ(r0.short_percent, 0.0);
    const auto base_risk = annualized_percent(
        portfolio_risk(base, sample_covariance(sim.returns)).variance, 252);
    EXPECT_NEAR(r0.empirical_risk, base_risk, 1e-10);
    EXPECT_NEAR(*r0.actual_risk, annualized_percent(portfolio_risk(base, u.true_sigma).variance, 252),
                1e-10);
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        EXPECT_LE(rep.rows[i].empirical_risk, rep.rows[i - 1].empirical_risk + 1e-10);
        EXPECT_NEAR(rep.rows[i].weights.weights().sum(), 1.0, 1e-12);
    }
}

TEST(Improve, RejectsMismatchedBase) {
    const CovarianceEstimate s(Matrix::Identity(3, 3));
    EXPECT_THROW(improve_portfolio(s, AllocationVector::equal_weight(4), std::nullopt, {0.0}),
                 DataError);
    EXPECT_THROW(improve_portfolio(s, AllocationVector::equal_weight(3), std::nullopt, {-1.0}),
                 DataError);
}

TEST(Convergence, ErrorShrinksWithSampleSize) {
    const auto study = convergence_study(FactorSimConfig{}, {100, 400}, {20, 40}, 5);
    ASSERT_EQ(study.points.size(), 4u);
    EXPECT_GT(study.slope, 0.0);
    EXPECT_GT(study.points[0].median_error, study.points[1].median_error);
    EXPECT_NEAR(study.points[0].rate, std::sqrt(std::log(20.0) / 100), 1e-15);
}

TEST(CsvWriters, HeadersInDocumentedOrder) {
    std::ostringstream a, b, c;
    write_replicate_csv(a, {});
    write_quantile_csv(b, {});
    write_sweep_csv(c, {});
    EXPECT_EQ(a.str().substr(0, 49), "replicate,estimator,c,oracle,actual,empirical,a_n");
    EXPECT_EQ(b.str(), "estimator,c,actual_q10,actual_q50,actual_q90,empirical_median,oracle\n");
    EXPECT_EQ(c.str().substr(0, 29), "c,oracle,actual,empirical,a_n");
}
