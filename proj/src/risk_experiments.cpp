#include "ge/risk_experiments.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ge/covariance.hpp"
#include "ge/csv_io.hpp"
#include "ge/parallel.hpp"
#include "ge/qp.hpp"

namespace ge {

std::string_view to_string(SweepSolver solver) {
    return solver == SweepSolver::exact ? "exact" : "lars";
}

SweepSolver sweep_solver_from_string(std::string_view name) {
    if (name == "exact") return SweepSolver::exact;
    if (name == "lars") return SweepSolver::lars;
    throw DataError("unknown solver '" + std::string(name) + "' (expected exact or lars)");
}

namespace {

void check_grid(const std::vector<double>& c_grid) {
    if (c_grid.empty()) throw DataError("c grid is empty");
    if (!(c_grid.front() >= 1.0)) throw DataError("c grid values must be >= 1");
    for (std::size_t i = 1; i < c_grid.size(); ++i) {
        if (!(c_grid[i] >= c_grid[i - 1])) throw DataError("c grid must be sorted ascending");
    }
}

std::vector<AllocationVector> exact_portfolios(const CovarianceEstimate& sigma,
                                               const std::vector<double>& c_grid) {
    ActiveSetSolver solver;
    std::vector<AllocationVector> out;
    for (auto& s : solver.solve_path(QpProblem(sigma, c_grid.front()), c_grid)) {
        out.push_back(std::move(s.weights));
    }
    return out;
}

std::vector<AllocationVector> lars_portfolios(const CovarianceEstimate& sigma,
                                              const std::vector<double>& c_grid) {
    const auto base = solve_no_short(sigma);
    const SolutionPath path = lars_path(transform_regression(sigma, base.weights));
    std::vector<AllocationVector> out;
    for (double c : c_grid) out.push_back(approx_solution_at(path, c).weights);
    return out;
}

CovarianceEstimate estimate(EstimatorTag tag, const SimulatedPanel& panel, double lambda) {
    switch (tag) {
        case EstimatorTag::sample:
            return sample_covariance(panel.returns);
        case EstimatorTag::factor:
            return factor_covariance(panel.returns, panel.factors).estimate;
        case EstimatorTag::ewma:
            return ewma_covariance(panel.returns, lambda);
        default:
            throw DataError("estimator '" + std::string(to_string(tag)) +
                            "' is not available for simulated replicates");
    }
}

double median(std::vector<double> v) { return empirical_quantile(std::move(v), 0.5); }

}  // namespace

std::vector<AllocationVector> oracle_portfolios(const CovarianceEstimate& true_sigma,
                                                const std::vector<double>& c_grid) {
    check_grid(c_grid);
    return exact_portfolios(true_sigma, c_grid);
}

std::vector<RiskTriple> risk_sweep(const CovarianceEstimate& true_sigma,
                                   const CovarianceEstimate& est_sigma,
                                   const std::vector<double>& c_grid, SweepSolver solver) {
    check_grid(c_grid);
    return risk_sweep(true_sigma, oracle_portfolios(true_sigma, c_grid), est_sigma, c_grid,
                      solver);
}

std::vector<RiskTriple> risk_sweep(const CovarianceEstimate& true_sigma,
                                   const std::vector<AllocationVector>& oracle,
                                   const CovarianceEstimate& est_sigma,
                                   const std::vector<double>& c_grid, SweepSolver solver) {
    check_grid(c_grid);
    if (true_sigma.dim() != est_sigma.dim()) {
        throw DataError("true and estimated covariance differ in dimension");
    }
    if (oracle.size() != c_grid.size()) throw DataError("one oracle portfolio per c is required");

    const auto chosen = solver == SweepSolver::exact ? exact_portfolios(est_sigma, c_grid)
                                                     : lars_portfolios(est_sigma, c_grid);
    const double a_n = sup_norm_error(est_sigma, true_sigma);
    const int ppy = true_sigma.periods_per_year();

    std::vector<RiskTriple> out;
    out.reserve(c_grid.size());
    for (std::size_t k = 0; k < c_grid.size(); ++k) {
        RiskTriple t;
        t.c = c_grid[k];
        t.oracle_variance = portfolio_risk(oracle[k], true_sigma).raw_variance;
        t.actual_variance = portfolio_risk(chosen[k], true_sigma).raw_variance;
        t.empirical_variance = portfolio_risk(chosen[k], est_sigma).raw_variance;
        t.oracle_risk = annualized_percent(t.oracle_variance, ppy);
        t.actual_risk = annualized_percent(t.actual_variance, ppy);
        t.empirical_risk = annualized_percent(t.empirical_variance, ppy);
        t.a_n = a_n;
        t.bounds = risk_gap_bounds(t.oracle_variance, t.actual_variance, t.empirical_variance,
                                   a_n, t.c);
        t.gross_exposure = chosen[k].gross_exposure();
        t.n_long = chosen[k].n_long();
        t.n_short = chosen[k].n_short();
        out.push_back(t);
    }
    return out;
}

double empirical_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw DataError("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw DataError("quantile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ReplicateResult replicate(const FactorSimConfig& config, const ReplicateOptions& options) {
    if (options.n_reps < 1) throw DataError("at least one replicate is required");
    if (options.estimators.empty()) throw DataError("no estimators requested");
    check_grid(options.c_grid);

    const Universe universe = draw_universe(config);
    const auto oracle = oracle_portfolios(universe.true_sigma, options.c_grid);

    auto per_rep = parallel_map(options.n_reps, [&](std::size_t r) {
        const SimulatedPanel panel = draw_panel(universe, config, r);
        std::vector<ReplicateRecord> records;
        for (EstimatorTag tag : options.estimators) {
            const CovarianceEstimate est = estimate(tag, panel, options.ewma_lambda);
            for (const auto& t :
                 risk_sweep(universe.true_sigma, oracle, est, options.c_grid, options.solver)) {
                records.push_back(ReplicateRecord{r, tag, t});
            }
        }
        return records;
    });

    ReplicateResult result;
    for (auto& rep : per_rep) {
        for (auto& rec : rep) {
            if (!rec.risk.bounds.all_pass()) ++result.bound_violations;
            result.records.push_back(std::move(rec));
        }
    }

    const std::size_t n_c = options.c_grid.size();
    const std::size_t n_e = options.estimators.size();
    for (std::size_t e = 0; e < n_e; ++e) {
        for (std::size_t k = 0; k < n_c; ++k) {
            std::vector<double> actual, empirical;
            double oracle_risk = 0.0;
            for (std::size_t r = 0; r < options.n_reps; ++r) {
                const auto& t = result.records[(r * n_e + e) * n_c + k].risk;
                actual.push_back(t.actual_risk);
                empirical.push_back(t.empirical_risk);
                oracle_risk = t.oracle_risk;
            }
            QuantileRow row;
            row.estimator = options.estimators[e];
            row.c = options.c_grid[k];
            row.actual_q10 = empirical_quantile(actual, 0.1);
            row.actual_q50 = empirical_quantile(actual, 0.5);
            row.actual_q90 = empirical_quantile(actual, 0.9);
            row.empirical_median = median(std::move(empirical));
            row.oracle = oracle_risk;
            result.quantiles.push_back(row);
        }
    }
    return result;
}

ImprovementReport improve_portfolio(const CovarianceEstimate& est_sigma, const AllocationVector& base,
                                    const std::optional<CovarianceEstimate>& true_sigma,
                                    const std::vector<double>& d_grid,
                                    const LarsOptions& options) {
    if (base.size() != est_sigma.dim()) {
        throw DataError("base portfolio has " + std::to_string(base.size()) +
                        " weights for a " + std::to_string(est_sigma.dim()) + "-asset covariance");
    }
    if (true_sigma && true_sigma->dim() != est_sigma.dim()) {
        throw DataError("true covariance dimension does not match the estimate");
    }
    for (double d : d_grid) {
        if (!(d >= 0.0)) throw DataError("d grid values must be nonnegative");
    }
    const TrackingProblem tp = transform_regression(est_sigma, base);
    LarsOptions opts = options;
    if (!d_grid.empty()) {
        opts.max_d = std::min(opts.max_d, *std::max_element(d_grid.begin(), d_grid.end()));
    }
    const SolutionPath path = lars_path(tp, opts);

    ImprovementReport report;
    for (double d : d_grid) {
        const Vector w_star = path.coefficients_at(std::min(d, path.max_d()));
        ImprovementRow row;
        row.d = d;
        row.implied_c = implied_exposure(w_star);
        row.modified = static_cast<int>((w_star.array() != 0.0).count());
        row.weights = AllocationVector::renormalized(tp.assemble(w_star));
        row.short_percent = 100.0 * row.weights.short_fraction();
        row.gross_exposure = row.weights.gross_exposure();
        row.empirical_risk = annualized_percent(portfolio_risk(row.weights, est_sigma).variance,
                                                est_sigma.periods_per_year());
        if (true_sigma) {
            row.actual_risk = annualized_percent(portfolio_risk(row.weights, *true_sigma).variance,
                                                 true_sigma->periods_per_year());
        }
        if (!report.rows.empty() && row.modified < report.rows.back().modified) {
            report.modified_decreases.push_back(d);
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

ImprovementReport improve_portfolio(const ReturnPanel& panel, const AllocationVector& base,
                                    const std::optional<CovarianceEstimate>& true_sigma,
                                    const std::vector<double>& d_grid,
                                    const LarsOptions& options) {
    return improve_portfolio(sample_covariance(panel), base, true_sigma, d_grid, options);
}

ConvergenceStudy convergence_study(const FactorSimConfig& config, const std::vector<Index>& ns,
                                   const std::vector<Index>& ps, std::size_t n_reps) {
    if (ns.empty() || ps.empty()) throw DataError("convergence grid is empty");
    if (n_reps < 1) throw DataError("at least one replicate is required");
    ConvergenceStudy study;
    for (Index p : ps) {
        FactorSimConfig cfg = config;
        cfg.p = p;
        const Universe universe = draw_universe(cfg);
        for (Index n : ns) {
            cfg.n = n;
            auto errors = parallel_map(n_reps, [&](std::size_t r) {
                const SimulatedPanel panel = draw_panel(universe, cfg, r);
                return sup_norm_error(sample_covariance_matrix(panel.returns.returns()),
                                      universe.true_sigma.matrix());
            });
            study.points.push_back(ConvergencePoint{
                n, p, std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n)),
                median(std::move(errors))});
        }
    }
    const auto m = static_cast<double>(study.points.size());
    double sx = 0, sy = 0;
    for (const auto& pt : study.points) {
        sx += pt.rate;
        sy += pt.median_error;
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& pt : study.points) {
        sxx += (pt.rate - mx) * (pt.rate - mx);
        sxy += (pt.rate - mx) * (pt.median_error - my);
        syy += (pt.median_error - my) * (pt.median_error - my);
    }
    study.slope = sxx > 0 ? sxy / sxx : 0.0;
    study.intercept = my - study.slope * mx;
    study.r_squared = (sxx > 0 && syy > 0) ? (sxy * sxy) / (sxx * syy) : 0.0;
    return study;
}

namespace {

using csv::format_double;

void write_slacks(std::ostream& out, const BoundReport& b) {
    out << ',' << format_double(b.actual_oracle.slack) << ','
        << format_double(b.actual_empirical.slack) << ','
        << format_double(b.oracle_empirical.slack);
}

}  // namespace

void write_replicate_csv(std::ostream& out, const std::vector<ReplicateRecord>& records) {
    out << "replicate,estimator,c,oracle,actual,empirical,a_n,slack_actual_oracle,"
           "slack_actual_empirical,slack_oracle_empirical,bounds_ok\n";
    for (const auto& r : records) {
        const auto& t = r.risk;
        out << r.replicate << ',' << to_string(r.estimator) << ',' << format_double(t.c) << ','
            << format_double(t.oracle_risk) << ',' << format_double(t.actual_risk) << ','
            << format_double(t.empirical_risk) << ',' << format_double(t.a_n);
        write_slacks(out, t.bounds);
        out << ',' << (t.bounds.all_pass() ? 1 : 0) << '\n';
    }
}

void write_quantile_csv(std::ostream& out, const std::vector<QuantileRow>& rows) {
    out << "estimator,c,actual_q10,actual_q50,actual_q90,empirical_median,oracle\n";
    for (const auto& q : rows) {
        out << to_string(q.estimator) << ',' << format_double(q.c) << ','
            << format_double(q.actual_q10) << ',' << format_double(q.actual_q50) << ','
            << format_double(q.actual_q90) << ',' << format_double(q.empirical_median) << ','
            << format_double(q.oracle) << '\n';
    }
}

void write_sweep_csv(std::ostream& out, const std::vector<RiskTriple>& sweep) {
    out << "c,oracle,actual,empirical,a_n,slack_actual_oracle,slack_actual_empirical,"
           "slack_oracle_empirical,gross_exposure,n_long,n_short\n";
    for (const auto& t : sweep) {
        out << format_double(t.c) << ',' << format_double(t.oracle_risk) << ','
            << format_double(t.actual_risk) << ',' << format_double(t.empirical_risk) << ','
            << format_double(t.a_n);
        write_slacks(out, t.bounds);
        out << ',' << format_double(t.gross_exposure) << ',' << t.n_long << ',' << t.n_short
            << '\n';
    }
}

void write_improvement_csv(std::ostream& out, const ImprovementReport& report) {
    out << "d,implied_c,modified,short_percent,gross_exposure,empirical_risk,actual_risk\n";
    for (const auto& r : report.rows) {
        out << format_double(r.d) << ',' << format_double(r.implied_c) << ',' << r.modified << ','
            << format_double(r.short_percent) << ',' << format_double(r.gross_exposure) << ','
            << format_double(r.empirical_risk) << ','
            << (r.actual_risk ? format_double(*r.actual_risk) : std::string()) << '\n';
    }
}

}  // namespace ge
