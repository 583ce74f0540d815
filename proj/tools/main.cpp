// gexp: command-line front end for the gross-exposure portfolio library.
//
// Every command writes its CSV outputs and a manifest.json into --out.
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ge/backtest.hpp"
#include "ge/core.hpp"
#include "ge/covariance.hpp"
#include "ge/csv_io.hpp"
#include "ge/lars.hpp"
#include "ge/qp.hpp"
#include "ge/risk_experiments.hpp"
#include "ge/simulation.hpp"
#include "manifest.hpp"

namespace {

using namespace ge;
using gexp::Manifest;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    for (const auto& cell : csv::split_line(text)) {
        out.push_back(csv::parse_double(cell, std::string("--") + what));
    }
    if (out.empty()) throw UsageError(std::string("--") + what + " is empty");
    return out;
}

std::vector<std::string> parse_names(const std::string& text) {
    auto out = csv::split_line(text);
    out.erase(std::remove(out.begin(), out.end(), std::string()), out.end());
    return out;
}

class OutputDir {
public:
    OutputDir(std::string dir, Manifest& manifest) : dir_(std::move(dir)), manifest_(manifest) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw DataError("cannot create output directory '" + dir_ + "': " + ec.message());
    }

    std::ofstream open(const std::string& name) {
        const auto path = fs::path(dir_) / name;
        std::ofstream out(path);
        if (!out) throw DataError("cannot write '" + path.string() + "'");
        manifest_.add_output(name);
        return out;
    }

    void finish() const { manifest_.write(dir_); }

private:
    std::string dir_;
    Manifest& manifest_;
};

struct LoadedCov {
    CovarianceEstimate sigma;
    std::vector<std::string> ids;
};

LoadedCov load_cov(const std::string& path, int ppy, const std::string& role, Manifest& m) {
    m.add_input(role, path);
    auto lm = csv::read_matrix_file(path);
    return {CovarianceEstimate(lm.values, EstimatorTag::exogenous, ppy), std::move(lm.ids)};
}

ReturnPanel load_panel(const std::string& path, int ppy, const std::string& role, Manifest& m) {
    m.add_input(role, path);
    return csv::read_panel_file(path, ppy);
}

CovarianceEstimate estimate_from_panel(const ReturnPanel& panel, EstimatorTag tag,
                                       const std::optional<ReturnPanel>& factors, double lambda) {
    switch (tag) {
        case EstimatorTag::sample: return sample_covariance(panel);
        case EstimatorTag::ewma: return ewma_covariance(panel, lambda);
        case EstimatorTag::pairwise: return pairwise_covariance(sample_variance, panel);
        case EstimatorTag::factor:
            if (!factors) throw UsageError("--estimator factor requires --factors");
            return factor_covariance(panel, *factors).estimate;
        default: throw UsageError("estimator must be sample, factor, ewma or pairwise");
    }
}

EstimatorTag parse_estimator(const std::string& name) {
    try {
        return estimator_tag_from_string(name);
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }
}

Index find_asset(const std::vector<std::string>& ids, const std::string& id) {
    const auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) throw DataError("asset '" + id + "' not found");
    return static_cast<Index>(it - ids.begin());
}

/// Weights file aligned to `ids` by asset label.
AllocationVector load_weights(const std::string& path, const std::vector<std::string>& ids,
                              const std::string& role, Manifest& m) {
    m.add_input(role, path);
    std::ifstream in(path);
    if (!in) throw DataError("cannot open weights file '" + path + "'");
    const auto lw = csv::read_weights(in, path);
    if (lw.ids.size() != ids.size()) {
        throw DataError(path + ": " + std::to_string(lw.ids.size()) + " weights for " +
                        std::to_string(ids.size()) + " assets");
    }
    Vector w(static_cast<Index>(ids.size()));
    for (std::size_t k = 0; k < lw.ids.size(); ++k) {
        w[find_asset(ids, lw.ids[k])] = lw.weights[static_cast<Index>(k)];
    }
    return AllocationVector(w);
}

/// Constraint CSV: header `constraint,<asset ids...>,rhs`, one row per constraint.
EqualityConstraints load_equalities(const std::string& path, const std::vector<std::string>& ids,
                                    Manifest& m) {
    m.add_input("equalities", path);
    std::ifstream in(path);
    if (!in) throw DataError("cannot open constraints file '" + path + "'");
    const auto table = csv::read_table(in, path);
    const auto& h = table.header;
    if (h.size() < 3 || h.back() != "rhs") {
        throw DataError(path + ": header must be 'constraint,<asset ids>,rhs'");
    }
    std::vector<Index> column_asset;
    for (std::size_t j = 1; j + 1 < h.size(); ++j) column_asset.push_back(find_asset(ids, h[j]));
    EqualityConstraints eq;
    eq.lhs = Matrix::Zero(static_cast<Index>(table.rows.size()), static_cast<Index>(ids.size()));
    eq.rhs.resize(static_cast<Index>(table.rows.size()));
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::string where = path + ": constraint " + std::to_string(i + 1);
        if (row.size() != h.size()) throw DataError(where + ": wrong number of cells");
        for (std::size_t j = 1; j + 1 < h.size(); ++j) {
            eq.lhs(static_cast<Index>(i), column_asset[j - 1]) = csv::parse_double(row[j], where);
        }
        eq.rhs[static_cast<Index>(i)] = csv::parse_double(row.back(), where);
    }
    return eq;
}

std::string file_stem(const std::string& label) {
    std::string out;
    for (char ch : label) {
        const bool keep = std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-';
        if (keep) {
            out += ch;
        } else if (!out.empty() && out.back() != '_') {
            out += '_';
        }
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

Strategy parse_strategy(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    auto need_c = [&]() {
        if (rest.empty()) throw UsageError("strategy '" + spec + "' needs an exposure bound, e.g. " + kind + ":2");
        return csv::parse_double(rest.substr(0, rest.find(':')), "--strategy " + spec);
    };
    if (kind == "no_short") return Strategy::no_short();
    if (kind == "equal") return Strategy::equal_weight();
    if (kind == "exact") return Strategy::exact_qp(need_c());
    if (kind == "lars") {
        const double c = need_c();
        const auto second = rest.find(':');
        if (second == std::string::npos) return Strategy::lars_approx(c);
        return Strategy::lars_approx(c, TrackedPortfolio::named_index, rest.substr(second + 1));
    }
    throw UsageError("unknown strategy '" + spec + "' (no_short, equal, exact:C, lars:C[:ASSET])");
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string config;
    std::optional<unsigned long long> seed;
    std::optional<Index> p, n;
    std::string units;
    unsigned long long replicate = 0;
    std::string out;
};

int cmd_simulate(const SimulateArgs& a, Manifest& m) {
    FactorSimConfig cfg;
    if (!a.config.empty()) {
        m.add_input("config", a.config);
        cfg = read_sim_config_file(a.config);
    }
    if (a.seed) cfg.seed = *a.seed;
    if (a.p) cfg.p = *a.p;
    if (a.n) cfg.n = *a.n;
    if (a.units == "percent") cfg.units = ReturnUnits::percent;
    if (a.units == "fraction") cfg.units = ReturnUnits::fraction;
    cfg.validate();
    m.set_seed(cfg.seed);
    m.parameters() = {{"p", cfg.p}, {"n", cfg.n}, {"replicate", a.replicate},
                      {"units", cfg.units == ReturnUnits::fraction ? "fraction" : "percent"}};

    const Universe universe = draw_universe(cfg);
    const SimulatedPanel sim = draw_panel(universe, cfg, a.replicate);
    OutputDir out(a.out, m);
    auto f1 = out.open("panel.csv");
    csv::write_panel(f1, sim.returns);
    auto f2 = out.open("factors.csv");
    csv::write_panel(f2, sim.factors);
    auto f3 = out.open("true_sigma.csv");
    csv::write_matrix(f3, universe.true_sigma.matrix(), sim.returns.asset_ids());
    auto f4 = out.open("config.txt");
    write_sim_config(f4, cfg);
    out.finish();
    return kExitOk;
}

struct EstimateArgs {
    std::string panel, factors, estimator = "sample", out;
    double lambda = 0.97;
    int ppy = kDefaultPeriodsPerYear;
};

int cmd_estimate(const EstimateArgs& a, Manifest& m) {
    const EstimatorTag tag = parse_estimator(a.estimator);
    m.parameters() = {{"estimator", a.estimator}, {"lambda", a.lambda}, {"periods_per_year", a.ppy}};
    const ReturnPanel panel = load_panel(a.panel, a.ppy, "panel", m);
    std::optional<ReturnPanel> factors;
    if (!a.factors.empty()) factors = load_panel(a.factors, a.ppy, "factors", m);

    OutputDir out(a.out, m);
    if (tag == EstimatorTag::factor) {
        if (!factors) throw UsageError("--estimator factor requires --factors");
        const auto fc = factor_covariance(panel, *factors);
        auto f = out.open("covariance.csv");
        csv::write_matrix(f, fc.estimate.matrix(), panel.asset_ids());
        auto g = out.open("factor_fit.csv");
        g << "asset,intercept";
        for (const auto& id : fc.fit.factor_ids) g << ",beta_" << id;
        g << ",idio_var\n";
        for (Index i = 0; i < panel.assets(); ++i) {
            g << panel.asset_ids()[static_cast<std::size_t>(i)] << ','
              << csv::format_double(fc.fit.intercepts[i]);
            for (Index k = 0; k < fc.fit.loadings.cols(); ++k) {
                g << ',' << csv::format_double(fc.fit.loadings(i, k));
            }
            g << ',' << csv::format_double(fc.fit.idio_var[i]) << '\n';
        }
        m.note("clamped_residual_variances", fc.fit.clamped_count);
    } else {
        const auto est = estimate_from_panel(panel, tag, factors, a.lambda);
        auto f = out.open("covariance.csv");
        csv::write_matrix(f, est.matrix(), panel.asset_ids());
    }
    out.finish();
    return kExitOk;
}

struct OptimizeArgs {
    std::string cov, equalities, out;
    std::optional<double> c;
    bool no_short = false, gmv = false;
    int ppy = kDefaultPeriodsPerYear;
};

int cmd_optimize(const OptimizeArgs& a, Manifest& m) {
    const int modes = (a.c ? 1 : 0) + (a.no_short ? 1 : 0) + (a.gmv ? 1 : 0);
    if (modes != 1) throw UsageError("give exactly one of --c, --no-short, --gmv");
    if (a.gmv && !a.equalities.empty()) throw UsageError("--equalities cannot be combined with --gmv");
    const auto cov = load_cov(a.cov, a.ppy, "covariance", m);

    AllocationVector w = AllocationVector::equal_weight(1);
    double variance = 0.0;
    std::string mode;
    if (a.gmv) {
        mode = "gmv";
        const auto g = solve_gmv(cov.sigma);
        w = g.weights;
        variance = g.variance;
    } else {
        const double c = a.no_short ? 1.0 : *a.c;
        mode = a.no_short ? "no_short" : "exposure";
        std::optional<EqualityConstraints> eq;
        if (!a.equalities.empty()) eq = load_equalities(a.equalities, cov.ids, m);
        const auto s = solve(QpProblem(cov.sigma, c, eq));
        w = s.weights;
        variance = s.variance;
        m.note("iterations", s.iterations);
        m.note("exposure_binding", s.exposure_binding);
    }
    m.parameters() = {{"mode", mode}, {"periods_per_year", a.ppy}};
    if (a.c) m.parameters()["c"] = *a.c;
    m.note("variance", variance);
    m.note("annualized_risk_percent", annualized_percent(variance, a.ppy));

    OutputDir out(a.out, m);
    auto f = out.open("weights.csv");
    csv::write_weights(f, w, cov.ids);
    out.finish();
    return kExitOk;
}

struct PathArgs {
    std::string cov, y, y_weights, grid, scaling = "original", out;
    std::optional<double> d_max;
    int ppy = kDefaultPeriodsPerYear;
};

int cmd_path(const PathArgs& a, Manifest& m) {
    const auto cov = load_cov(a.cov, a.ppy, "covariance", m);
    if (!a.y.empty() && !a.y_weights.empty()) throw UsageError("give at most one of --y, --y-weights");
    LarsOptions opts;
    if (a.scaling == "standardized") opts.scaling = Scaling::standardized;
    else if (a.scaling != "original") throw UsageError("--scaling must be original or standardized");
    if (a.d_max) opts.max_d = *a.d_max;

    std::string tracked = "no_short";
    TrackingProblem tp = [&] {
        if (!a.y.empty()) {
            tracked = "asset:" + a.y;
            return transform_regression(cov.sigma, find_asset(cov.ids, a.y), cov.ids);
        }
        if (!a.y_weights.empty()) {
            tracked = "weights";
            return transform_regression(cov.sigma, load_weights(a.y_weights, cov.ids, "tracked", m),
                                        cov.ids);
        }
        return transform_regression(cov.sigma, solve_no_short(cov.sigma).weights, cov.ids);
    }();
    m.parameters() = {{"tracked", tracked}, {"scaling", a.scaling}, {"periods_per_year", a.ppy}};
    if (a.d_max) m.parameters()["d_max"] = *a.d_max;
    const SolutionPath path = lars_path(tp, opts);
    m.note("knots", path.knots().size());
    m.note("complete", path.complete());
    m.note("skipped_predictors", path.skipped().size());

    static const char* kEvents[] = {"start", "entry", "drop", "limit", "full"};
    OutputDir out(a.out, m);
    auto f = out.open("knots.csv");
    f << "d,event,implied_c,variance,risk,n_active";
    for (const auto& label : tp.labels) f << ",w_" << label;
    f << '\n';
    for (const auto& k : path.knots()) {
        f << csv::format_double(k.d) << ',' << kEvents[static_cast<int>(k.event)] << ','
          << csv::format_double(k.implied_c) << ',' << csv::format_double(k.empirical_variance)
          << ',' << csv::format_double(annualized_percent(k.empirical_variance, a.ppy)) << ','
          << k.active.size();
        for (Index j = 0; j < k.w_star.size(); ++j) f << ',' << csv::format_double(k.w_star[j]);
        f << '\n';
    }
    if (!a.grid.empty()) {
        auto g = out.open("path.csv");
        g << "d,implied_c,variance,risk,gross_exposure\n";
        for (double d : parse_list(a.grid, "grid")) {
            if (!(d >= 0.0)) throw UsageError("--grid values must be nonnegative");
            const Vector w_star = path.coefficients_at(path.complete() ? d : std::min(d, path.max_d()));
            const double v = tp.residual_variance(w_star);
            g << csv::format_double(d) << ',' << csv::format_double(implied_exposure(w_star)) << ','
              << csv::format_double(v) << ',' << csv::format_double(annualized_percent(v, a.ppy))
              << ',' << csv::format_double(tp.assemble(w_star).lpNorm<1>()) << '\n';
        }
    }
    out.finish();
    return kExitOk;
}

struct ImproveArgs {
    std::string panel, base, true_cov, factors, estimator = "sample", grid, out;
    double d_max = 5.0;
    double lambda = 0.97;
    int ppy = kDefaultPeriodsPerYear;
};

int cmd_improve(const ImproveArgs& a, Manifest& m) {
    const EstimatorTag tag = parse_estimator(a.estimator);
    const ReturnPanel panel = load_panel(a.panel, a.ppy, "panel", m);
    std::optional<ReturnPanel> factors;
    if (!a.factors.empty()) factors = load_panel(a.factors, a.ppy, "factors", m);
    const CovarianceEstimate est = estimate_from_panel(panel, tag, factors, a.lambda);
    const AllocationVector base = a.base.empty()
                                      ? AllocationVector::equal_weight(panel.assets())
                                      : load_weights(a.base, panel.asset_ids(), "base", m);
    std::optional<CovarianceEstimate> truth;
    if (!a.true_cov.empty()) {
        auto tc = load_cov(a.true_cov, a.ppy, "true_covariance", m);
        if (tc.ids != panel.asset_ids()) throw DataError("true covariance assets differ from the panel");
        truth = std::move(tc.sigma);
    }
    std::vector<double> grid;
    if (a.grid.empty()) {
        for (double d = 0.0; d <= a.d_max + 1e-12; d += 1.0) grid.push_back(d);
    } else {
        grid = parse_list(a.grid, "grid");
    }
    m.parameters() = {{"estimator", a.estimator}, {"base", a.base.empty() ? "equal_weight" : "file"},
                      {"grid", grid}, {"periods_per_year", a.ppy}};

    const auto report = improve_portfolio(est, base, truth, grid);
    if (!report.modified_decreases.empty()) {
        std::cerr << "note: modified-stock count decreased at d =";
        for (double d : report.modified_decreases) std::cerr << ' ' << d;
        std::cerr << '\n';
    }
    m.note("modified_decreases", report.modified_decreases);
    OutputDir out(a.out, m);
    auto f = out.open("improvement.csv");
    write_improvement_csv(f, report);
    out.finish();
    return kExitOk;
}

struct SweepArgs {
    std::string cov, est, panel, factors, config, estimator = "sample", grid = "1,1.5,2,3,4,5",
                                                  solver = "exact", out;
    std::optional<unsigned long long> seed;
    std::optional<Index> p, n;
    std::size_t reps = 0;
    double lambda = 0.97;
    int ppy = kDefaultPeriodsPerYear;
};

int cmd_sweep(const SweepArgs& a, Manifest& m) {
    const auto grid = parse_list(a.grid, "grid");
    const SweepSolver solver = [&] {
        try {
            return sweep_solver_from_string(a.solver);
        } catch (const DataError& e) {
            throw UsageError(e.what());
        }
    }();

    if (a.reps > 0) {
        if (!a.cov.empty() || !a.est.empty() || !a.panel.empty()) {
            throw UsageError("--reps simulates its own data; drop --cov/--est/--panel");
        }
        FactorSimConfig cfg;
        if (!a.config.empty()) {
            m.add_input("config", a.config);
            cfg = read_sim_config_file(a.config);
        }
        if (a.seed) cfg.seed = *a.seed;
        if (a.p) cfg.p = *a.p;
        if (a.n) cfg.n = *a.n;
        ReplicateOptions opts;
        opts.n_reps = a.reps;
        opts.c_grid = grid;
        opts.solver = solver;
        opts.ewma_lambda = a.lambda;
        opts.estimators.clear();
        for (const auto& name : parse_names(a.estimator)) opts.estimators.push_back(parse_estimator(name));
        m.set_seed(cfg.seed);
        m.parameters() = {{"mode", "replicate"}, {"p", cfg.p}, {"n", cfg.n}, {"reps", a.reps},
                          {"grid", grid}, {"estimators", parse_names(a.estimator)},
                          {"solver", a.solver}};
        const auto result = replicate(cfg, opts);
        m.note("bound_violations", result.bound_violations);
        OutputDir out(a.out, m);
        auto f = out.open("replicates.csv");
        write_replicate_csv(f, result.records);
        auto g = out.open("quantiles.csv");
        write_quantile_csv(g, result.quantiles);
        out.finish();
        return kExitOk;
    }

    if (a.cov.empty()) throw UsageError("sweep needs --cov (true covariance) or --reps");
    if (a.est.empty() == a.panel.empty()) throw UsageError("give exactly one of --est, --panel");
    const auto truth = load_cov(a.cov, a.ppy, "true_covariance", m);
    CovarianceEstimate est = truth.sigma;
    if (!a.est.empty()) {
        auto e = load_cov(a.est, a.ppy, "estimate", m);
        if (e.ids != truth.ids) throw DataError("estimate assets differ from the true covariance");
        est = std::move(e.sigma);
    } else {
        const ReturnPanel panel = load_panel(a.panel, a.ppy, "panel", m);
        if (panel.asset_ids() != truth.ids) throw DataError("panel assets differ from the true covariance");
        std::optional<ReturnPanel> factors;
        if (!a.factors.empty()) factors = load_panel(a.factors, a.ppy, "factors", m);
        est = estimate_from_panel(panel, parse_estimator(a.estimator), factors, a.lambda);
    }
    m.parameters() = {{"mode", "single"}, {"grid", grid}, {"solver", a.solver},
                      {"periods_per_year", a.ppy}};
    if (!a.panel.empty()) m.parameters()["estimator"] = a.estimator;
    const auto sweep = risk_sweep(truth.sigma, est, grid, solver);
    OutputDir out(a.out, m);
    auto f = out.open("sweep.csv");
    write_sweep_csv(f, sweep);
    auto g = out.open("risk_curve.csv");
    g << "c,oracle,actual,empirical\n";
    for (const auto& t : sweep) {
        g << csv::format_double(t.c) << ',' << csv::format_double(t.oracle_risk) << ','
          << csv::format_double(t.actual_risk) << ',' << csv::format_double(t.empirical_risk) << '\n';
    }
    out.finish();
    return kExitOk;
}

struct BacktestArgs {
    std::string panel, factors, estimator = "sample", strategies = "no_short,exact:2,equal", out;
    Index window = 252, rebalance = 21;
    double lambda = 0.97;
    int ppy = kDefaultPeriodsPerYear;
};

int cmd_backtest(const BacktestArgs& a, Manifest& m) {
    const EstimatorTag tag = parse_estimator(a.estimator);
    const ReturnPanel panel = load_panel(a.panel, a.ppy, "panel", m);
    std::optional<ReturnPanel> factors;
    if (!a.factors.empty()) factors = load_panel(a.factors, a.ppy, "factors", m);
    if (tag == EstimatorTag::factor && !factors) throw UsageError("--estimator factor requires --factors");

    std::vector<BacktestConfig> configs;
    for (const auto& spec : parse_names(a.strategies)) {
        BacktestConfig c;
        c.estimation_window = a.window;
        c.rebalance_frequency = a.rebalance;
        c.estimator = tag;
        c.ewma_lambda = a.lambda;
        c.strategy = parse_strategy(spec);
        configs.push_back(c);
    }
    if (configs.empty()) throw UsageError("--strategy is empty");
    m.parameters() = {{"estimator", a.estimator}, {"window", a.window}, {"rebalance", a.rebalance},
                      {"strategies", parse_names(a.strategies)}, {"periods_per_year", a.ppy}};

    const auto reports = run_backtests(panel, configs, factors ? &*factors : nullptr);
    OutputDir out(a.out, m);
    auto f = out.open("aggregate.csv");
    write_aggregate_csv(f, reports);
    for (const auto& r : reports) {
        const std::string stem = file_stem(r.label);
        auto g = out.open("rebalance_" + stem + ".csv");
        write_rebalance_csv(g, r, panel.asset_ids());
        auto h = out.open("realized_" + stem + ".csv");
        write_realized_csv(h, r);
    }
    out.finish();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gross-exposure constrained portfolio selection"};
    app.require_subcommand(1);
    app.set_version_flag("--version", GEXP_VERSION);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Draw a three-factor return panel");
    c_sim->add_option("--config", sim.config, "Simulator config (key = value lines)");
    c_sim->add_option("--seed", sim.seed, "Random seed (overrides the config)");
    c_sim->add_option("--p", sim.p, "Number of assets")->check(CLI::PositiveNumber);
    c_sim->add_option("--n", sim.n, "Number of periods")->check(CLI::Range(2, 1 << 30));
    c_sim->add_option("--units", sim.units, "Return units")->check(CLI::IsMember({"fraction", "percent"}));
    c_sim->add_option("--replicate", sim.replicate, "Replicate index (fresh factor and noise draws)");
    c_sim->add_option("--out", sim.out, "Output directory")->required();

    EstimateArgs est;
    auto* c_est = app.add_subcommand("estimate", "Estimate a covariance matrix from a panel");
    c_est->add_option("--panel", est.panel, "Return panel CSV")->required();
    c_est->add_option("--estimator", est.estimator, "sample, factor, ewma or pairwise");
    c_est->add_option("--factors", est.factors, "Factor panel CSV (factor estimator)");
    c_est->add_option("--lambda", est.lambda, "EWMA decay")->check(CLI::Range(0.0, 1.0));
    c_est->add_option("--ppy", est.ppy, "Periods per year")->check(CLI::PositiveNumber);
    c_est->add_option("--out", est.out, "Output directory")->required();

    OptimizeArgs opt;
    auto* c_opt = app.add_subcommand("optimize", "Solve the exposure-constrained minimum variance problem");
    c_opt->add_option("--cov", opt.cov, "Covariance matrix CSV")->required();
    c_opt->add_option("--c", opt.c, "Gross exposure bound (>= 1)");
    c_opt->add_flag("--no-short", opt.no_short, "No short sales (c = 1)");
    c_opt->add_flag("--gmv", opt.gmv, "Unconstrained global minimum variance");
    c_opt->add_option("--equalities", opt.equalities, "Extra constraints CSV: constraint,<ids>,rhs");
    c_opt->add_option("--ppy", opt.ppy, "Periods per year")->check(CLI::PositiveNumber);
    c_opt->add_option("--out", opt.out, "Output directory")->required();

    PathArgs path;
    auto* c_path = app.add_subcommand("path", "LARS solution path of the tracking regression");
    c_path->add_option("--cov", path.cov, "Covariance matrix CSV")->required();
    c_path->add_option("--y", path.y, "Track this single asset");
    c_path->add_option("--y-weights", path.y_weights, "Track this weights CSV");
    c_path->add_option("--d-max", path.d_max, "Stop the path at this L1 norm");
    c_path->add_option("--grid", path.grid, "Comma-separated d values to evaluate");
    c_path->add_option("--scaling", path.scaling, "original or standardized");
    c_path->add_option("--ppy", path.ppy, "Periods per year")->check(CLI::PositiveNumber);
    c_path->add_option("--out", path.out, "Output directory")->required();

    ImproveArgs imp;
    auto* c_imp = app.add_subcommand("improve", "Improve a portfolio along the tracking path");
    c_imp->add_option("--panel", imp.panel, "Return panel CSV")->required();
    c_imp->add_option("--base", imp.base, "Base weights CSV (default equal weight)");
    c_imp->add_option("--true-cov", imp.true_cov, "True covariance CSV for actual risks");
    c_imp->add_option("--estimator", imp.estimator, "sample, factor, ewma or pairwise");
    c_imp->add_option("--factors", imp.factors, "Factor panel CSV (factor estimator)");
    c_imp->add_option("--lambda", imp.lambda, "EWMA decay")->check(CLI::Range(0.0, 1.0));
    c_imp->add_option("--d-max", imp.d_max, "Default grid is 0, 1, ..., d-max")->check(CLI::NonNegativeNumber);
    c_imp->add_option("--grid", imp.grid, "Comma-separated d values");
    c_imp->add_option("--ppy", imp.ppy, "Periods per year")->check(CLI::PositiveNumber);
    c_imp->add_option("--out", imp.out, "Output directory")->required();

    SweepArgs sw;
    auto* c_sw = app.add_subcommand("sweep", "Oracle, actual and empirical risk across c");
    c_sw->add_option("--cov", sw.cov, "True covariance CSV");
    c_sw->add_option("--est", sw.est, "Estimated covariance CSV");
    c_sw->add_option("--panel", sw.panel, "Return panel CSV to estimate from");
    c_sw->add_option("--factors", sw.factors, "Factor panel CSV (factor estimator)");
    c_sw->add_option("--estimator", sw.estimator, "Estimator (comma list with --reps)");
    c_sw->add_option("--grid", sw.grid, "Comma-separated c values, ascending");
    c_sw->add_option("--solver", sw.solver, "exact or lars");
    c_sw->add_option("--reps", sw.reps, "Monte Carlo replicates on a simulated universe");
    c_sw->add_option("--config", sw.config, "Simulator config (with --reps)");
    c_sw->add_option("--seed", sw.seed, "Random seed (with --reps)");
    c_sw->add_option("--p", sw.p, "Number of assets (with --reps)")->check(CLI::PositiveNumber);
    c_sw->add_option("--n", sw.n, "Number of periods (with --reps)")->check(CLI::Range(2, 1 << 30));
    c_sw->add_option("--lambda", sw.lambda, "EWMA decay")->check(CLI::Range(0.0, 1.0));
    c_sw->add_option("--ppy", sw.ppy, "Periods per year")->check(CLI::PositiveNumber);
    c_sw->add_option("--out", sw.out, "Output directory")->required();

    BacktestArgs bt;
    auto* c_bt = app.add_subcommand("backtest", "Rolling-window out-of-sample backtest");
    c_bt->add_option("--panel", bt.panel, "Return panel CSV")->required();
    c_bt->add_option("--factors", bt.factors, "Factor panel CSV (factor estimator)");
    c_bt->add_option("--estimator", bt.estimator, "sample, factor or ewma");
    c_bt->add_option("--strategy", bt.strategies, "Comma list: no_short, equal, exact:C, lars:C[:ASSET]");
    c_bt->add_option("--window", bt.window, "Estimation window (periods)")->check(CLI::PositiveNumber);
    c_bt->add_option("--rebalance", bt.rebalance, "Holding period (periods)")->check(CLI::PositiveNumber);
    c_bt->add_option("--lambda", bt.lambda, "EWMA decay")->check(CLI::Range(0.0, 1.0));
    c_bt->add_option("--ppy", bt.ppy, "Periods per year")->check(CLI::PositiveNumber);
    c_bt->add_option("--out", bt.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        const std::string name = app.get_subcommands().front()->get_name();
        Manifest manifest(name, argc, argv);
        if (*c_sim) return cmd_simulate(sim, manifest);
        if (*c_est) return cmd_estimate(est, manifest);
        if (*c_opt) return cmd_optimize(opt, manifest);
        if (*c_path) return cmd_path(path, manifest);
        if (*c_imp) return cmd_improve(imp, manifest);
        if (*c_sw) return cmd_sweep(sw, manifest);
        if (*c_bt) return cmd_backtest(bt, manifest);
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
}
