// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--only 1,4,...] [--expect-fail 5,9]
//
// Exit status is 0 when the set of failing criteria equals the expected set.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/helpers.hpp"
#include "../unit/oracles.hpp"
#include "ge/backtest.hpp"
#include "ge/covariance.hpp"
#include "ge/lars.hpp"
#include "ge/parallel.hpp"
#include "ge/qp.hpp"
#include "ge/risk_experiments.hpp"
#include "ge/simulation.hpp"

namespace fs = std::filesystem;
using namespace ge;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Brute force over the weight lattice with step 1/100: w_i = k_i / 100 for
// i < p and w_p = 1 - sum. Integer arithmetic keeps the feasibility test exact.
double grid_minimum(const Matrix& sigma, double c) {
    const Index p = sigma.rows();
    const long budget = std::lround(100.0 * c);
    const long lo = -static_cast<long>(std::floor(100.0 * (c - 1.0) / 2.0 + 1e-9));
    const long hi = static_cast<long>(std::floor(100.0 * (c + 1.0) / 2.0 + 1e-9));
    std::vector<long> k(static_cast<std::size_t>(p - 1), lo);
    Vector w(p);
    double best = std::numeric_limits<double>::infinity();
    for (;;) {
        long sum = 0, l1 = 0;
        for (long v : k) {
            sum += v;
            l1 += std::labs(v);
        }
        l1 += std::labs(100 - sum);
        if (l1 <= budget) {
            for (Index i = 0; i < p - 1; ++i) w[i] = static_cast<double>(k[static_cast<std::size_t>(i)]) / 100.0;
            w[p - 1] = static_cast<double>(100 - sum) / 100.0;
            best = std::min(best, w.dot(sigma * w));
        }
        std::size_t i = 0;
        while (i < k.size() && k[i] == hi) k[i++] = lo;
        if (i == k.size()) break;
        ++k[i];
    }
    return best;
}

Outcome criterion_oracle_equivalence() {
    const std::vector<double> cs{1.0, 1.2, 1.5, 2.0, 3.0};
    const std::size_t n = 200;
    const auto worst = parallel_map(n, [&](std::size_t i) {
        std::mt19937_64 rng(1000 + i);
        const Index p = 2 + static_cast<Index>(i % 3);
        const Matrix sigma = testutil::random_psd(rng, p, p + 1 + static_cast<Index>(i % 2), 0.05);
        const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(sigma).eigenvalues().maxCoeff();
        // Every feasible point has a feasible lattice point within this distance.
        const double delta = 0.02 * std::sqrt(static_cast<double>(p));
        double excess = -std::numeric_limits<double>::infinity();
        for (double c : cs) {
            const QpSolution sol = solve(QpProblem(CovarianceEstimate(sigma), c));
            const double g = grid_minimum(sigma, c);
            const Vector grad = 2.0 * sigma * sol.weights.weights();
            const double resolution = grad.norm() * delta + lmax * delta * delta;
            // Solver must not lose to the lattice and must be within resolution of it.
            excess = std::max(excess, std::max(sol.variance - g - 1e-12, g - sol.variance - resolution));
        }
        return excess;
    });
    const double w = *std::max_element(worst.begin(), worst.end());
    return {w <= 0.0, "200 matrices x 5 c, worst margin " + fmt("%.3g", w)};
}

Outcome criterion_closed_form() {
    const Matrix sigma = (Matrix(2, 2) << 1.0, 1.5, 1.5, 4.0).finished();
    double worst = 0.0;
    for (double c : {1.0, 1.05, 1.1, 1.2, 1.3, 1.4, 1.45, 1.5, 1.75, 2.0, 3.0, 10.0}) {
        Vector expect(2);
        if (c == 1.0) expect << 1.0, 0.0;
        else if (c < 1.5) expect << (1.0 + c) / 2.0, (1.0 - c) / 2.0;
        else expect << 1.25, -0.25;
        const Vector w = solve(QpProblem(CovarianceEstimate(sigma), c)).weights.weights();
        worst = std::max(worst, (w - expect).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-6, "max weight error " + fmt("%.3g", worst)};
}

Outcome criterion_sandwich() {
    FactorSimConfig cfg;
    cfg.p = 100;
    cfg.n = 252;
    ReplicateOptions opts;
    opts.n_reps = 50;
    const auto res = replicate(cfg, opts);
    double min_slack = std::numeric_limits<double>::infinity();
    for (const auto& r : res.records) {
        const auto& b = r.risk.bounds;
        min_slack = std::min({min_slack, b.actual_oracle.slack, b.actual_empirical.slack,
                              b.oracle_empirical.slack});
    }
    return {res.bound_violations == 0,
            std::to_string(res.records.size()) + " checks, " +
                std::to_string(res.bound_violations) + " violations, min slack " +
                fmt("%.3g", min_slack)};
}

Outcome criterion_lars_exactness() {
    double worst = 0.0;
    std::size_t knots = 0;
    for (int i = 0; i < 100; ++i) {
        std::mt19937_64 rng(2000 + i);
        const Index assets = 2 + i % 6;  // 1..6 predictors
        const Matrix sigma = testutil::random_psd(rng, assets, assets + 2, 0.01);
        const TrackingProblem tp = transform_regression(CovarianceEstimate(sigma), Index{i % assets});
        const SolutionPath path = lars_path(tp);
        for (const auto& k : path.knots()) {
            const double v = tp.residual_variance(k.w_star);
            const double o = oracle::lasso_value(tp.sigma_xx, tp.sigma_xy, tp.var_y, k.w_star.lpNorm<1>());
            worst = std::max(worst, std::abs(v - o));
            ++knots;
        }
    }
    return {worst <= 1e-8, std::to_string(knots) + " knots, max objective gap " + fmt("%.3g", worst)};
}

Outcome criterion_approximation() {
    FactorSimConfig cfg;
    cfg.p = 100;
    const CovarianceEstimate sigma = draw_universe(cfg).true_sigma;
    std::vector<double> grid;
    for (int k = 0; k <= 40; ++k) grid.push_back(1.0 + 0.05 * k);
    const auto exact = risk_sweep(sigma, sigma, grid, SweepSolver::exact);
    const auto approx = risk_sweep(sigma, sigma, grid, SweepSolver::lars);
    double worst = 0.0, at = 1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double rel = std::abs(approx[i].actual_risk - exact[i].actual_risk) / exact[i].actual_risk;
        if (rel > worst) {
            worst = rel;
            at = grid[i];
        }
    }
    return {worst <= 0.05, "max relative risk gap " + fmt("%.2f%%", 100.0 * worst) + " at c = " +
                               fmt("%.2f", at)};
}

Outcome criterion_degenerate_sample() {
    FactorSimConfig cfg;
    cfg.p = 500;
    cfg.n = 252;
    ReplicateOptions opts;
    opts.n_reps = 20;
    opts.c_grid = {50.0};
    const auto res = replicate(cfg, opts);
    int hits = 0;
    double max_emp = 0.0, min_ratio = std::numeric_limits<double>::infinity();
    for (const auto& r : res.records) {
        const auto& t = r.risk;
        max_emp = std::max(max_emp, t.empirical_risk);
        min_ratio = std::min(min_ratio, t.actual_risk / t.oracle_risk);
        if (t.empirical_risk <= 0.1 && t.actual_risk >= 1.25 * t.oracle_risk) ++hits;
    }
    return {hits >= 18, std::to_string(hits) + "/20 replicates at c = 50, max empirical " +
                            fmt("%.3g", max_emp) + "%, min actual/oracle " + fmt("%.3f", min_ratio)};
}

Outcome criterion_convergence() {
    const auto study = convergence_study(FactorSimConfig{}, {125, 250, 500, 1000}, {50, 100, 200}, 20);
    return {study.slope > 0.0 && study.r_squared >= 0.8,
            "slope " + fmt("%.4g", study.slope) + ", R^2 " + fmt("%.4f", study.r_squared)};
}

Outcome criterion_polarization() {
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        std::mt19937_64 rng(3000 + i);
        const Index t = 20 + 7 * i, p = 2 + i % 9;
        const Matrix r = testutil::random_returns(rng, t, p, 0.01 * (1 + i % 4));
        const Matrix a = pairwise_covariance_matrix(sample_variance, r);
        const Matrix b = sample_covariance_matrix(r);
        worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-12, "50 panels, max elementwise gap " + fmt("%.3g", worst)};
}

double median(std::vector<double> v) { return empirical_quantile(std::move(v), 0.5); }

Outcome criterion_backtest_ordering() {
    const std::vector<Strategy> strategies{Strategy::exact_qp(5.0), Strategy::exact_qp(2.0),
                                           Strategy::no_short(), Strategy::equal_weight()};
    std::vector<std::vector<double>> vols(strategies.size());
    for (std::uint64_t seed = 1; seed <= 11; ++seed) {
        FactorSimConfig cfg;
        cfg.p = 100;
        cfg.n = 2520;
        cfg.seed = seed;
        const auto sim = draw_panel(draw_universe(cfg), cfg, 0);
        std::vector<BacktestConfig> configs;
        for (const auto& s : strategies) {
            BacktestConfig bc;
            bc.strategy = s;
            configs.push_back(bc);
        }
        const auto reports = run_backtests(sim.returns, configs);
        for (std::size_t k = 0; k < reports.size(); ++k) vols[k].push_back(reports[k].annualized_volatility);
    }
    const double gmv = median(vols[0]), c2 = median(vols[1]), ns = median(vols[2]), eq = median(vols[3]);
    const bool a = gmv > c2, b = ns > c2, c = eq > ns;
    return {a && b && c, "median vol c=5 " + fmt("%.3f", gmv) + (a ? " > " : " <= ") + "c=2 " +
                             fmt("%.3f", c2) + "; no_short " + fmt("%.3f", ns) + (b ? " > " : " <= ") +
                             "c=2; equal " + fmt("%.3f", eq) + (c ? " > " : " <= ") + "no_short"};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(GEXP_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome criterion_determinism() {
    const fs::path root = fs::temp_directory_path() / ("gexp_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string sim = (root / "sim").string();
    if (run_cli("simulate --seed 7 --p 30 --n 300 --out " + sim) != 0) {
        fs::remove_all(root);
        return {false, "simulate failed"};
    }
    const std::string panel = sim + "/panel.csv", factors = sim + "/factors.csv",
                      truth = sim + "/true_sigma.csv";
    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "simulate --seed 11 --p 25 --n 120"},
        {"estimate-sample", "estimate --panel " + panel},
        {"estimate-factor", "estimate --panel " + panel + " --estimator factor --factors " + factors},
        {"estimate-ewma", "estimate --panel " + panel + " --estimator ewma"},
        {"estimate-pairwise", "estimate --panel " + panel + " --estimator pairwise"},
        {"optimize", "optimize --cov " + truth + " --c 2"},
        {"optimize-gmv", "optimize --cov " + truth + " --gmv"},
        {"path", "path --cov " + truth + " --y A1 --grid 0,0.5,1,2"},
        {"improve", "improve --panel " + panel + " --true-cov " + truth},
        {"sweep", "sweep --cov " + truth + " --panel " + panel},
        {"sweep-reps", "sweep --reps 4 --seed 5 --p 20 --n 100 --estimator sample,factor"},
        {"backtest", "backtest --panel " + panel + " --window 100 --rebalance 25 --strategy no_short,equal,exact:2,lars:2"},
    };
    std::vector<std::string> bad;
    std::size_t files = 0;
    for (const auto& [name, args] : commands) {
        const fs::path a = root / (name + "_1"), b = root / (name + "_2");
        if (run_cli(args + " --out " + a.string()) != 0 || run_cli(args + " --out " + b.string()) != 0) {
            bad.push_back(name + " (exit)");
            continue;
        }
        bool same = true;
        for (const auto& e : fs::directory_iterator(a)) {
            if (e.path().extension() != ".csv") continue;
            ++files;
            if (slurp(e.path()) != slurp(b / e.path().filename())) same = false;
        }
        if (!same) bad.push_back(name);
    }
    fs::remove_all(root);
    std::string detail = std::to_string(commands.size()) + " commands, " + std::to_string(files) + " CSVs";
    for (const auto& b : bad) detail += "; differs: " + b;
    return {bad.empty(), detail};
}

std::set<int> parse_set(const std::string& text) {
    std::set<int> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) out.insert(std::stoi(item));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only, expect_fail;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if ((arg == "--only" || arg == "--expect-fail") && i + 1 < argc) {
            (arg == "--only" ? only : expect_fail) = parse_set(argv[++i]);
        } else {
            std::cerr << "usage: acceptance [--only LIST] [--expect-fail LIST]\n";
            return 2;
        }
    }

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"exact QP matches lattice brute force", criterion_oracle_equivalence},
        {"two-asset closed forms", criterion_closed_form},
        {"risk-gap inequalities on simulated replicates", criterion_sandwich},
        {"LARS knots match sign-pattern enumeration", criterion_lars_exactness},
        {"LARS approximate risk within 5% of exact", criterion_approximation},
        {"degenerate sample covariance at large c", criterion_degenerate_sample},
        {"sup-norm error tracks sqrt(log p / n)", criterion_convergence},
        {"pairwise equals sample covariance", criterion_polarization},
        {"backtest volatility ordering", criterion_backtest_ordering},
        {"CLI output is deterministic", criterion_determinism},
    };

    std::set<int> failed;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) failed.insert(id);
        std::printf("%s  %2d  %-48s %s [%.1fs]%s\n", o.pass ? "PASS" : "FAIL", id,
                    criteria[i].first.c_str(), o.detail.c_str(), secs,
                    !o.pass && expect_fail.count(id) ? " (expected)" : "");
        std::fflush(stdout);
    }

    std::set<int> relevant;
    for (int id : expect_fail)
        if (only.empty() || only.count(id)) relevant.insert(id);
    std::printf("%zu failed", failed.size());
    if (!relevant.empty()) std::printf(", %zu expected to fail", relevant.size());
    std::printf("\n");
    return failed == relevant ? 0 : 1;
}
