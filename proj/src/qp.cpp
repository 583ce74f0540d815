#include "ge/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cholesky_update.hpp"

namespace ge {

QpProblem::QpProblem(CovarianceEstimate sigma, double c,
                     std::optional<EqualityConstraints> equalities)
    : sigma_(std::move(sigma)), c_(c), equalities_(std::move(equalities)) {
    if (!(c_ >= 1.0)) {
        throw DataError("gross-exposure bound c must be >= 1 (the budget forces ||w||_1 >= 1), got " +
                        std::to_string(c_));
    }
    if (equalities_) {
        const auto& eq = *equalities_;
        if (eq.lhs.cols() != sigma_.dim() || eq.lhs.rows() != eq.rhs.size()) {
            throw DataError("equality constraints must be m x p with an m-vector right-hand side");
        }
        if (!eq.lhs.allFinite() || !eq.rhs.allFinite()) {
            throw DataError("equality constraints contain non-finite values");
        }
        if (eq.lhs.rows() == 0) equalities_.reset();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma_.matrix(), Eigen::EigenvaluesOnly);
    min_eig_ = eig.eigenvalues().minCoeff();
    max_eig_ = eig.eigenvalues().maxCoeff();
    if (min_eig_ < -1e-8 * std::max(max_eig_, 0.0)) {
        throw NumericalError("covariance is not positive semi-definite (smallest eigenvalue " +
                             std::to_string(min_eig_) + ", largest " + std::to_string(max_eig_) +
                             ")");
    }
}

QpProblem QpProblem::with_c(double c) const {
    QpProblem copy = *this;
    if (!(c >= 1.0)) throw DataError("gross-exposure bound c must be >= 1");
    copy.c_ = c;
    return copy;
}

namespace {

/**
 * min 1/2 w'Hw + q'w  s.t.  E w = e (already satisfied by the start),
 * sum |w| <= c, with H positive definite. Each step also removes the
 * current residual of the working constraints, so rounding errors from an
 * ill-conditioned H do not accumulate.
 *
 * With c = 1 and a budget row the problem is long-only and the exposure
 * row coincides with the budget; that case runs with `allow_short` off
 * and no exposure row, which avoids a degenerate working set.
 */
class ActiveSetEngine {
public:
    ActiveSetEngine(const Matrix& h, Vector q, Matrix eq, Vector rhs, double c, bool allow_short)
        : h_(h), q_(std::move(q)), eq_(std::move(eq)), rhs_(std::move(rhs)), c_(c),
          allow_short_(allow_short), chol_(h_) {}

    void start(const Vector& w0) {
        w_ = w0;
        state_.assign(static_cast<std::size_t>(w_.size()), 0);
        for (Index j = 0; j < w_.size(); ++j) {
            if (!allow_short_ && w_[j] < 0.0) w_[j] = 0.0;
            if (w_[j] == 0.0) continue;
            state_[static_cast<std::size_t>(j)] = w_[j] > 0.0 ? 1 : -1;
            if (!chol_.add(j)) {
                throw NumericalError("active-set start: free block of the Hessian is singular");
            }
        }
        gross_active_ = false;
    }

    int run(int max_iterations) {
        const double hscale = std::max(h_.diagonal().maxCoeff(), std::numeric_limits<double>::min());
        bool at_subproblem_min = false;
        for (int iter = 1; iter <= max_iterations; ++iter) {
            const auto& free = chol_.order();
            const Index n = chol_.size();

            Vector g = q_;
            for (Index k = 0; k < n; ++k) {
                const Index j = free[static_cast<std::size_t>(k)];
                g += h_.col(j) * w_[j];
            }
            Vector g_free(n);
            for (Index k = 0; k < n; ++k) g_free[k] = g[free[static_cast<std::size_t>(k)]];
            const Matrix c_free = working_rows();

            const Vector target = working_residual();
            if (target.lpNorm<Eigen::Infinity>() > 1e-12 * std::max(1.0, c_)) at_subproblem_min = false;

            Vector step = Vector::Zero(n);
            if (!at_subproblem_min && n > 0) step = kkt_step(g_free, c_free, target);
            const double wscale = std::max(1.0, w_.lpNorm<Eigen::Infinity>());

            if (at_subproblem_min || step.lpNorm<Eigen::Infinity>() <= 1e-13 * wscale) {
                // Multipliers by least squares on the free coordinates: g_F + C' lambda = 0.
                Vector lambda = Vector::Zero(c_free.rows());
                if (c_free.rows() > 0 && n > 0) {
                    lambda = Eigen::CompleteOrthogonalDecomposition<Matrix>(c_free.transpose())
                                 .solve(-g_free);
                }
                const double mu = gross_active_ ? lambda[lambda.size() - 1] : 0.0;
                const double tol = 1e-10 * hscale * wscale;
                double most_negative = -tol;
                Index release = -1;
                int release_sign = 0;
                bool drop_gross = false;
                if (gross_active_ && mu < most_negative) {
                    most_negative = mu;
                    drop_gross = true;
                }
                for (Index j = 0; j < w_.size(); ++j) {
                    if (state_[static_cast<std::size_t>(j)] != 0) continue;
                    double base = g[j];
                    for (Index r = 0; r < eq_.rows(); ++r) base += lambda[r] * eq_(r, j);
                    const double nu_long = base + mu;
                    const double nu_short = -base + mu;
                    if (nu_long < most_negative) {
                        most_negative = nu_long;
                        release = j;
                        release_sign = 1;
                        drop_gross = false;
                    }
                    if (allow_short_ && nu_short < most_negative) {
                        most_negative = nu_short;
                        release = j;
                        release_sign = -1;
                        drop_gross = false;
                    }
                }
                if (drop_gross) {
                    gross_active_ = false;
                } else if (release >= 0) {
                    if (!chol_.add(release)) {
                        throw NumericalError("active-set: free block of the Hessian became singular");
                    }
                    state_[static_cast<std::size_t>(release)] = release_sign;
                } else {
                    return iter;
                }
                at_subproblem_min = false;
                continue;
            }

            double alpha = 1.0;
            Index blocking = -1;  // position in the free order, or n for the exposure row
            for (Index k = 0; k < n; ++k) {
                const Index j = free[static_cast<std::size_t>(k)];
                const double s = state_[static_cast<std::size_t>(j)];
                if (s * step[k] < 0.0) {
                    const double a = std::abs(w_[j]) / (-s * step[k]);
                    if (a < alpha) {
                        alpha = a;
                        blocking = k;
                    }
                }
            }
            if (allow_short_ && !gross_active_) {
                double rate = 0.0;
                for (Index k = 0; k < n; ++k) {
                    rate += state_[static_cast<std::size_t>(free[static_cast<std::size_t>(k)])] *
                            step[k];
                }
                if (rate > 1e-14 * std::max(1.0, step.lpNorm<1>())) {
                    const double a = std::max(0.0, c_ - w_.lpNorm<1>()) / rate;
                    if (a < alpha) {
                        alpha = a;
                        blocking = n;
                    }
                }
            }

            for (Index k = 0; k < n; ++k) w_[free[static_cast<std::size_t>(k)]] += alpha * step[k];

            std::vector<Index> to_remove;
            for (Index k = 0; k < n; ++k) {
                const Index j = free[static_cast<std::size_t>(k)];
                if (k == blocking || state_[static_cast<std::size_t>(j)] * w_[j] <= 0.0) {
                    to_remove.push_back(k);
                }
            }
            for (auto it = to_remove.rbegin(); it != to_remove.rend(); ++it) {
                const Index j = chol_.order()[static_cast<std::size_t>(*it)];
                w_[j] = 0.0;
                state_[static_cast<std::size_t>(j)] = 0;
                chol_.remove_at(*it);
            }
            if (blocking == n) gross_active_ = true;
            at_subproblem_min = blocking < 0;
        }
        throw NumericalError("active-set solver hit the iteration limit (" +
                             std::to_string(max_iterations) + ")");
    }

    const Vector& weights() const { return w_; }
    bool gross_active() const { return gross_active_; }

private:
    Matrix working_rows() const {
        const auto& free = chol_.order();
        const Index n = chol_.size();
        const Index rows = eq_.rows() + (gross_active_ ? 1 : 0);
        Matrix c(rows, n);
        for (Index k = 0; k < n; ++k) {
            const Index j = free[static_cast<std::size_t>(k)];
            for (Index r = 0; r < eq_.rows(); ++r) c(r, k) = eq_(r, j);
            if (gross_active_) c(rows - 1, k) = state_[static_cast<std::size_t>(j)];
        }
        return c;
    }

    /**
     * Solves [H_FF C'; C 0] [s; lambda] = [-g; target] by the range-space
     * method with two rounds of iterative refinement.
     */
    Vector kkt_step(const Vector& g_free, const Matrix& c_free, const Vector& target) const {
        const auto& free = chol_.order();
        const Index n = chol_.size();
        Matrix h_ff(n, n);
        for (Index a = 0; a < n; ++a)
            for (Index b = 0; b < n; ++b)
                h_ff(a, b) = h_(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);

        const Index m = c_free.rows();
        Matrix y;
        Eigen::CompleteOrthogonalDecomposition<Matrix> schur;
        if (m > 0) {
            y = chol_.solve(c_free.transpose());
            schur.compute(c_free * y);
        }
        auto solve = [&](const Vector& top, const Vector& bottom, Vector& s, Vector& lambda) {
            const Vector u = chol_.solve(top);
            if (m == 0) {
                s = u;
                return;
            }
            lambda = schur.solve(c_free * u - bottom);
            s = u - y * lambda;
        };
        Vector s, lambda = Vector::Zero(m);
        solve(-g_free, target, s, lambda);
        for (int round = 0; round < 2; ++round) {
            Vector r_top = -g_free - h_ff * s;
            if (m > 0) r_top -= c_free.transpose() * lambda;
            const Vector r_bottom = m > 0 ? Vector(target - c_free * s) : Vector(0);
            Vector ds, dl = Vector::Zero(m);
            solve(r_top, r_bottom, ds, dl);
            s += ds;
            if (m > 0) lambda += dl;
        }
        return s;
    }

    /// e - E w for the equality rows, then c - s'w for the exposure row when active.
    Vector working_residual() const {
        const Index rows = eq_.rows() + (gross_active_ ? 1 : 0);
        Vector r(rows);
        if (eq_.rows() > 0) r.head(eq_.rows()) = rhs_ - eq_ * w_;
        if (gross_active_) {
            double gross = 0.0;
            for (Index j = 0; j < w_.size(); ++j) gross += state_[static_cast<std::size_t>(j)] * w_[j];
            r[rows - 1] = c_ - gross;
        }
        return r;
    }

    const Matrix& h_;
    Vector q_;
    Matrix eq_;
    Vector rhs_;
    double c_;
    bool allow_short_;
    detail::UpdatableCholesky chol_;
    Vector w_;
    std::vector<int> state_;
    bool gross_active_ = false;
};

struct ConstraintSystem {
    Matrix lhs;  // budget row first
    Vector rhs;
};

ConstraintSystem constraint_system(const QpProblem& problem) {
    const Index p = problem.dim();
    const Index m = problem.equalities() ? problem.equalities()->lhs.rows() : 0;
    ConstraintSystem sys{Matrix(m + 1, p), Vector(m + 1)};
    sys.lhs.row(0).setOnes();
    sys.rhs[0] = 1.0;
    if (m > 0) {
        sys.lhs.bottomRows(m) = problem.equalities()->lhs;
        sys.rhs.tail(m) = problem.equalities()->rhs;
    }
    return sys;
}

double ridge(const QpProblem& problem, double relative) {
    const double scale = std::max(problem.sigma().matrix().diagonal().maxCoeff(),
                                  std::numeric_limits<double>::min());
    if (problem.min_eigenvalue() > 1e-6 * problem.max_eigenvalue()) return 0.0;
    // Also lift any slightly negative eigenvalue that passed the PSD tolerance.
    return relative * scale + std::max(0.0, -problem.min_eigenvalue());
}

bool allows_short(const QpProblem& problem) {
    return problem.c() > 1.0 + 1e-12;
}

int iteration_cap(const QpOptions& options, Index p) {
    return options.max_iterations > 0 ? options.max_iterations
                                      : static_cast<int>(std::max<Index>(50 * p, 100));
}

Vector feasible_start(const QpProblem& problem, const QpOptions& options) {
    const Index p = problem.dim();
    if (!problem.equalities()) {
        return Vector::Constant(p, 1.0 / static_cast<double>(p));
    }
    // Phase 1: min ||E w - e||^2 over ||w||_1 <= c, starting from w = 0.
    const ConstraintSystem sys = constraint_system(problem);
    Matrix h = 2.0 * sys.lhs.transpose() * sys.lhs;
    const double eps = options.regularization *
                       std::max(h.diagonal().maxCoeff(), std::numeric_limits<double>::min());
    h.diagonal().array() += 2.0 * eps;
    ActiveSetEngine engine(h, -2.0 * sys.lhs.transpose() * sys.rhs, Matrix(0, p), Vector(0),
                           problem.c(),
                           allows_short(problem));
    engine.start(Vector::Zero(p));
    engine.run(iteration_cap(options, p));
    const Vector w = engine.weights();
    const double residual = (sys.lhs * w - sys.rhs).lpNorm<Eigen::Infinity>();
    if (residual > 1e-8 * std::max(1.0, sys.rhs.lpNorm<Eigen::Infinity>())) {
        throw NumericalError("constraints are infeasible: 1'w = 1, A w = a and ||w||_1 <= " +
                             std::to_string(problem.c()) + " cannot hold together (residual " +
                             std::to_string(residual) + ")");
    }
    return w;
}

}  // namespace

ActiveSetSolver::ActiveSetSolver(QpOptions options) : options_(options) {}

QpSolution ActiveSetSolver::solve(const QpProblem& problem) {
    return solve_from(problem, feasible_start(problem, options_));
}

QpSolution ActiveSetSolver::solve_from(const QpProblem& problem, const Vector& start) {
    const Index p = problem.dim();
    if (start.size() != p) throw DataError("warm start has the wrong dimension");
    const ConstraintSystem sys = constraint_system(problem);
    const double violation = std::max((sys.lhs * start - sys.rhs).lpNorm<Eigen::Infinity>(),
                                      start.lpNorm<1>() - problem.c());
    if (violation > 1e-8) {
        throw DataError("warm start is not feasible (violation " + std::to_string(violation) + ")");
    }

    Matrix h = 2.0 * problem.sigma().matrix();
    h.diagonal().array() += 2.0 * ridge(problem, options_.regularization);

    ActiveSetEngine engine(h, Vector::Zero(p), sys.lhs, sys.rhs, problem.c(), allows_short(problem));
    engine.start(start);
    const int iterations = engine.run(iteration_cap(options_, p));

    const Vector& w = engine.weights();
    QpSolution solution{AllocationVector(w), 0.0, iterations, engine.gross_active()};
    solution.variance = portfolio_risk(w, problem.sigma()).raw_variance;
    return solution;
}

std::vector<QpSolution> ActiveSetSolver::solve_path(const QpProblem& problem,
                                                    const std::vector<double>& cs) {
    std::vector<QpSolution> out;
    out.reserve(cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i) {
        if (i > 0 && cs[i] < cs[i - 1]) {
            throw DataError("exposure grid must be ascending");
        }
        const QpProblem at_c = problem.with_c(cs[i]);
        out.push_back(i == 0 ? solve(at_c) : solve_from(at_c, out.back().weights.weights()));
    }
    return out;
}

QpSolution solve(const QpProblem& problem) {
    return ActiveSetSolver().solve(problem);
}

QpSolution solve_no_short(const CovarianceEstimate& sigma) {
    return solve(QpProblem(sigma, 1.0));
}

GmvSolution solve_gmv(const CovarianceEstimate& sigma) {
    const Matrix& s = sigma.matrix();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(hi > 0.0) || lo <= 1e-12 * hi) {
        throw NumericalError(
            "covariance is singular or not positive definite (eigenvalue range [" +
            std::to_string(lo) + ", " + std::to_string(hi) +
            "]); use the exposure-constrained solver instead");
    }
    const Vector x = s.ldlt().solve(Vector::Ones(s.rows()));
    const double total = x.sum();
    if (!(std::abs(total) > 0.0)) throw NumericalError("1' S^{-1} 1 vanishes");
    AllocationVector w(x / total);
    const double variance = portfolio_risk(w, sigma).raw_variance;
    const double gross = w.gross_exposure();
    return GmvSolution{std::move(w), variance, gross};
}

KktResiduals kkt_residuals(const QpProblem& problem, const Vector& w) {
    const Index p = problem.dim();
    const ConstraintSystem sys = constraint_system(problem);
    const Index m = sys.lhs.rows();
    const Vector g = 2.0 * problem.sigma().matrix() * w;
    const double support_tol = 1e-12;
    const bool gross_tight = std::abs(w.lpNorm<1>() - problem.c()) <= 1e-9 * problem.c();

    std::vector<Index> free;
    for (Index j = 0; j < p; ++j) {
        if (std::abs(w[j]) > support_tol) free.push_back(j);
    }
    const auto n = static_cast<Index>(free.size());
    Matrix ct(n, m);
    Vector signs(n);
    Vector g_free(n);
    for (Index k = 0; k < n; ++k) {
        const Index j = free[static_cast<std::size_t>(k)];
        ct.row(k) = sys.lhs.col(j).transpose();
        signs[k] = w[j] > 0.0 ? 1.0 : -1.0;
        g_free[k] = g[j];
    }

    // Equality multipliers lambda(mu) = lambda0 - mu * beta, exposure multiplier mu >= 0.
    Vector lambda0 = Vector::Zero(m);
    Vector beta = Vector::Zero(m);
    bool mu_free = false;  // exposure row lies in the span of the equality rows on the support
    double mu_fixed = 0.0;
    if (n > 0) {
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(ct);
        if (gross_tight) {
            beta = cod.solve(signs);
            if ((ct * beta - signs).lpNorm<Eigen::Infinity>() <= 1e-9) {
                mu_free = true;
                lambda0 = cod.solve(-g_free);
            } else {
                Matrix full(n, m + 1);
                full << ct, signs;
                const Vector sol = Eigen::CompleteOrthogonalDecomposition<Matrix>(full).solve(-g_free);
                lambda0 = sol.head(m);
                mu_fixed = sol[m];
                beta.setZero();
            }
        } else {
            lambda0 = cod.solve(-g_free);
        }
    }

    auto worst_multiplier = [&](double mu) {
        const Vector lambda = lambda0 - mu * beta;
        double worst = gross_tight ? std::min(0.0, mu) : 0.0;
        for (Index j = 0; j < p; ++j) {
            if (std::abs(w[j]) > support_tol) continue;
            const double base = g[j] + lambda.dot(sys.lhs.col(j));
            worst = std::min({worst, base + mu, -base + mu});
        }
        return worst;
    };

    KktResiduals out;
    double mu = mu_fixed;
    if (mu_free) {
        // min_j of the multipliers is concave piecewise linear in mu: ternary search.
        double lo = 0.0;
        double hi = 10.0 * (1.0 + g.lpNorm<Eigen::Infinity>() +
                            lambda0.lpNorm<Eigen::Infinity>() *
                                (1.0 + sys.lhs.cwiseAbs().maxCoeff()));
        for (int it = 0; it < 200; ++it) {
            const double a = lo + (hi - lo) / 3.0;
            const double b = hi - (hi - lo) / 3.0;
            if (worst_multiplier(a) < worst_multiplier(b)) lo = a; else hi = b;
        }
        mu = 0.5 * (lo + hi);
    }
    const Vector lambda = lambda0 - mu * beta;
    if (n > 0) {
        const Vector exposure = gross_tight ? Vector(mu * signs) : Vector::Zero(n);
        out.stationarity = (g_free + ct * lambda + exposure).lpNorm<Eigen::Infinity>();
    }
    out.dual_infeasibility = -worst_multiplier(gross_tight ? mu : 0.0);
    out.primal_infeasibility = std::max({(sys.lhs * w - sys.rhs).lpNorm<Eigen::Infinity>(),
                                         w.lpNorm<1>() - problem.c(), 0.0});
    return out;
}

}  // namespace ge
