#include "ge/lars.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cholesky_update.hpp"

namespace ge {

TrackingProblem TrackingProblem::from_moments(Matrix sigma_xx, Vector sigma_xy, double var_y) {
    if (sigma_xx.rows() != sigma_xx.cols() || sigma_xx.rows() != sigma_xy.size()) {
        throw DataError("tracking moments have inconsistent shapes");
    }
    if (!(var_y >= 0.0)) throw DataError("var_y must be nonnegative");
    TrackingProblem tp;
    tp.sigma_xx = 0.5 * (sigma_xx + sigma_xx.transpose());
    tp.sigma_xy = std::move(sigma_xy);
    tp.var_y = var_y;
    for (Index k = 0; k < tp.sigma_xy.size(); ++k) {
        tp.predictor_assets.push_back(k);
        tp.labels.push_back("x" + std::to_string(k));
    }
    return tp;
}

Vector TrackingProblem::assemble(const Vector& w_star) const {
    if (y_weights.size() == 0) {
        throw DataError("tracking problem has no asset-space composition for Y");
    }
    Vector w = (1.0 - w_star.sum()) * y_weights;
    for (Index k = 0; k < w_star.size(); ++k) {
        w[predictor_assets[static_cast<std::size_t>(k)]] += w_star[k];
    }
    return w;
}

double TrackingProblem::residual_variance(const Vector& w_star) const {
    return var_y - 2.0 * w_star.dot(sigma_xy) + w_star.dot(sigma_xx * w_star);
}

namespace {

TrackingProblem build_tracking(const CovarianceEstimate& sigma, const Vector& y,
                               const std::vector<std::string>& asset_ids) {
    const Index p = sigma.dim();
    if (p < 2) throw DataError("tracking regression needs at least 2 assets");
    if (y.size() != p) throw DataError("tracked portfolio does not match the covariance dimension");
    if (!asset_ids.empty() && static_cast<Index>(asset_ids.size()) != p) {
        throw DataError("asset id count does not match the covariance dimension");
    }
    Index excluded = 0;
    for (Index j = 1; j < p; ++j) {
        if (std::abs(y[j]) > std::abs(y[excluded])) excluded = j;
    }

    TrackingProblem tp;
    tp.y_weights = y;
    tp.excluded_asset = excluded;
    Matrix diff(p, p - 1);  // column k = y - e_{asset_k}
    for (Index j = 0, k = 0; j < p; ++j) {
        if (j == excluded) continue;
        diff.col(k) = y;
        diff(j, k) -= 1.0;
        tp.predictor_assets.push_back(j);
        tp.labels.push_back(asset_ids.empty() ? std::to_string(j)
                                              : asset_ids[static_cast<std::size_t>(j)]);
        ++k;
    }
    const Matrix& s = sigma.matrix();
    const Vector sy = s * y;
    tp.var_y = y.dot(sy);
    tp.sigma_xy = diff.transpose() * sy;
    tp.sigma_xx = diff.transpose() * s * diff;
    tp.sigma_xx = 0.5 * (tp.sigma_xx + tp.sigma_xx.transpose());
    return tp;
}

}  // namespace

TrackingProblem transform_regression(const CovarianceEstimate& sigma, Index y_asset,
                                     const std::vector<std::string>& asset_ids) {
    if (y_asset < 0 || y_asset >= sigma.dim()) throw DataError("tracked asset index out of range");
    return build_tracking(sigma, Vector::Unit(sigma.dim(), y_asset), asset_ids);
}

TrackingProblem transform_regression(const CovarianceEstimate& sigma, const AllocationVector& y,
                                     const std::vector<std::string>& asset_ids) {
    return build_tracking(sigma, y.weights(), asset_ids);
}

double implied_exposure(const Vector& w_star) {
    return w_star.lpNorm<1>() + std::abs(1.0 - w_star.sum());
}

SolutionPath::SolutionPath(TrackingProblem problem, std::vector<Knot> knots,
                           std::vector<Index> skipped, Scaling scaling, bool complete)
    : problem_(std::move(problem)),
      knots_(std::move(knots)),
      skipped_(std::move(skipped)),
      scaling_(scaling),
      complete_(complete) {
    if (knots_.empty()) throw DataError("solution path needs at least one knot");
}

Vector SolutionPath::coefficients_at(double d) const {
    if (d < 0.0) throw DataError("d must be nonnegative");
    if (d >= knots_.back().d) {
        if (d > knots_.back().d * (1.0 + 1e-12) + 1e-15 && !complete_) {
            throw DataError("d beyond the end of a truncated path");
        }
        return knots_.back().w_star;
    }
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), d,
                                     [](double v, const Knot& k) { return v < k.d; });
    const Knot& right = *it;
    const Knot& left = *(it - 1);
    const double t = (d - left.d) / (right.d - left.d);
    return (1.0 - t) * left.w_star + t * right.w_star;
}

SolutionPath::ExposurePoint SolutionPath::best_for_exposure(double c) const {
    if (!(c >= 1.0)) throw DataError("exposure bound c must be >= 1");
    ExposurePoint best{0.0, knots_.front().w_star};
    bool found = false;
    auto consider = [&](double d, const Vector& w) {
        if (!found || d > best.d) {
            best = ExposurePoint{d, w};
            found = true;
        }
    };
    // c(d) = ||w(d)||_1 + |1 - 1'w(d)| is convex on each segment: ||w||_1 is
    // linear there (signs are fixed between knots) and the second term is the
    // absolute value of an affine function.
    for (std::size_t k = 0; k < knots_.size(); ++k) {
        const Knot& a = knots_[k];
        if (implied_exposure(a.w_star) <= c) consider(a.d, a.w_star);
        if (k + 1 == knots_.size()) break;
        const Knot& b = knots_[k + 1];
        const double l0 = a.w_star.lpNorm<1>();
        const double l1 = b.w_star.lpNorm<1>();
        const double s0 = 1.0 - a.w_star.sum();
        const double s1 = 1.0 - b.w_star.sum();
        for (double branch : {1.0, -1.0}) {
            // l0 + t (l1 - l0) + branch (s0 + t (s1 - s0)) = c
            const double slope = (l1 - l0) + branch * (s1 - s0);
            if (std::abs(slope) < 1e-300) continue;
            const double t = (c - l0 - branch * s0) / slope;
            if (!(t >= 0.0 && t <= 1.0)) continue;
            if (branch * (s0 + t * (s1 - s0)) < -1e-12) continue;
            const Vector w = (1.0 - t) * a.w_star + t * b.w_star;
            const double d = a.d + t * (b.d - a.d);
            // The root can overshoot c by rounding; step back inside.
            if (implied_exposure(w) <= c * (1.0 + 1e-12)) consider(d, w);
        }
    }
    return best;
}

namespace {

constexpr double kTieTol = 1e-12;

struct LarsState {
    Vector beta;         // solved-scale coefficients
    Vector corr;         // solved-scale covariances of the residual with X_j
    std::vector<int> sign;
    std::vector<bool> active;
    std::vector<bool> excluded;
};

}  // namespace

SolutionPath lars_path(const TrackingProblem& problem, const LarsOptions& options) {
    const Index m = problem.predictors();
    if (problem.sigma_xx.rows() != m || problem.sigma_xx.cols() != m) {
        throw DataError("tracking problem has inconsistent shapes");
    }
    if (!(options.max_d >= 0.0)) throw DataError("max_d must be nonnegative");
    if (m > 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(problem.sigma_xx, Eigen::EigenvaluesOnly);
        const double hi = eig.eigenvalues().maxCoeff();
        if (eig.eigenvalues().minCoeff() < -1e-8 * std::max(hi, 0.0)) {
            throw NumericalError("predictor covariance is not positive semi-definite");
        }
    }

    // Solved-scale moments: beta_j = scale_j w_j.
    Vector scale = Vector::Ones(m);
    std::vector<Index> skipped;
    LarsState st;
    st.excluded.assign(static_cast<std::size_t>(m), false);
    const double diag_max = m > 0 ? problem.sigma_xx.diagonal().maxCoeff() : 0.0;
    for (Index j = 0; j < m; ++j) {
        const double v = problem.sigma_xx(j, j);
        if (!(v > 1e-14 * std::max(diag_max, 1e-300))) {
            st.excluded[static_cast<std::size_t>(j)] = true;
            skipped.push_back(j);
            continue;
        }
        if (options.scaling == Scaling::standardized) scale[j] = std::sqrt(v);
    }
    const Matrix gram = scale.asDiagonal().inverse() * problem.sigma_xx * scale.asDiagonal().inverse();
    const Vector cov_y = scale.asDiagonal().inverse() * problem.sigma_xy;

    st.beta = Vector::Zero(m);
    st.corr = cov_y;
    st.sign.assign(static_cast<std::size_t>(m), 0);
    st.active.assign(static_cast<std::size_t>(m), false);

    detail::UpdatableCholesky chol(gram);
    double d = 0.0;

    auto make_knot = [&](KnotEvent event) {
        Knot k;
        k.d = d;
        k.w_star = st.beta.cwiseQuotient(scale);
        for (Index idx : chol.order()) k.active.push_back(idx);
        std::sort(k.active.begin(), k.active.end());
        k.implied_c = implied_exposure(k.w_star);
        k.empirical_variance = problem.residual_variance(k.w_star);
        k.event = event;
        return k;
    };
    std::vector<Knot> knots;
    auto push_knot = [&](KnotEvent event) {
        Knot k = make_knot(event);
        if (!knots.empty() && k.d <= knots.back().d) {
            // Several events at the same d: one knot carrying the final active set.
            k.d = knots.back().d;
            if (knots.back().event != KnotEvent::start) knots.back() = std::move(k);
            else knots.back().active = k.active;
            return;
        }
        knots.push_back(std::move(k));
    };

    auto try_enter = [&](Index j) {
        if (!chol.add(j, 1e-10)) {
            st.excluded[static_cast<std::size_t>(j)] = true;
            skipped.push_back(j);
            return false;
        }
        st.active[static_cast<std::size_t>(j)] = true;
        st.sign[static_cast<std::size_t>(j)] = st.corr[j] >= 0.0 ? 1 : -1;
        return true;
    };

    auto eligible = [&](Index j) {
        return !st.active[static_cast<std::size_t>(j)] && !st.excluded[static_cast<std::size_t>(j)];
    };

    // First entry: the predictor(s) with the largest |cov(X_j, Y)| in the solved scale.
    double cmax = 0.0;
    for (Index j = 0; j < m; ++j) {
        if (eligible(j)) cmax = std::max(cmax, std::abs(st.corr[j]));
    }
    const double corr_floor = 1e-13 * std::max({cmax, std::sqrt(std::max(problem.var_y, 0.0)) *
                                                          std::sqrt(std::max(diag_max, 0.0)),
                                                1e-300});
    bool complete = false;
    if (cmax <= corr_floor) {
        knots.push_back(make_knot(KnotEvent::start));
        return SolutionPath(problem, std::move(knots), std::move(skipped), options.scaling, true);
    }
    for (Index j = 0; j < m; ++j) {
        if (!eligible(j) || std::abs(st.corr[j]) < cmax * (1.0 - kTieTol)) continue;
        if (static_cast<Index>(chol.size()) >= options.max_active) break;
        try_enter(j);
    }
    knots.push_back(make_knot(KnotEvent::start));

    Index just_dropped = -1;
    int dropped_sign = 0;
    const int max_steps = static_cast<int>(8 * std::max<Index>(m, 1) + 16);
    for (int step = 0; step < max_steps; ++step) {
        const auto& order = chol.order();
        const auto na = static_cast<Index>(order.size());
        if (na == 0) {
            complete = true;
            break;
        }
        Vector s_a(na);
        double c_now = 0.0;
        for (Index k = 0; k < na; ++k) {
            const Index j = order[static_cast<std::size_t>(k)];
            s_a[k] = st.sign[static_cast<std::size_t>(j)];
            c_now += std::abs(st.corr[j]);
        }
        c_now /= static_cast<double>(na);

        const Vector g_a = chol.solve(s_a);
        Vector a = Vector::Zero(m);
        for (Index k = 0; k < na; ++k) a += gram.col(order[static_cast<std::size_t>(k)]) * g_a[k];
        const double rate = s_a.dot(g_a);  // d(d)/d(gamma)

        enum class Event { full, entry, drop, limit } event = Event::full;
        double gamma = c_now;
        Index who = -1;

        for (Index j = 0; j < m; ++j) {
            if (!eligible(j)) continue;
            for (double side : {1.0, -1.0}) {
                const double denom = 1.0 - side * a[j];
                if (denom <= 1e-14) continue;
                const double gj = (c_now - side * st.corr[j]) / denom;
                // A predictor that just left sits at the tie on its old side.
                const double floor = j == just_dropped && side == dropped_sign ? 1e-9 : 1e-14;
                if (gj > floor * c_now && gj < gamma * (1.0 - kTieTol)) {
                    gamma = gj;
                    who = j;
                    event = Event::entry;
                } else if (event == Event::entry && gj > floor * c_now &&
                           gj <= gamma * (1.0 + kTieTol) && j < who) {
                    who = j;
                }
            }
        }
        for (Index k = 0; k < na; ++k) {
            const Index j = order[static_cast<std::size_t>(k)];
            if (st.beta[j] == 0.0 || g_a[k] == 0.0) continue;
            const double gj = -st.beta[j] / g_a[k];
            if (gj > 0.0 && gj < gamma * (1.0 - kTieTol)) {
                gamma = gj;
                who = j;
                event = Event::drop;
            }
        }
        if (std::isfinite(options.max_d)) {
            const double gd = (options.max_d - d) / rate;
            if (gd <= gamma) {
                gamma = std::max(gd, 0.0);
                event = Event::limit;
            }
        }

        for (Index k = 0; k < na; ++k) st.beta[order[static_cast<std::size_t>(k)]] += gamma * g_a[k];
        st.corr -= gamma * a;
        d = 0.0;
        for (Index j = 0; j < m; ++j) d += std::abs(st.beta[j]);
        just_dropped = -1;

        if (event == Event::limit) {
            d = std::min(d, options.max_d);
            push_knot(KnotEvent::limit);
            break;
        }
        if (event == Event::full) {
            push_knot(KnotEvent::full);
            complete = true;
            break;
        }
        if (event == Event::drop) {
            const auto pos = std::find(order.begin(), order.end(), who) - order.begin();
            chol.remove_at(pos);
            st.beta[who] = 0.0;
            st.active[static_cast<std::size_t>(who)] = false;
            dropped_sign = st.sign[static_cast<std::size_t>(who)];
            st.sign[static_cast<std::size_t>(who)] = 0;
            just_dropped = who;
            push_knot(KnotEvent::drop);
            continue;
        }
        // Entry, together with every other predictor tied at the same level.
        if (na >= options.max_active) {
            push_knot(KnotEvent::limit);
            break;
        }
        const double level = c_now - gamma;
        bool entered = false;
        for (Index j = 0; j < m; ++j) {
            if (!eligible(j)) continue;
            if (j != who && std::abs(std::abs(st.corr[j]) - level) > 1e-9 * level) continue;
            if (static_cast<Index>(chol.size()) >= options.max_active) break;
            entered = try_enter(j) || entered;
        }
        if (entered) push_knot(KnotEvent::entry);
    }

    if (!complete && knots.back().event != KnotEvent::limit) {
        throw NumericalError("LARS path did not terminate");
    }
    return SolutionPath(problem, std::move(knots), std::move(skipped), options.scaling, complete);
}

ApproxPoint approx_solution_at(const SolutionPath& path, double c) {
    const auto point = path.best_for_exposure(c);
    const Vector w = path.problem().assemble(point.w_star);
    return ApproxPoint{implied_exposure(point.w_star), point.d,
                       AllocationVector::renormalized(w),
                       path.problem().residual_variance(point.w_star)};
}

std::vector<ApproxPoint> approx_risk_path(const CovarianceEstimate& sigma,
                                          const AllocationVector& y, double d_step,
                                          const LarsOptions& options) {
    if (!(d_step > 0.0)) throw DataError("d grid step must be positive");
    const TrackingProblem tp = transform_regression(sigma, y);
    const SolutionPath path = lars_path(tp, options);

    std::vector<double> ds;
    for (const auto& k : path.knots()) ds.push_back(k.d);
    for (double d = d_step; d < path.max_d(); d += d_step) ds.push_back(d);
    std::sort(ds.begin(), ds.end());
    ds.erase(std::unique(ds.begin(), ds.end()), ds.end());

    std::vector<ApproxPoint> points;
    points.reserve(ds.size());
    for (double d : ds) {
        const Vector w_star = path.coefficients_at(d);
        points.push_back(ApproxPoint{implied_exposure(w_star), d,
                                     AllocationVector::renormalized(tp.assemble(w_star)),
                                     tp.residual_variance(w_star)});
    }
    std::stable_sort(points.begin(), points.end(), [](const ApproxPoint& a, const ApproxPoint& b) {
        return a.c < b.c || (a.c == b.c && a.variance < b.variance);
    });
    std::vector<ApproxPoint> frontier;
    for (auto& pt : points) {
        if (!frontier.empty() && pt.variance >= frontier.back().variance) continue;
        frontier.push_back(std::move(pt));
    }
    return frontier;
}

}  // namespace ge
