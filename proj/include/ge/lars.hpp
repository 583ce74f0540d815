#pragma once

#include <limits>
#include <string>
#include <vector>

#include "ge/core.hpp"

namespace ge {

/**
 * Second moments of the tracking regression Y ~ sum_j w*_j X_j + b with
 * predictors X_j = Y - R_j, all derived from the asset covariance by
 * bilinearity.
 *
 * `y_weights` is Y's composition in asset space. `predictor_assets[k]` is
 * the asset behind predictor k; the asset with the largest |weight| in Y
 * has no predictor, since the p differences Y - R_j are linearly dependent
 * (sum_j y_j (Y - R_j) = 0).
 */
struct TrackingProblem {
    Matrix sigma_xx;
    Vector sigma_xy;
    double var_y = 0.0;
    Vector y_weights;
    std::vector<Index> predictor_assets;
    Index excluded_asset = -1;
    std::vector<std::string> labels;

    Index predictors() const { return sigma_xy.size(); }

    /// Moments given directly (no asset-space mapping); y_weights stays empty.
    static TrackingProblem from_moments(Matrix sigma_xx, Vector sigma_xy, double var_y);

    /// Asset-space allocation (1 - 1'w*) y + sum_k w*_k e_{asset_k}. Needs y_weights.
    Vector assemble(const Vector& w_star) const;
    /// var(Y - w*'X) = var_y - 2 w*'sigma_xy + w*' sigma_xx w*.
    double residual_variance(const Vector& w_star) const;
};

TrackingProblem transform_regression(const CovarianceEstimate& sigma, Index y_asset,
                                     const std::vector<std::string>& asset_ids = {});
TrackingProblem transform_regression(const CovarianceEstimate& sigma, const AllocationVector& y,
                                     const std::vector<std::string>& asset_ids = {});

/// Gross exposure bound implied by tracking weights: ||w*||_1 + |1 - 1'w*|.
double implied_exposure(const Vector& w_star);

/**
 * Scale in which the L1 constraint is imposed. `original` solves
 * min E(Y - w'X - b)^2 s.t. ||w||_1 <= d. `standardized` first rescales
 * each X_j to unit variance, so the constraint is sum_j sd(X_j)|w_j| <= d.
 */
enum class Scaling { original, standardized };

struct LarsOptions {
    double max_d = std::numeric_limits<double>::infinity();
    Index max_active = std::numeric_limits<Index>::max();
    Scaling scaling = Scaling::original;
};

enum class KnotEvent { start, entry, drop, limit, full };

struct Knot {
    double d = 0.0;                 ///< L1 norm of the coefficients in the solved scale
    std::vector<Index> active;      ///< active set on the segment that starts here
    Vector w_star;                  ///< coefficients, original scale
    double implied_c = 1.0;
    double empirical_variance = 0.0;
    KnotEvent event = KnotEvent::start;
};

/**
 * Piecewise-linear LASSO path d -> w*(d). Between consecutive knots the
 * coefficients are the linear interpolation of the endpoint values.
 */
class SolutionPath {
public:
    SolutionPath(TrackingProblem problem, std::vector<Knot> knots, std::vector<Index> skipped,
                 Scaling scaling, bool complete);

    const std::vector<Knot>& knots() const { return knots_; }
    /// Predictors left out because they were collinear with the active set.
    const std::vector<Index>& skipped() const { return skipped_; }
    const TrackingProblem& problem() const { return problem_; }
    Scaling scaling() const { return scaling_; }
    /// True when the path runs to the unconstrained least-squares fit.
    bool complete() const { return complete_; }

    double max_d() const { return knots_.back().d; }

    /// w*(d) for 0 <= d <= max_d (or any d >= 0 when complete).
    Vector coefficients_at(double d) const;

    struct ExposurePoint {
        double d = 0.0;
        Vector w_star;
    };

    /**
     * Largest d with implied_exposure(w*(d)) <= c, and w* there. Since the
     * residual variance is nonincreasing in d this is the lowest-risk point
     * of the path that is feasible for exposure bound c.
     */
    ExposurePoint best_for_exposure(double c) const;

private:
    TrackingProblem problem_;
    std::vector<Knot> knots_;
    std::vector<Index> skipped_;
    Scaling scaling_;
    bool complete_;
};

SolutionPath lars_path(const TrackingProblem& problem, const LarsOptions& options = {});

struct ApproxPoint {
    double c = 1.0;
    double d = 0.0;
    AllocationVector weights;
    double variance = 0.0;
};

/**
 * Approximate exposure-constrained solutions from the tracking path with
 * Y = y: each path point is assembled into an asset allocation and mapped
 * to c = ||w*||_1 + |1 - 1'w*|. Points are sampled at every knot and every
 * `d_step` in between. Sorted by c; among points with equal c the smaller
 * variance is kept, and dominated points (larger c, no smaller variance)
 * are dropped, so the variance is nonincreasing in c.
 */
std::vector<ApproxPoint> approx_risk_path(const CovarianceEstimate& sigma,
                                          const AllocationVector& y, double d_step,
                                          const LarsOptions& options = {});

/// Approximate solution at one exposure bound (see SolutionPath::best_for_exposure).
ApproxPoint approx_solution_at(const SolutionPath& path, double c);

}  // namespace ge
