#pragma once

#include <optional>
#include <vector>

#include "ge/core.hpp"

namespace ge {

/// Extra linear equality constraints A w = a (A is m x p).
struct EqualityConstraints {
    Matrix lhs;
    Vector rhs;
};

/**
 * min w' S w  subject to  1'w = 1,  ||w||_1 <= c,  A w = a.
 *
 * Construction checks c >= 1, the shapes of A and a, and that S is
 * positive semi-definite within -1e-8 * (largest eigenvalue).
 */
class QpProblem {
public:
    QpProblem(CovarianceEstimate sigma, double c,
              std::optional<EqualityConstraints> equalities = std::nullopt);

    const CovarianceEstimate& sigma() const { return sigma_; }
    double c() const { return c_; }
    const std::optional<EqualityConstraints>& equalities() const { return equalities_; }
    Index dim() const { return sigma_.dim(); }

    double min_eigenvalue() const { return min_eig_; }
    double max_eigenvalue() const { return max_eig_; }

    /// Same covariance and constraints, different exposure bound.
    QpProblem with_c(double c) const;

private:
    CovarianceEstimate sigma_;
    double c_;
    std::optional<EqualityConstraints> equalities_;
    double min_eig_ = 0.0;
    double max_eig_ = 0.0;
};

struct QpSolution {
    AllocationVector weights;
    double variance = 0.0;  ///< w' S w with the unregularized S
    int iterations = 0;
    bool exposure_binding = false;
};

struct QpOptions {
    /// Ridge added to S, relative to its largest diagonal entry. Selects the
    /// minimum-norm optimum when S is singular.
    double regularization = 1e-10;
    /// 0 means max(50 p, 100).
    int max_iterations = 0;
};

/**
 * Primal active-set solver for the gross-exposure constrained problem.
 *
 * The problem is lifted to w = w+ - w-, w+, w- >= 0, 1'(w+ + w-) <= c.
 * Each asset is tracked as zero, long (w+ free) or short (w- free); the
 * Cholesky factor of the free block of S is updated as assets enter and
 * leave. A solver object holds working buffers and is not reentrant.
 */
class ActiveSetSolver {
public:
    explicit ActiveSetSolver(QpOptions options = {});

    QpSolution solve(const QpProblem& problem);

    /// Warm start from a feasible point of `problem` (e.g. the optimum for a smaller c).
    QpSolution solve_from(const QpProblem& problem, const Vector& start);

    /// Solutions for each c in `cs` (ascending), each warm-started from the previous one.
    std::vector<QpSolution> solve_path(const QpProblem& problem, const std::vector<double>& cs);

private:
    QpOptions options_;
};

QpSolution solve(const QpProblem& problem);
QpSolution solve_no_short(const CovarianceEstimate& sigma);

struct GmvSolution {
    AllocationVector weights;
    double variance = 0.0;
    double gross_exposure = 0.0;  ///< the c beyond which the exposure bound is slack
};

/// S^{-1} 1 / (1' S^{-1} 1). Throws NumericalError when S is singular.
GmvSolution solve_gmv(const CovarianceEstimate& sigma);

struct KktResiduals {
    double stationarity = 0.0;          ///< || grad + C' lambda ||_inf on the support
    double dual_infeasibility = 0.0;    ///< most negative inequality multiplier (as a positive number)
    double primal_infeasibility = 0.0;  ///< worst constraint violation
};

/// KKT residuals of w for `problem`, computed with the unregularized covariance.
KktResiduals kkt_residuals(const QpProblem& problem, const Vector& w);

}  // namespace ge
