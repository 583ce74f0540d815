#pragma once

#include <cmath>
#include <vector>

#include "ge/core.hpp"

namespace ge::detail {

/// Cholesky factor of H[F, F] for an ordered index set F, updated in place
/// as indices are appended or removed.
class UpdatableCholesky {
public:
    explicit UpdatableCholesky(const Matrix& h) : h_(h), l_(Matrix::Zero(h.rows(), h.rows())) {}

    Index size() const { return n_; }
    const std::vector<Index>& order() const { return order_; }

    /// Appends j. Returns false (and leaves the factor unchanged) when the
    /// new pivot is not safely positive, i.e. column j is numerically in the
    /// span of the current set.
    bool add(Index j, double relative_pivot_tol = 1e-13) {
        const Index n = n_;
        Vector col(n);
        for (Index k = 0; k < n; ++k) col[k] = h_(order_[static_cast<std::size_t>(k)], j);
        if (n > 0) l_.topLeftCorner(n, n).triangularView<Eigen::Lower>().solveInPlace(col);
        const double d2 = h_(j, j) - col.squaredNorm();
        if (!(d2 > relative_pivot_tol * h_(j, j)) || !(d2 > 0.0)) return false;
        l_.row(n).head(n) = col.transpose();
        l_(n, n) = std::sqrt(d2);
        order_.push_back(j);
        ++n_;
        return true;
    }

    void remove_at(Index pos) {
        const Index m = n_ - pos - 1;
        if (m > 0) {
            Vector v = l_.block(pos + 1, pos, m, 1);
            if (pos > 0) l_.block(pos, 0, m, pos) = l_.block(pos + 1, 0, m, pos).eval();
            Matrix l22 = l_.block(pos + 1, pos + 1, m, m).triangularView<Eigen::Lower>();
            rank_one_update(l22, v);
            l_.block(pos, pos, m, m) = l22;
        }
        l_.row(n_ - 1).setZero();
        l_.col(n_ - 1).setZero();
        order_.erase(order_.begin() + pos);
        --n_;
    }

    template <typename Rhs>
    Matrix solve(const Rhs& b) const {
        const auto l = l_.topLeftCorner(n_, n_);
        Matrix y = l.triangularView<Eigen::Lower>().solve(b);
        return l.transpose().triangularView<Eigen::Upper>().solve(y);
    }

private:
    // L L' + v v' -> L L'
    static void rank_one_update(Matrix& l, Vector v) {
        const Index m = l.rows();
        for (Index k = 0; k < m; ++k) {
            const double r = std::hypot(l(k, k), v[k]);
            const double c = r / l(k, k);
            const double s = v[k] / l(k, k);
            l(k, k) = r;
            for (Index i = k + 1; i < m; ++i) {
                l(i, k) = (l(i, k) + s * v[i]) / c;
                v[i] = c * v[i] - s * l(i, k);
            }
        }
    }

    const Matrix& h_;
    Matrix l_;
    Index n_ = 0;
    std::vector<Index> order_;
};

}  // namespace ge::detail
