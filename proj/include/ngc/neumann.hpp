#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ngc/error.hpp"
#include "ngc/graph.hpp"
#include "ngc/linalg.hpp"
#include "ngc/rng.hpp"

namespace ngc {

inline constexpr double kDefaultLambda = 32.0;
inline constexpr int kDefaultOrder = 16;
inline constexpr Index kDefaultSolveCap = 2000;
inline constexpr Index kDefaultMaterializeCap = 5000;

/// Truncated Neumann propagation operator
///   A_S = 1/(lambda+1) * sum_{s=0..S} (lambda/(lambda+1) * A)^s
/// over a normalized adjacency A.
class NeumannOperator {
public:
    NeumannOperator(NormalizedAdjacency adjacency, double lambda = kDefaultLambda,
                    int order = kDefaultOrder)
        : adjacency_(std::move(adjacency)), lambda_(lambda), order_(order) {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            throw Error("lambda must be finite and non-negative");
        }
        if (order < 0) throw Error("truncation order must be >= 0");
    }

    const NormalizedAdjacency& adjacency() const noexcept { return adjacency_; }
    double lambda() const noexcept { return lambda_; }
    int order() const noexcept { return order_; }
    Index size() const noexcept { return adjacency_.size(); }

    /// r = lambda/(lambda+1), in [0, 1).
    double decay_ratio() const noexcept { return lambda_ / (lambda_ + 1.0); }

    /// Common row sum of A_S in rw mode: 1 - r^(S+1).
    double row_sum_constant() const noexcept {
        return 1.0 - std::pow(decay_ratio(), order_ + 1);
    }

private:
    NormalizedAdjacency adjacency_;
    double lambda_;
    int order_;
};

/// Called after each depth s with the partial sum through that depth
/// (already scaled by 1/(lambda+1)).
using DepthCallback = std::function<void(int depth, const FeatureMatrix& partial)>;

namespace detail {

inline void require_rows(Index expected, const FeatureMatrix& x, const char* what) {
    if (x.rows() != expected) {
        throw DimensionError(std::string(what) + ": feature matrix has " + std::to_string(x.rows()) +
                             " rows, operator has " + std::to_string(expected) + " nodes");
    }
}

inline void require_finite(const FeatureMatrix& x, const char* what) {
    if (!x.allFinite()) throw Error(std::string(what) + ": feature matrix has non-finite entries");
}

/// Forward accumulation of 1/(lambda+1) * sum_s r^s P^s x with Z_{s+1} = P Z_s.
/// The unscaled sum is divided by (lambda+1) once at the end so that S = 0
/// and lambda = 0 reproduce x/(lambda+1) and x bit for bit.
template <typename Step>
FeatureMatrix neumann_series(Step&& step, double lambda, int order, const FeatureMatrix& x,
                             const DepthCallback& on_depth) {
    const double r = lambda / (lambda + 1.0);
    const double scale = lambda + 1.0;
    FeatureMatrix acc = x;
    if (on_depth) on_depth(0, acc / scale);
    if (r == 0.0) {
        for (int s = 1; s <= order && on_depth; ++s) on_depth(s, acc / scale);
        return acc / scale;
    }
    FeatureMatrix z = x;
    double coeff = 1.0;
    for (int s = 1; s <= order; ++s) {
        z = step(z);
        coeff *= r;
        acc.noalias() += coeff * z;
        if (on_depth) on_depth(s, acc / scale);
    }
    return acc / scale;
}

}  // namespace detail

/// A_S x via S sparse-dense products. Leaves x untouched.
inline FeatureMatrix neumann_propagate(const NeumannOperator& op, const FeatureMatrix& x,
                                       const DepthCallback& on_depth = {}) {
    detail::require_rows(op.size(), x, "neumann_propagate");
    detail::require_finite(x, "neumann_propagate");
    const SparseMatrix& a = op.adjacency().matrix();
    return detail::neumann_series([&](const FeatureMatrix& z) -> FeatureMatrix { return a * z; },
                                  op.lambda(), op.order(), x, on_depth);
}

/// Dense solve of (I + lambda (I - A)) F = X; the untruncated filter.
inline FeatureMatrix exact_gsd_solve(const NormalizedAdjacency& adjacency, double lambda,
                                     const FeatureMatrix& x, Index cap = kDefaultSolveCap) {
    const Index n = adjacency.size();
    if (n > cap) {
        throw CapacityError("exact_gsd_solve: n=" + std::to_string(n) + " exceeds dense cap " +
                            std::to_string(cap));
    }
    detail::require_rows(n, x, "exact_gsd_solve");
    if (!(lambda >= 0.0)) throw Error("lambda must be non-negative");
    Matrix system = -lambda * adjacency.to_dense();
    system.diagonal().array() += 1.0 + lambda;
    if (adjacency.mode() == NormMode::sym) {
        Eigen::LLT<Matrix> llt(system);
        if (llt.info() != Eigen::Success) throw Error("exact_gsd_solve: Cholesky factorization failed");
        return llt.solve(x);
    }
    Eigen::PartialPivLU<Matrix> lu(system);
    FeatureMatrix f = lu.solve(x);
    if (!f.allFinite()) throw Error("exact_gsd_solve: LU factorization is singular");
    return f;
}

/// Dense A_S, obtained by propagating the identity.
inline Matrix materialize_operator(const NeumannOperator& op, Index cap = kDefaultMaterializeCap) {
    const Index n = op.size();
    if (n > cap) {
        throw CapacityError("materialize_operator: n=" + std::to_string(n) + " exceeds cap " +
                            std::to_string(cap));
    }
    return neumann_propagate(op, Matrix::Identity(n, n));
}

struct RowSumReport {
    Vector sums;
    double expected = 0.0;       ///< 1 - r^(S+1)
    double max_deviation = 0.0;  ///< max_i |sums_i - expected|
    bool certified = false;      ///< identity only holds in rw mode
};

/// Row sums of A_S, computed as A_S * 1.
inline RowSumReport row_sum_check(const NeumannOperator& op) {
    RowSumReport rep;
    rep.sums = neumann_propagate(op, Matrix::Ones(op.size(), 1)).col(0);
    rep.expected = op.row_sum_constant();
    rep.max_deviation = (rep.sums.array() - rep.expected).abs().maxCoeff();
    rep.certified = op.adjacency().mode() == NormMode::rw;
    return rep;
}

/// Per-row and global high-order connectivity factor of A_S.
struct ConnectivityReport {
    /// tau_i = n * ||row_i(A_S)||^2 / R^2. NaN for rows not visited when sampled.
    Vector tau_i;
    double tau = 0.0;        ///< max over computed rows
    double predictor = 0.0;  ///< tau * ln(n) / n
    bool exact = true;       ///< false: tau is a lower bound from sampled rows
    Index sampled_rows = 0;  ///< rows evaluated when !exact
    bool certified = false;  ///< [1, n] range proven only for rw mode
};

/// tau from the full materialization when n <= row_cap, otherwise the max
/// over `sample_rows` uniformly drawn rows (a lower bound, flagged exact=false).
inline ConnectivityReport connectivity_factor(const NeumannOperator& op,
                                              Index row_cap = kDefaultMaterializeCap,
                                              Index sample_rows = 256, std::uint64_t seed = 0) {
    const Index n = op.size();
    const double big_r = op.row_sum_constant();
    const double scale = static_cast<double>(n) / (big_r * big_r);
    ConnectivityReport rep;
    rep.certified = op.adjacency().mode() == NormMode::rw;
    rep.tau_i = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());

    if (n <= row_cap) {
        const Matrix dense = materialize_operator(op, row_cap);
        rep.tau_i = dense.rowwise().squaredNorm() * scale;
        rep.tau = rep.tau_i.maxCoeff();
        rep.exact = true;
        rep.sampled_rows = n;
    } else {
        if (sample_rows > n) {
            throw Error("connectivity_factor: sampleRows=" + std::to_string(sample_rows) +
                        " exceeds n=" + std::to_string(n));
        }
        if (sample_rows < 1) throw Error("connectivity_factor: sampleRows must be >= 1");
        std::vector<Index> all(static_cast<std::size_t>(n));
        std::iota(all.begin(), all.end(), Index{0});
        std::vector<Index> rows;
        rows.reserve(static_cast<std::size_t>(sample_rows));
        Engine eng = make_engine(seed, "tau-rows");
        std::sample(all.begin(), all.end(), std::back_inserter(rows), sample_rows, eng);

        // Row i of A_S is column i of A_S^T, i.e. the series over A^T applied to e_i.
        const SparseMatrix at = op.adjacency().matrix().transpose();
        Matrix basis = Matrix::Zero(n, static_cast<Index>(rows.size()));
        for (std::size_t k = 0; k < rows.size(); ++k) basis(rows[k], static_cast<Index>(k)) = 1.0;
        const Matrix cols = detail::neumann_series(
            [&](const FeatureMatrix& z) -> FeatureMatrix { return at * z; }, op.lambda(),
            op.order(), basis, {});
        rep.tau = 0.0;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const double t = cols.col(static_cast<Index>(k)).squaredNorm() * scale;
            rep.tau_i[rows[k]] = t;
            rep.tau = std::max(rep.tau, t);
        }
        rep.exact = false;
        rep.sampled_rows = static_cast<Index>(rows.size());
    }
    rep.predictor = rep.tau * std::log(static_cast<double>(n)) / static_cast<double>(n);
    return rep;
}

/// Graph smoothness of F, each undirected edge counted once.
///
/// sym: sum_{(i,j)} ||F_i/sqrt(d_i+1) - F_j/sqrt(d_j+1)||^2, which equals
///      tr(F^T (I - A_sym) F).
/// rw:  sum_{(i,j)} (1/(d_i+1) + 1/(d_j+1))/2 * ||F_i - F_j||^2, the
///      degree-weighted edge sum symmetrized over both orientations.
inline double smoothness_energy(const FeatureMatrix& f, const NormalizedAdjacency& adjacency) {
    detail::require_rows(adjacency.size(), f, "smoothness_energy");
    const SparseMatrix& a = adjacency.matrix();
    const Vector& deg = adjacency.self_loop_degree();
    const bool sym = adjacency.mode() == NormMode::sym;
    double total = 0.0;
    for (Index i = 0; i < a.outerSize(); ++i) {
        for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
            const Index j = it.col();
            if (j <= i) continue;
            if (sym) {
                total += (f.row(i) / std::sqrt(deg[i]) - f.row(j) / std::sqrt(deg[j])).squaredNorm();
            } else {
                total += 0.5 * (1.0 / deg[i] + 1.0 / deg[j]) * (f.row(i) - f.row(j)).squaredNorm();
            }
        }
    }
    return total;
}

}  // namespace ngc
