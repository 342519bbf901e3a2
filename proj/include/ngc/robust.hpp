#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "ngc/error.hpp"
#include "ngc/linalg.hpp"
#include "ngc/neumann.hpp"

namespace ngc {

inline constexpr double kDefaultEpsilon = 1.0;

enum class SimilarityMode { dense, edge_masked };

inline std::string_view to_string(SimilarityMode m) {
    return m == SimilarityMode::dense ? "dense" : "edge_masked";
}

inline SimilarityMode parse_similarity_mode(std::string_view s) {
    if (s == "dense") return SimilarityMode::dense;
    if (s == "edge_masked") return SimilarityMode::edge_masked;
    throw ParseError("unknown similarity mode '" + std::string(s) + "' (expected dense|edge_masked)");
}

/// Symmetric Laplacian perturbation inside the Frobenius ball.
struct Perturbation {
    Matrix delta;
    double radius = 0.0;      ///< ||delta||_F
    bool degenerate = false;  ///< F was zero, so no direction exists; delta = 0
};

/// Gram norm ||F F^T||_F, evaluated as ||F^T F||_F (same nonzero spectrum).
inline double gram_norm(const FeatureMatrix& f) {
    return (f.transpose() * f).norm();
}

/// Closed-form maximizer of <delta, F F^T> over ||delta||_F <= epsilon:
/// delta = epsilon * F F^T / ||F F^T||_F.
inline Perturbation worst_case_delta(const FeatureMatrix& f, double epsilon,
                                     Index cap = kDefaultMaterializeCap) {
    if (!(epsilon >= 0.0)) throw Error("epsilon must be non-negative");
    if (f.rows() > cap) {
        throw CapacityError("worst_case_delta: n=" + std::to_string(f.rows()) + " exceeds dense cap");
    }
    Perturbation p;
    const double g = gram_norm(f);
    if (g == 0.0) {
        p.delta = Matrix::Zero(f.rows(), f.rows());
        p.degenerate = true;
        return p;
    }
    p.delta = (epsilon / g) * (f * f.transpose());
    p.radius = p.delta.norm();
    return p;
}

/// h(delta) = <delta, F F^T>.
inline double inner_objective(const Matrix& delta, const FeatureMatrix& f) {
    if (delta.rows() != f.rows() || delta.cols() != f.rows()) {
        throw DimensionError("inner_objective: delta is " + std::to_string(delta.rows()) + "x" +
                             std::to_string(delta.cols()) + ", F has " + std::to_string(f.rows()) +
                             " rows");
    }
    // <delta, F F^T> = sum_k F_k^T delta F_k over feature columns.
    return frobenius_inner(delta * f, f);
}

inline double inner_objective(const Perturbation& p, const FeatureMatrix& f) {
    return inner_objective(p.delta, f);
}

/// Robust propagation operator: the Neumann series over A - M with
/// M = epsilon * X X^T / ||X X^T||_F built from the observed features X.
///
/// In edge_masked mode M is kept only on the sparsity pattern of A (self
/// loops included); the normalizer stays the exact global Gram norm.
class RobustOperator {
public:
    RobustOperator(NeumannOperator base, double epsilon, SimilarityMode mode,
                   const FeatureMatrix& similarity_features)
        : base_(std::move(base)), epsilon_(epsilon), mode_(mode), features_(similarity_features) {
        if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw Error("epsilon must be finite and >= 0");
        detail::require_rows(base_.size(), features_, "RobustOperator");
        gram_norm_ = gram_norm(features_);
        degenerate_ = gram_norm_ == 0.0;
        if (mode_ == SimilarityMode::edge_masked && active()) build_masked();
    }

    const NeumannOperator& base() const noexcept { return base_; }
    double epsilon() const noexcept { return epsilon_; }
    SimilarityMode mode() const noexcept { return mode_; }
    double cached_gram_norm() const noexcept { return gram_norm_; }
    const FeatureMatrix& similarity_features() const noexcept { return features_; }

    /// True when X = 0: M is undefined and propagation falls back to the base operator.
    bool degenerate() const noexcept { return degenerate_; }

    /// Whether the correction term participates at all.
    bool active() const noexcept { return epsilon_ > 0.0 && !degenerate_; }

    /// (A - M) z.
    FeatureMatrix apply_perturbed(const FeatureMatrix& z) const {
        const SparseMatrix& a = base_.adjacency().matrix();
        if (!active()) return a * z;
        if (mode_ == SimilarityMode::edge_masked) return masked_ * z;
        // X (X^T z) keeps the product O(n d k) without forming the n x n Gram.
        const Matrix xtz = features_.transpose() * z;
        FeatureMatrix out = a * z;
        out.noalias() -= (epsilon_ / gram_norm_) * (features_ * xtz);
        return out;
    }

    /// (A - M)^T z; M is symmetric in both modes.
    FeatureMatrix apply_perturbed_transpose(const FeatureMatrix& z) const {
        const SparseMatrix& a = base_.adjacency().matrix();
        if (!active()) return a.transpose() * z;
        if (mode_ == SimilarityMode::edge_masked) return masked_.transpose() * z;
        const Matrix xtz = features_.transpose() * z;
        FeatureMatrix out = a.transpose() * z;
        out.noalias() -= (epsilon_ / gram_norm_) * (features_ * xtz);
        return out;
    }

    /// Dense A - M, for oracles and diagnostics on small graphs.
    Matrix perturbed_dense(Index cap = kDefaultMaterializeCap) const {
        const Index n = base_.size();
        if (n > cap) throw CapacityError("perturbed_dense: n exceeds dense cap");
        if (!active()) return base_.adjacency().to_dense();
        if (mode_ == SimilarityMode::edge_masked) return Matrix(masked_);
        return base_.adjacency().to_dense() - (epsilon_ / gram_norm_) * (features_ * features_.transpose());
    }

private:
    void build_masked() {
        masked_ = base_.adjacency().matrix();
        const double c = epsilon_ / gram_norm_;
        for (Index i = 0; i < masked_.outerSize(); ++i) {
            for (SparseMatrix::InnerIterator it(masked_, i); it; ++it) {
                it.valueRef() -= c * features_.row(i).dot(features_.row(it.col()));
            }
        }
    }

    NeumannOperator base_;
    double epsilon_;
    SimilarityMode mode_;
    FeatureMatrix features_;
    double gram_norm_ = 0.0;
    bool degenerate_ = false;
    SparseMatrix masked_;
};

/// 1/(lambda+1) * sum_{s=0..S} [r (A - M)]^s x. With epsilon = 0 or a zero
/// similarity matrix this is exactly neumann_propagate.
inline FeatureMatrix robust_propagate(const RobustOperator& rop, const FeatureMatrix& x,
                                      const DepthCallback& on_depth = {}) {
    if (!rop.active()) return neumann_propagate(rop.base(), x, on_depth);
    detail::require_rows(rop.base().size(), x, "robust_propagate");
    detail::require_finite(x, "robust_propagate");
    return detail::neumann_series(
        [&](const FeatureMatrix& z) -> FeatureMatrix { return rop.apply_perturbed(z); },
        rop.base().lambda(), rop.base().order(), x, on_depth);
}

/// Estimate of r * ||A - M||_2, the contraction factor of the perturbed series.
/// The series converges as S grows only when this is below 1.
inline SpectralEstimate perturbed_contraction(const RobustOperator& rop, int iters = 2000,
                                              double tol = 1e-10) {
    const Index n = rop.base().size();
    // ||P||_2^2 is the dominant eigenvalue of P^T P.
    SpectralEstimate est = power_iteration(
        [&](const Vector& v) -> Vector {
            const Vector pv = rop.apply_perturbed(v);
            return rop.apply_perturbed_transpose(pv);
        },
        n, iters, tol);
    est.value = rop.base().decay_ratio() * std::sqrt(est.value);
    return est;
}

}  // namespace ngc
