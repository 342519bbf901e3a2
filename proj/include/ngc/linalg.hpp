#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace ngc {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;

/// Dense node-feature matrix; row i holds the feature vector of node i.
using FeatureMatrix = Eigen::MatrixXd;

/// Result of a power iteration.
struct SpectralEstimate {
    double value = 0.0;     ///< dominant eigenvalue magnitude
    double residual = 0.0;  ///< ||Av - (v.Av) v|| at the last iterate (v unit)
    int iterations = 0;
    bool converged = false;
};

/// Power iteration for the dominant eigenvalue magnitude of a linear map.
///
/// `apply(v)` must return A*v. Starts from the normalized all-ones vector and
/// performs no deflation. Stops once the residual drops below tol*value or the
/// budget is spent; non-convergence is reported through `converged`.
template <typename Apply>
SpectralEstimate power_iteration(Apply&& apply, Index n, int iters, double tol) {
    SpectralEstimate est;
    Vector v = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
    for (int it = 1; it <= iters; ++it) {
        Vector w = apply(v);
        const double norm = w.norm();
        est.iterations = it;
        est.value = norm;
        if (norm == 0.0) {
            est.residual = 0.0;
            est.converged = true;
            return est;
        }
        est.residual = (w - v.dot(w) * v).norm();
        if (est.residual <= tol * norm) {
            est.converged = true;
            return est;
        }
        v = w / norm;
    }
    return est;
}

/// Largest singular value of a dense matrix, via power iteration on Z^T Z.
///
/// The Rayleigh quotient of the Gram matrix is accepted once the eigen-residual
/// falls below rel_tol times the quotient, which pins the eigenvalue (and so
/// sigma_max squared) to that relative accuracy.
inline SpectralEstimate largest_singular_value(const Matrix& z, double rel_tol = 1e-6,
                                               int iters = 100000) {
    const Matrix gram = z.transpose() * z;
    Vector v = Vector::Ones(gram.rows()) / std::sqrt(static_cast<double>(gram.rows()));
    SpectralEstimate est;
    for (int it = 1; it <= iters; ++it) {
        Vector w = gram * v;
        const double norm = w.norm();
        est.iterations = it;
        if (norm == 0.0) {
            est.value = 0.0;
            est.converged = true;
            return est;
        }
        const double rayleigh = v.dot(w);
        est.residual = (w - rayleigh * v).norm();
        est.value = std::sqrt(std::max(rayleigh, 0.0));
        if (est.residual <= rel_tol * rayleigh) {
            est.converged = true;
            return est;
        }
        v = w / norm;
    }
    return est;
}

/// Frobenius inner product <a, b>.
inline double frobenius_inner(const Matrix& a, const Matrix& b) {
    return a.cwiseProduct(b).sum();
}

}  // namespace ngc
