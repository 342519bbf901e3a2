#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "ngc/error.hpp"
#include "ngc/linalg.hpp"

namespace ngc {

/// Row selector; mask[i] includes row i.
using Mask = std::vector<bool>;

inline Mask full_mask(Index n) { return Mask(static_cast<std::size_t>(n), true); }

inline Index mask_count(const Mask& m) {
    Index c = 0;
    for (bool b : m) c += b ? 1 : 0;
    return c;
}

/// Rows of `m` selected by `mask`, in index order.
inline Matrix select_rows(const Matrix& m, const Mask& mask) {
    if (static_cast<Index>(mask.size()) != m.rows()) {
        throw DimensionError("mask length " + std::to_string(mask.size()) + " does not match " +
                             std::to_string(m.rows()) + " rows");
    }
    Matrix out(mask_count(mask), m.cols());
    Index k = 0;
    for (Index i = 0; i < m.rows(); ++i)
        if (mask[static_cast<std::size_t>(i)]) out.row(k++) = m.row(i);
    return out;
}

/// One-hot n x c matrix from class indices.
inline Matrix one_hot(const std::vector<Index>& labels, Index classes) {
    Matrix y = Matrix::Zero(static_cast<Index>(labels.size()), classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes) throw Error("label out of range for one_hot");
        y(static_cast<Index>(i), labels[i]) = 1.0;
    }
    return y;
}

/// Linear read-out H = Z W with no bias.
struct LinearModel {
    Matrix weights;  // d x c

    Index input_dim() const noexcept { return weights.rows(); }
    Index classes() const noexcept { return weights.cols(); }
};

struct TrainConfig {
    double step_size = 0.0;   ///< alpha; 0 selects 1/L
    int steps = 500;          ///< k
    double smoothness = 0.0;  ///< L; 0 means estimate from the data
    Mask train_mask;          ///< empty means every row
    /// L2 coefficient on ||W||_F^2. Not part of the MSE objective the theory
    /// analyses; kept for parity with weight-decayed training runs.
    double weight_decay = 0.0;
    /// Reject step sizes above 1/L. When off, divergence is detected instead.
    bool enforce_step_rule = true;
};

struct TrainResult {
    LinearModel model;
    std::vector<double> loss;         ///< f(W^(t)) for t = 0..k (shorter if diverged)
    std::vector<double> weight_norm;  ///< ||W^(t)||_F for t = 0..k
    double step_size = 0.0;
    double smoothness = 0.0;
    bool diverged = false;
};

/// f(W) = ||Z W - Y||_F^2 (+ weight_decay * ||W||_F^2).
inline double mse_loss(const Matrix& z, const Matrix& y, const Matrix& w, double weight_decay = 0.0) {
    return (z * w - y).squaredNorm() + weight_decay * w.squaredNorm();
}

/// Gradient 2 Z^T (Z W - Y) (+ 2 weight_decay W).
inline Matrix mse_gradient(const Matrix& z, const Matrix& y, const Matrix& w,
                           double weight_decay = 0.0) {
    Matrix g = 2.0 * z.transpose() * (z * w - y);
    if (weight_decay != 0.0) g += 2.0 * weight_decay * w;
    return g;
}

/// L = 2 sigma_max(Z)^2, the Lipschitz constant of the MSE gradient.
inline double estimate_smoothness_constant(const Matrix& z) {
    if (z.size() == 0 || z.isZero(0.0)) throw Error("estimate_smoothness_constant: zero matrix");
    const SpectralEstimate s = largest_singular_value(z, 1e-6);
    return 2.0 * s.value * s.value;
}

/// Fixed-step gradient descent on the masked MSE loss from W^(0) = 0.
inline TrainResult train_gd(const Matrix& z, const Matrix& y, const TrainConfig& cfg) {
    if (z.rows() != y.rows()) {
        throw DimensionError("train_gd: Z has " + std::to_string(z.rows()) + " rows, Y has " +
                             std::to_string(y.rows()));
    }
    if (cfg.steps < 0) throw Error("train_gd: steps must be >= 0");
    const Mask mask = cfg.train_mask.empty() ? full_mask(z.rows()) : cfg.train_mask;
    const Matrix zm = select_rows(z, mask);
    const Matrix ym = select_rows(y, mask);
    if (zm.rows() == 0) throw Error("train_gd: empty training mask");

    TrainResult res;
    res.smoothness = cfg.smoothness > 0.0 ? cfg.smoothness
                                          : estimate_smoothness_constant(zm) + 2.0 * cfg.weight_decay;
    res.step_size = cfg.step_size > 0.0 ? cfg.step_size : 1.0 / res.smoothness;
    if (cfg.enforce_step_rule && res.step_size * res.smoothness > 1.0 + 1e-12) {
        throw Error("train_gd: step size exceeds 1/L (alpha*L = " +
                    std::to_string(res.step_size * res.smoothness) + ")");
    }

    Matrix w = Matrix::Zero(zm.cols(), ym.cols());
    // Z^T Z and Z^T Y are fixed, so each gradient costs O(d^2 c).
    const Matrix gram = zm.transpose() * zm;
    const Matrix zty = zm.transpose() * ym;
    auto loss_of = [&](const Matrix& wc) { return mse_loss(zm, ym, wc, cfg.weight_decay); };

    res.loss.reserve(static_cast<std::size_t>(cfg.steps) + 1);
    res.weight_norm.reserve(static_cast<std::size_t>(cfg.steps) + 1);
    res.loss.push_back(loss_of(w));
    res.weight_norm.push_back(0.0);
    const double initial = res.loss.front();
    for (int t = 0; t < cfg.steps; ++t) {
        Matrix grad = 2.0 * (gram * w - zty);
        if (cfg.weight_decay != 0.0) grad += 2.0 * cfg.weight_decay * w;
        w -= res.step_size * grad;
        const double l = loss_of(w);
        res.loss.push_back(l);
        res.weight_norm.push_back(w.norm());
        if (!std::isfinite(l) || l > 1e12 * (initial + 1.0)) {
            res.diverged = true;
            break;
        }
    }
    res.model.weights = std::move(w);
    return res;
}

/// Per-step trace as CSV: step,loss,weight_norm.
inline void write_trace_csv(std::ostream& os, const TrainResult& res) {
    os << "step,loss,weight_norm\n";
    const auto old = os.precision(17);
    for (std::size_t t = 0; t < res.loss.size(); ++t)
        os << t << ',' << res.loss[t] << ',' << res.weight_norm[t] << '\n';
    os.precision(old);
}

/// Minimizer of the masked MSE: (Z^T Z + 1e-10 I) W = Z^T Y.
inline LinearModel least_squares_optimum(const Matrix& z, const Matrix& y, const Mask& mask = {}) {
    const Mask m = mask.empty() ? full_mask(z.rows()) : mask;
    const Matrix zm = select_rows(z, m);
    const Matrix ym = select_rows(y, m);
    if (zm.rows() == 0) throw Error("least_squares_optimum: empty mask");
    Matrix normal = zm.transpose() * zm;
    normal.diagonal().array() += 1e-10;
    Eigen::LDLT<Matrix> ldlt(normal);
    LinearModel model;
    model.weights = ldlt.solve(zm.transpose() * ym);
    return model;
}

/// Predicted class per row: argmax of Z W, ties to the lowest index.
inline std::vector<Index> predict(const LinearModel& model, const Matrix& z) {
    const Matrix scores = z * model.weights;
    std::vector<Index> out(static_cast<std::size_t>(scores.rows()), 0);
    for (Index i = 0; i < scores.rows(); ++i) {
        Index best = 0;
        for (Index c = 1; c < scores.cols(); ++c)
            if (scores(i, c) > scores(i, best)) best = c;
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

/// Fraction of masked rows whose predicted class equals the label.
inline double evaluate_accuracy(const LinearModel& model, const Matrix& z,
                                const std::vector<Index>& labels, const Mask& mask) {
    if (static_cast<Index>(labels.size()) != z.rows() || static_cast<Index>(mask.size()) != z.rows()) {
        throw DimensionError("evaluate_accuracy: labels/mask length must equal row count");
    }
    const Index total = mask_count(mask);
    if (total == 0) throw Error("evaluate_accuracy: empty mask");
    const auto pred = predict(model, z);
    Index correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (mask[i] && pred[i] == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace ngc
