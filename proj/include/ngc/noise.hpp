#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ngc/error.hpp"
#include "ngc/graph.hpp"
#include "ngc/linalg.hpp"
#include "ngc/neumann.hpp"
#include "ngc/rng.hpp"
#include "ngc/trainer.hpp"

namespace ngc {

enum class NoiseKind { gaussian, flip };

inline std::string_view to_string(NoiseKind k) { return k == NoiseKind::gaussian ? "gaussian" : "flip"; }

inline NoiseKind parse_noise_kind(std::string_view s) {
    if (s == "gaussian") return NoiseKind::gaussian;
    if (s == "flip") return NoiseKind::flip;
    throw ParseError("unknown noise kind '" + std::string(s) + "' (expected gaussian|flip)");
}

/// Noise distribution. Only the fields of `kind` are read; the mean is fixed at 0.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    double sigma = 1.0;      // gaussian
    double level = 1.0;      // gaussian scale xi
    double flip_prob = 0.0;  // flip
    std::uint64_t seed = 0;
};

/// Clean features, the noise drawn for them, and the observed matrix, plus
/// labels and the train/val/test split.
struct NoisyDataset {
    FeatureMatrix clean;
    FeatureMatrix noise;     // eta (gaussian); observed - clean for flips
    FeatureMatrix observed;  // before any row normalization
    std::vector<Index> labels;
    Index classes = 0;
    Mask train, val, test;

    Index num_nodes() const noexcept { return clean.rows(); }
    Matrix one_hot_labels() const { return one_hot(labels, classes); }
};

struct GaussianDraw {
    FeatureMatrix noise;     // eta ~ N(0, sigma^2) i.i.d.
    FeatureMatrix observed;  // clean + level * eta
};

/// observed = clean + level * eta, eta i.i.d. N(0, sigma^2); deterministic per seed.
inline GaussianDraw inject_gaussian(const FeatureMatrix& clean, double sigma, double level,
                                    std::uint64_t seed) {
    if (!(level >= 0.0)) throw Error("inject_gaussian: noise level must be >= 0");
    if (!(sigma > 0.0)) throw Error("inject_gaussian: sigma must be > 0");
    GaussianDraw out;
    out.noise.resize(clean.rows(), clean.cols());
    Engine eng = make_engine(seed, "noise");
    std::normal_distribution<double> normal(0.0, sigma);
    for (Index i = 0; i < clean.rows(); ++i)
        for (Index j = 0; j < clean.cols(); ++j) out.noise(i, j) = normal(eng);
    out.observed = clean + level * out.noise;
    return out;
}

inline bool is_binary(const FeatureMatrix& x) {
    return (x.array() == 0.0 || x.array() == 1.0).all();
}

/// Flip each 0/1 entry independently with probability p.
inline FeatureMatrix flip_features(const FeatureMatrix& clean, double p, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error("flip_features: probability must lie in [0,1]");
    if (!is_binary(clean)) throw Error("flip_features: input features are not binary");
    FeatureMatrix out = clean;
    Engine eng = make_engine(seed, "flip");
    std::bernoulli_distribution coin(p);
    for (Index i = 0; i < out.rows(); ++i)
        for (Index j = 0; j < out.cols(); ++j)
            if (coin(eng)) out(i, j) = 1.0 - out(i, j);
    return out;
}

/// Divide each row by its L1 norm; all-zero rows stay zero.
inline FeatureMatrix row_normalize(const FeatureMatrix& x) {
    FeatureMatrix out = x;
    for (Index i = 0; i < out.rows(); ++i) {
        const double l1 = out.row(i).cwiseAbs().sum();
        if (l1 > 0.0) out.row(i) /= l1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Concentration bound on the aggregated noise
// ---------------------------------------------------------------------------

/// 2 tau (1 - r^(S+1))^2 sigma^2 (4 ln n + ln 2d) / n.
inline double lemma1_bound(Index n, Index d, double tau, double lambda, int order, double sigma) {
    if (n < 1 || d < 1) throw Error("lemma1_bound: n and d must be positive");
    const double r = lambda / (lambda + 1.0);
    const double big_r = 1.0 - std::pow(r, order + 1);
    const double nn = static_cast<double>(n);
    return 2.0 * tau * big_r * big_r * sigma * sigma *
           (4.0 * std::log(nn) + std::log(2.0 * static_cast<double>(d))) / nn;
}

struct Lemma1Report {
    Index n = 0;
    Index d = 0;
    double lambda = 0.0;
    int order = 0;
    double sigma = 0.0;
    double tau = 0.0;
    double bound = 0.0;
    std::vector<double> observed;       ///< ||A_S eta||_F^2 per trial
    double violation_rate = 0.0;        ///< fraction of trials with observed > bound
    std::vector<double> max_entry_sq;   ///< max_ij [A_S eta]_ij^2 per trial
    double entrywise_violation_rate = 0.0;
    std::uint64_t seed = 0;

    Index trials() const noexcept { return static_cast<Index>(observed.size()); }
};

/// Monte Carlo check of the aggregated-noise bound with the exact tau of `op`.
///
/// Each trial draws a fresh n x d noise matrix from its own stream derived
/// from (seed, trial). Besides the Frobenius comparison, the report carries
/// the largest squared entry per trial against the same threshold.
inline Lemma1Report lemma1_verify(const NeumannOperator& op, double sigma, Index d, Index trials,
                                  std::uint64_t seed, Index row_cap = kDefaultMaterializeCap) {
    if (trials < 1) throw Error("lemma1_verify: trials must be >= 1");
    if (d < 1) throw Error("lemma1_verify: d must be >= 1");
    if (!(sigma >= 0.0)) throw Error("lemma1_verify: sigma must be >= 0");
    const Index n = op.size();
    if (n > row_cap) {
        throw CapacityError("lemma1_verify needs the exact tau; n=" + std::to_string(n) +
                            " exceeds the materialization cap");
    }
    Lemma1Report rep;
    rep.n = n;
    rep.d = d;
    rep.lambda = op.lambda();
    rep.order = op.order();
    rep.sigma = sigma;
    rep.seed = seed;
    rep.tau = connectivity_factor(op, row_cap).tau;
    rep.bound = lemma1_bound(n, d, rep.tau, op.lambda(), op.order(), sigma);

    Index violations = 0;
    Index entry_violations = 0;
    FeatureMatrix eta(n, d);
    for (Index t = 0; t < trials; ++t) {
        if (sigma == 0.0) {
            eta.setZero();
        } else {
            Engine eng = make_engine(seed, "lemma1-noise", static_cast<std::uint64_t>(t));
            std::normal_distribution<double> normal(0.0, sigma);
            for (Index i = 0; i < n; ++i)
                for (Index j = 0; j < d; ++j) eta(i, j) = normal(eng);
        }
        const FeatureMatrix agg = neumann_propagate(op, eta);
        const double fro = agg.squaredNorm();
        const double entry = agg.cwiseAbs2().maxCoeff();
        rep.observed.push_back(fro);
        rep.max_entry_sq.push_back(entry);
        if (fro > rep.bound) ++violations;
        if (entry > rep.bound) ++entry_violations;
    }
    rep.violation_rate = static_cast<double>(violations) / static_cast<double>(trials);
    rep.entrywise_violation_rate = static_cast<double>(entry_violations) / static_cast<double>(trials);
    return rep;
}

/// Same check on the rw-normalized graph, where tau is certified.
inline Lemma1Report lemma1_verify(const Graph& g, double lambda, int order, double sigma, Index d,
                                  Index trials, std::uint64_t seed) {
    return lemma1_verify(NeumannOperator(normalize_adjacency(g, NormMode::rw), lambda, order), sigma,
                         d, trials, seed);
}

/// One CSV row per trial.
inline void write_csv(std::ostream& os, const Lemma1Report& rep) {
    os << "trial,n,d,lambda,order,sigma,tau,bound,observed,violated,max_entry_sq,entry_violated\n";
    const auto old = os.precision(17);
    for (std::size_t t = 0; t < rep.observed.size(); ++t) {
        os << t << ',' << rep.n << ',' << rep.d << ',' << rep.lambda << ',' << rep.order << ','
           << rep.sigma << ',' << rep.tau << ',' << rep.bound << ',' << rep.observed[t] << ','
           << (rep.observed[t] > rep.bound ? 1 : 0) << ',' << rep.max_entry_sq[t] << ','
           << (rep.max_entry_sq[t] > rep.bound ? 1 : 0) << '\n';
    }
    os.precision(old);
}

// ---------------------------------------------------------------------------
// Optimization gap between noisy training and the clean optimum
// ---------------------------------------------------------------------------

struct Theorem1Report {
    Index n = 0;
    double gap = 0.0;        ///< g(W_f^(k)) - g(W_g*)
    double g_trained = 0.0;  ///< g(W_f^(k))
    double g_optimal = 0.0;  ///< g(W_g*)
    double tau = 0.0;
    bool tau_exact = true;
    double predictor = 0.0;  ///< tau ln(n) / n
    int steps = 0;           ///< k
    double step_size = 0.0;  ///< alpha
    double smoothness = 0.0; ///< L of the noisy loss
    double weight_norm = 0.0;///< ||W_f^(k)||_F
    std::vector<double> loss_trace;
};

/// Train W_f by k gradient steps on the noisy loss ||A_S X W - Y||^2 and
/// compare g(W) = ||A_S X* W - Y||^2 against its least-squares minimizer.
/// All n rows enter both losses. alpha = 0 selects 1/L.
inline Theorem1Report theorem1_gap(const NeumannOperator& op, const NoisyDataset& data, double alpha,
                                   int steps, Index tau_row_cap = kDefaultMaterializeCap) {
    detail::require_rows(op.size(), data.observed, "theorem1_gap");
    detail::require_rows(op.size(), data.clean, "theorem1_gap");
    const Matrix y = data.one_hot_labels();
    const Matrix z_noisy = neumann_propagate(op, data.observed);
    const Matrix z_clean = neumann_propagate(op, data.clean);

    TrainConfig cfg;
    cfg.smoothness = estimate_smoothness_constant(z_noisy);
    cfg.step_size = alpha > 0.0 ? alpha : 1.0 / cfg.smoothness;
    cfg.steps = steps;
    if (cfg.step_size * cfg.smoothness > 1.0 + 1e-12) {
        throw Error("theorem1_gap: alpha exceeds 1/L");
    }
    const TrainResult trained = train_gd(z_noisy, y, cfg);
    const LinearModel optimum = least_squares_optimum(z_clean, y);

    Theorem1Report rep;
    rep.n = op.size();
    rep.g_trained = mse_loss(z_clean, y, trained.model.weights);
    rep.g_optimal = mse_loss(z_clean, y, optimum.weights);
    rep.gap = rep.g_trained - rep.g_optimal;
    const ConnectivityReport conn = connectivity_factor(op, tau_row_cap, std::min<Index>(256, rep.n));
    rep.tau = conn.tau;
    rep.tau_exact = conn.exact;
    rep.predictor = conn.predictor;
    rep.steps = steps;
    rep.step_size = trained.step_size;
    rep.smoothness = trained.smoothness;
    rep.weight_norm = trained.model.weights.norm();
    rep.loss_trace = trained.loss;
    return rep;
}

}  // namespace ngc
