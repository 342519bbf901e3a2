// Acceptance checks. One PASS/FAIL/SKIP line per criterion; tolerances are fixed here.
//
// Usage: ngc_acceptance [id ...]   (no ids runs all)
// Exit status: 0 all selected criteria passed, 1 any failed, 77 all selected skipped.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ngc/experiment/runner.hpp"

using namespace ngc;
using namespace ngc::experiment;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
    Status status;
    std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

std::string num(double v) { return format_number(v); }

Matrix gaussian_matrix(Index rows, Index cols, Engine& eng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(eng);
    return m;
}

Graph random_er(Engine& eng, Index max_n) {
    std::uniform_int_distribution<Index> size(2, max_n);
    std::uniform_real_distribution<double> prob(0.01, 0.2);
    const Index n = size(eng);
    GeneratorParams gp;
    gp.p = prob(eng);
    return canonical_graph(GraphKind::erdos_renyi, n, gp, eng());
}

double metric_of(const RunOutcome& out, std::uint64_t seed, const std::string& filter, int order,
                 double level, const std::string& metric) {
    for (const auto& r : out.rows)
        if (r.seed == seed && r.filter == filter && r.order == order && r.noise_level == level && r.metric == metric)
            return r.value;
    throw Error("missing row " + filter + "/" + metric);
}

ExperimentConfig sbm_config(ExperimentKind kind) {
    ExperimentConfig cfg;
    cfg.experiment = kind;
    cfg.graph.kind = "sbm";
    cfg.graph.n = 1000;
    cfg.graph.blocks = 2;
    cfg.graph.expected_degree = 10;
    cfg.filter.kind = FilterKind::ngc;
    cfg.filter.lambda = 32;
    cfg.filter.order = 16;
    cfg.seeds = parse_seed_list("0..9");
    return cfg;
}

// 1. rw row sums equal 1 - r^(S+1).
Outcome row_sums() {
    const std::pair<double, int> settings[] = {{1.0, 2}, {32.0, 16}, {64.0, 64}};
    double worst = 0.0;
    for (std::uint64_t k = 0; k < 100; ++k) {
        Engine eng = make_engine(k, "acceptance-rowsum");
        const Graph g = random_er(eng, 500);
        const NormalizedAdjacency rw = normalize_adjacency(g, NormMode::rw);
        for (const auto& [lambda, order] : settings) {
            const NeumannOperator op(rw, lambda, order);
            const Vector sums = neumann_propagate(op, Matrix::Ones(g.num_nodes(), 1)).col(0);
            const double expected = 1.0 - std::pow(lambda / (lambda + 1.0), order + 1);
            worst = std::max(worst, (sums.array() - expected).abs().maxCoeff());
        }
    }
    return verdict(worst < 1e-10, "max deviation " + num(worst) + " (< 1e-10)");
}

// 2. Truncation error against a dense solve of (I + lambda (I - A)) F = X.
Outcome truncation() {
    const double lambda = 32.0;
    const double r = lambda / (lambda + 1.0);
    double worst_ratio = 0.0;
    bool ok = true;
    for (std::uint64_t k = 0; k < 20; ++k) {
        Engine eng = make_engine(k, "acceptance-trunc");
        const Graph g = random_er(eng, 200);
        const Index n = g.num_nodes();
        const Matrix x = gaussian_matrix(n, 4, eng);
        const NormalizedAdjacency sym = normalize_adjacency(g, NormMode::sym);
        const Matrix a = sym.to_dense();
        const Matrix system = (1.0 + lambda) * Matrix::Identity(n, n) - lambda * a;
        const Matrix exact = system.partialPivLu().solve(x);
        for (int s : {4, 16, 64}) {
            const double err = (neumann_propagate(NeumannOperator(sym, lambda, s), x) - exact).norm() / x.norm();
            const double bound = std::pow(r, s + 1);
            worst_ratio = std::max(worst_ratio, err / bound);
            if (err > bound) ok = false;
        }
    }
    return verdict(ok, "max error/bound " + num(worst_ratio) + " (<= 1)");
}

// 3. Connectivity factor of the four small case-study graphs.
Outcome case_study() {
    const double lambda = 64.0;
    const int order = 64;
    auto tau_of = [&](GraphKind kind, Index n) {
        const NeumannOperator op(normalize_adjacency(canonical_graph(kind, n), NormMode::rw), lambda, order);
        return connectivity_factor(op);
    };
    const ConnectivityReport iso = tau_of(GraphKind::isolated, 4);
    const ConnectivityReport star = tau_of(GraphKind::star, 4);
    const ConnectivityReport comp = tau_of(GraphKind::complete, 4);
    const ConnectivityReport ring = tau_of(GraphKind::ring, 8);

    // Complete graph: A = J/4 is idempotent, so A_S = (I + c J/4)/(lambda+1) with c = sum_{s=1..S} r^s.
    const double r = lambda / (lambda + 1.0);
    double c = 0.0;
    for (int s = 1; s <= order; ++s) c += std::pow(r, s);
    const double diag = (1.0 + c / 4.0) / (lambda + 1.0);
    const double off = (c / 4.0) / (lambda + 1.0);
    const double big_r = 1.0 - std::pow(r, order + 1);
    const double tau_complete = 4.0 * (diag * diag + 3.0 * off * off) / (big_r * big_r);

    bool ok = true;
    std::string detail;
    auto require = [&](bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail += "FAILED " + what + "; ";
        }
    };
    require(std::abs(iso.tau - 4.0) <= 1e-12, "tau(isolated-4) = 4");
    require(std::abs(comp.tau - 1.0018) <= 1e-3, "tau(complete-4) = 1.0018 +- 1e-3");
    require(std::abs(comp.tau - tau_complete) <= 1e-10, "tau(complete-4) matches closed form");
    require(star.tau > comp.tau, "tau(star-4) > tau(complete-4)");
    require(ring.tau >= 1.0 && ring.tau <= 8.0, "1 <= tau(ring-8) <= 8");
    require(iso.tau > star.tau, "tau(isolated-4) > tau(star-4)");
    require(iso.predictor > star.predictor && star.predictor > comp.predictor,
            "predictor isolated > star > complete");
    detail += "isolated=" + num(iso.tau) + " star=" + num(star.tau) + " complete=" + num(comp.tau) +
              " (closed form " + num(tau_complete) + ") ring8=" + num(ring.tau);
    return verdict(ok, detail);
}

// 4. Frobenius concentration bound on a ring, violation rate <= 1/d.
Outcome lemma1() {
    const Graph g = canonical_graph(GraphKind::ring, 512);
    const NeumannOperator op(normalize_adjacency(g, NormMode::rw), 32.0, 16);
    const Index d = 32;
    const double limit = 1.0 / static_cast<double>(d);
    bool ok = true;
    std::string detail;
    for (double sigma : {1.0, 0.5, 2.0}) {
        const Lemma1Report rep = lemma1_verify(op, sigma, d, 2000, 0);
        double mean = 0.0;
        for (double v : rep.observed) mean += v;
        mean /= static_cast<double>(rep.trials());
        if (rep.violation_rate > limit) ok = false;
        detail += "sigma=" + num(sigma) + " rate=" + num(rep.violation_rate) + " bound=" + num(rep.bound) +
                  " mean=" + num(mean) + " entrywise_rate=" + num(rep.entrywise_violation_rate) + "; ";
    }
    return verdict(ok, detail + "limit " + num(limit));
}

// 5. Closed-form inner maximizer against random feasible perturbations.
Outcome inner_max() {
    bool ok = true;
    double worst_value_err = 0.0;
    for (std::uint64_t k = 0; k < 20; ++k) {
        Engine eng = make_engine(k, "acceptance-innermax");
        std::uniform_int_distribution<Index> size(2, 10), width(1, 5);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const Index n = size(eng);
        const Matrix f = gaussian_matrix(n, width(eng), eng);
        const double eps = 0.1 + unit(eng);
        const Perturbation p = worst_case_delta(f, eps);
        const double best = inner_objective(p, f);
        const double oracle = eps * (f * f.transpose()).norm();
        worst_value_err = std::max(worst_value_err, std::abs(best - oracle));
        if (std::abs(best - oracle) > 1e-9) ok = false;
        const Matrix gram = f * f.transpose();
        for (int t = 0; t < 10000; ++t) {
            Matrix d = gaussian_matrix(n, n, eng);
            // Uniform radius in the ball keeps interior points in the sample.
            d *= eps * std::pow(unit(eng), 1.0 / static_cast<double>(n * n)) / d.norm();
            if ((d.cwiseProduct(gram)).sum() > best + 1e-12) ok = false;
        }
    }
    return verdict(ok, "max |h(delta*) - eps ||FF^T||_F| = " + num(worst_value_err) +
                           " (<= 1e-9); no random feasible point exceeded h(delta*)");
}

// 6. Robust filter reductions.
Outcome robust_reduction() {
    double worst_eps0 = 0.0, worst_masked = 0.0;
    for (std::uint64_t k = 0; k < 20; ++k) {
        Engine eng = make_engine(k, "acceptance-robust");
        const Graph g = random_er(eng, 200);
        const Matrix x = gaussian_matrix(g.num_nodes(), 5, eng);
        const NeumannOperator op(normalize_adjacency(g, NormMode::sym), 32.0, 16);
        const Matrix base = neumann_propagate(op, x);
        for (SimilarityMode sim : {SimilarityMode::dense, SimilarityMode::edge_masked}) {
            const RobustOperator rop(op, 0.0, sim, x);
            worst_eps0 = std::max(worst_eps0, (robust_propagate(rop, x) - base).cwiseAbs().maxCoeff());
        }
    }
    for (std::uint64_t k = 0; k < 20; ++k) {
        Engine eng = make_engine(k, "acceptance-complete");
        const Index n = 3 + static_cast<Index>(k);
        const Matrix x = gaussian_matrix(n, 4, eng);
        const NeumannOperator op(normalize_adjacency(canonical_graph(GraphKind::complete, n), NormMode::sym), 32.0, 16);
        const Matrix dense = robust_propagate(RobustOperator(op, 1.0, SimilarityMode::dense, x), x);
        const Matrix masked = robust_propagate(RobustOperator(op, 1.0, SimilarityMode::edge_masked, x), x);
        worst_masked = std::max(worst_masked, (dense - masked).cwiseAbs().maxCoeff());
    }
    return verdict(worst_eps0 <= 1e-12 && worst_masked <= 1e-10,
                   "eps=0 max diff " + num(worst_eps0) + " (<= 1e-12); complete masked vs dense " +
                       num(worst_masked) + " (<= 1e-10)");
}

// 7. Gradient, monotone descent and convergence to least squares.
Outcome descent() {
    double worst_grad = 0.0, worst_rise = 0.0, worst_final = 0.0;
    for (std::uint64_t k = 0; k < 10; ++k) {
        Engine eng = make_engine(k, "acceptance-descent");
        const Matrix z = gaussian_matrix(60, 6, eng);
        Matrix y = Matrix::Zero(60, 3);
        std::uniform_int_distribution<Index> cls(0, 2);
        for (Index i = 0; i < 60; ++i) y(i, cls(eng)) = 1.0;

        const Matrix w = gaussian_matrix(6, 3, eng);
        const Matrix g = mse_gradient(z, y, w);
        Matrix fd(6, 3);
        const double h = 1e-6;
        for (Index i = 0; i < w.size(); ++i) {
            Matrix wp = w, wm = w;
            wp.data()[i] += h;
            wm.data()[i] -= h;
            fd.data()[i] = (mse_loss(z, y, wp) - mse_loss(z, y, wm)) / (2.0 * h);
        }
        worst_grad = std::max(worst_grad, (g - fd).norm() / g.norm());

        TrainConfig cfg;
        cfg.steps = 500;
        const TrainResult res = train_gd(z, y, cfg);
        // Rises are measured relative to the starting loss; round-off near the optimum is ~1e-16 of it.
        for (std::size_t t = 1; t < res.loss.size(); ++t)
            worst_rise = std::max(worst_rise, (res.loss[t] - res.loss[t - 1]) / res.loss.front());
        // Oracle: minimum-norm least squares through an SVD.
        const Matrix w_star = Eigen::JacobiSVD<Matrix>(z, Eigen::ComputeThinU | Eigen::ComputeThinV).solve(y);
        worst_final = std::max(worst_final, std::abs(res.loss.back() - mse_loss(z, y, w_star)));
    }
    return verdict(worst_grad <= 1e-5 && worst_rise <= 1e-12 && worst_final <= 1e-8,
                   "gradient rel err " + num(worst_grad) + " (<= 1e-5); max relative loss rise " + num(worst_rise) +
                       " (<= 1e-12); final minus optimum " + num(worst_final) + " (<= 1e-8)");
}

// 8. Optimization gap shrinks as the graph grows.
Outcome gap_trend() {
    ExperimentConfig cfg = sbm_config(ExperimentKind::theorem1_trend);
    cfg.graph.sizes = {200, 800, 2000};
    cfg.data.dim = 50;
    cfg.filter.mode = NormMode::rw;
    cfg.noise.sigma = 1.0;
    cfg.noise.level = 1.0;
    cfg.train.steps = 500;
    cfg.train.step_size = 0.0;
    const RunOutcome out = execute(cfg);
    std::string gaps;
    for (std::uint64_t seed : cfg.seeds) {
        gaps += "seed " + std::to_string(seed) + ":";
        for (const auto& r : out.rows)
            if (r.seed == seed && r.metric == "gap") gaps += " " + num(r.value);
        gaps += "; ";
    }
    const CheckResult& c = out.checks.at(0);
    return verdict(c.passed, c.detail + "; " + gaps);
}

// 9. Aggregation beats no aggregation under heavy Gaussian noise.
Outcome denoising() {
    ExperimentConfig cfg = sbm_config(ExperimentKind::noise_sweep);
    cfg.noise.levels = {2.0};
    const RunOutcome out = execute(cfg);
    int wins = 0;
    double gain = 0.0;
    for (std::uint64_t seed : cfg.seeds) {
        const double a = metric_of(out, seed, "ngc", 16, 2.0, "test_accuracy");
        const double b = metric_of(out, seed, "identity", 16, 2.0, "test_accuracy");
        if (a > b) ++wins;
        gain += a - b;
    }
    gain /= static_cast<double>(cfg.seeds.size());
    // Margin frozen from a pilot run, see tests/acceptance/PILOT.md.
    const double min_gain = 0.10;
    return verdict(wins >= 9 && gain >= min_gain, std::to_string(wins) + "/10 seeds won (>= 9); mean gain " +
                                                     num(gain) + " (>= " + num(min_gain) + ")");
}

// 10. Deep propagation is at least as accurate as one step.
Outcome depth() {
    ExperimentConfig cfg = sbm_config(ExperimentKind::depth_sweep);
    cfg.noise.level = 2.0;
    cfg.filter.orders = {1, 16};
    const RunOutcome out = execute(cfg);
    int holds = 0;
    for (std::uint64_t seed : cfg.seeds)
        if (metric_of(out, seed, "ngc", 16, 2.0, "test_accuracy") >= metric_of(out, seed, "ngc", 1, 2.0, "test_accuracy"))
            ++holds;
    return verdict(holds >= 8, std::to_string(holds) + "/10 seeds with S=16 >= S=1 (>= 8)");
}

// 11. Aggregation beats no aggregation under bit flips.
Outcome flips() {
    ExperimentConfig cfg = sbm_config(ExperimentKind::flip_sweep);
    cfg.noise.flip_probs = {0.4};
    const RunOutcome out = execute(cfg);
    int wins = 0;
    for (std::uint64_t seed : cfg.seeds)
        if (metric_of(out, seed, "ngc", 16, 0.4, "test_accuracy") > metric_of(out, seed, "identity", 16, 0.4, "test_accuracy"))
            ++wins;
    return verdict(wins >= 9, std::to_string(wins) + "/10 seeds won (>= 9)");
}

// 12. Citation-graph accuracy under 10% flips; needs a user-supplied export.
Outcome cora() {
    const char* dir = std::getenv("NGC_CORA_DIR");
    if (dir == nullptr || *dir == '\0') {
        return {Status::skip, "set NGC_CORA_DIR to a directory with edges.txt, features.csv, labels.csv, split.csv"};
    }
    namespace fs = std::filesystem;
    const fs::path base(dir);
    for (const char* f : {"edges.txt", "features.csv", "labels.csv", "split.csv"}) {
        if (!fs::exists(base / f)) return {Status::skip, (base / f).string() + " not found"};
    }
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::flip_sweep;
    cfg.graph.kind = "file";
    cfg.graph.edges = (base / "edges.txt").string();
    cfg.graph.features = (base / "features.csv").string();
    cfg.graph.labels = (base / "labels.csv").string();
    cfg.graph.split = (base / "split.csv").string();
    cfg.filter.lambda = 64;
    cfg.filter.order = 32;
    cfg.filter.baseline = false;
    cfg.noise.flip_probs = {0.1};
    cfg.seeds = parse_seed_list("0..9");
    const RunOutcome out = execute(cfg);
    double acc = 0.0;
    for (std::uint64_t seed : cfg.seeds) acc += metric_of(out, seed, "ngc", 32, 0.1, "test_accuracy");
    acc = 100.0 * acc / static_cast<double>(cfg.seeds.size());
    return verdict(std::abs(acc - 77.5) <= 2.5, "mean test accuracy " + num(acc) + " (77.5 +- 2.5)");
}

}  // namespace

int main(int argc, char** argv) {
    const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria = {
        {1, {"row_sum_identity", row_sums}},
        {2, {"truncation_oracle", truncation}},
        {3, {"connectivity_case_study", case_study}},
        {4, {"noise_concentration", lemma1}},
        {5, {"inner_max_optimality", inner_max}},
        {6, {"robust_reduction", robust_reduction}},
        {7, {"gradient_descent", descent}},
        {8, {"gap_trend_in_n", gap_trend}},
        {9, {"gaussian_denoising", denoising}},
        {10, {"depth_sweep", depth}},
        {11, {"flip_denoising", flips}},
        {12, {"citation_flip_accuracy", cora}},
    };
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        const int id = std::atoi(argv[i]);
        if (criteria.count(id) == 0) {
            std::cerr << "unknown criterion '" << argv[i] << "'\n";
            return 2;
        }
        selected.push_back(id);
    }
    if (selected.empty())
        for (const auto& [id, c] : criteria) selected.push_back(id);

    int failed = 0, skipped = 0;
    for (int id : selected) {
        const auto& [name, fn] = criteria.at(id);
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {Status::fail, std::string("error: ") + e.what()};
        }
        const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
        std::cout << tag << " criterion " << id << " " << name << ": " << o.detail << std::endl;
        if (o.status == Status::fail) ++failed;
        if (o.status == Status::skip) ++skipped;
    }
    if (failed > 0) return 1;
    if (skipped == static_cast<int>(selected.size())) return 77;
    return 0;
}
