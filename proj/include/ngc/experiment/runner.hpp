#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ngc/error.hpp"
#include "ngc/experiment/config.hpp"
#include "ngc/experiment/graph_spec.hpp"
#include "ngc/experiment/io.hpp"
#include "ngc/experiment/synthetic.hpp"
#include "ngc/graph.hpp"
#include "ngc/neumann.hpp"
#include "ngc/noise.hpp"
#include "ngc/rng.hpp"
#include "ngc/robust.hpp"
#include "ngc/trainer.hpp"

namespace ngc::experiment {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Tidy result rows
// ---------------------------------------------------------------------------

/// One metric value with every parameter that produced it.
struct ResultRow {
    std::string experiment;
    std::uint64_t seed = 0;
    std::string graph;
    Index n = 0;
    std::string filter;
    std::string mode;
    double lambda = 0.0;
    int order = 0;
    double epsilon = 0.0;
    std::string noise;
    double noise_level = 0.0;
    bool row_normalize = false;
    std::string metric;
    double value = 0.0;
};

inline constexpr const char* kResultHeader =
    "experiment,seed,graph,n,filter,mode,lambda,order,epsilon,noise,noise_level,row_normalize,metric,value";

inline void write_row(std::ostream& os, const ResultRow& r) {
    using detail::format_value;
    os << r.experiment << ',' << r.seed << ',' << csv_field(r.graph) << ',' << r.n << ',' << r.filter << ','
       << r.mode << ',' << format_value(r.lambda) << ',' << r.order << ',' << format_value(r.epsilon)
       << ',' << r.noise << ',' << format_value(r.noise_level) << ',' << (r.row_normalize ? 1 : 0)
       << ',' << r.metric << ',' << format_value(r.value) << '\n';
}

inline void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    os << kResultHeader << '\n';
    for (const auto& r : rows) write_row(os, r);
}

// ---------------------------------------------------------------------------
// Pipeline pieces shared by the sweeps
// ---------------------------------------------------------------------------

struct FilterSpec {
    FilterKind kind = FilterKind::ngc;
    double lambda = kDefaultLambda;
    int order = kDefaultOrder;
    double epsilon = kDefaultEpsilon;
    NormMode mode = NormMode::sym;
    SimilarityMode similarity = SimilarityMode::dense;
};

inline FilterSpec filter_spec(const ExperimentConfig& cfg) {
    return {cfg.filter.kind, cfg.filter.lambda, cfg.filter.order, cfg.filter.epsilon, cfg.filter.mode,
            cfg.filter.similarity};
}

/// Aggregated features for `x`. rngc builds its similarity term from `x` itself.
/// When `on_depth` is set it receives every partial sum up to the order.
inline FeatureMatrix apply_filter(const Graph& g, const FilterSpec& f, const FeatureMatrix& x,
                                  const DepthCallback& on_depth = {}) {
    if (f.kind == FilterKind::identity) {
        if (on_depth)
            for (int s = 0; s <= f.order; ++s) on_depth(s, x);
        return x;
    }
    NeumannOperator op(normalize_adjacency(g, f.mode), f.lambda, f.order);
    if (f.kind == FilterKind::ngc) return neumann_propagate(op, x, on_depth);
    RobustOperator rop(std::move(op), f.epsilon, f.similarity, x);
    return robust_propagate(rop, x, on_depth);
}

/// Observed features: clean plus Gaussian noise (scaled by `level`) or flips
/// with probability `level`, then optional L1 row normalization.
inline FeatureMatrix corrupt(const FeatureMatrix& clean, NoiseKind kind, double sigma, double level,
                             bool normalize, std::uint64_t seed) {
    FeatureMatrix x = kind == NoiseKind::gaussian ? inject_gaussian(clean, sigma, level, seed).observed
                                                  : flip_features(clean, level, seed);
    return normalize ? row_normalize(x) : x;
}

struct ClassifyResult {
    double val_accuracy = 0.0;  ///< NaN when the split has no val rows
    double test_accuracy = 0.0;
    double final_loss = 0.0;
    double weight_norm = 0.0;
    bool diverged = false;
};

inline ClassifyResult classify(const FeatureMatrix& z, const NoisyDataset& data, const TrainSection& t) {
    TrainConfig cfg;
    cfg.step_size = t.step_size;
    cfg.steps = t.steps;
    cfg.weight_decay = t.weight_decay;
    cfg.train_mask = data.train;
    const TrainResult res = train_gd(z, data.one_hot_labels(), cfg);
    ClassifyResult out;
    out.val_accuracy = mask_count(data.val) > 0 ? evaluate_accuracy(res.model, z, data.labels, data.val)
                                                : std::numeric_limits<double>::quiet_NaN();
    out.test_accuracy = evaluate_accuracy(res.model, z, data.labels, data.test);
    out.final_loss = res.loss.back();
    out.weight_norm = res.model.weights.norm();
    out.diverged = res.diverged;
    return out;
}

inline SyntheticSpec synthetic_spec(const ExperimentConfig& cfg, Index n, bool binary) {
    SyntheticSpec s;
    s.n = n;
    s.classes = cfg.graph.blocks;
    s.expected_degree = cfg.graph.expected_degree;
    s.homophily = cfg.graph.homophily;
    s.p_in = cfg.graph.p_in;
    s.p_out = cfg.graph.p_out;
    s.dim = cfg.data.dim;
    s.feature_sigma = cfg.data.feature_sigma;
    s.binary = binary;
    s.binary_high = cfg.data.binary_high;
    s.binary_low = cfg.data.binary_low;
    s.train_per_class = cfg.data.train_per_class;
    s.val = cfg.data.val;
    s.test = cfg.data.test;
    return s;
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct RunOutcome {
    std::vector<ResultRow> rows;
    std::vector<CheckResult> checks;
    /// Extra CSV files (name -> contents) written next to results.csv.
    std::map<std::string, std::string> extra_files;

    bool all_checks_passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
    }
};

namespace detail {

inline std::string fmt(double v) { return format_value(v); }

class Runner {
public:
    explicit Runner(const ExperimentConfig& cfg) : cfg_(cfg) {}

    RunOutcome run() {
        switch (cfg_.experiment) {
            case ExperimentKind::tau_report: tau_report(); break;
            case ExperimentKind::verify_neumann: verify_neumann(); break;
            case ExperimentKind::verify_lemma1: verify_lemma1(); break;
            case ExperimentKind::theorem1_trend: theorem1_trend(); break;
            case ExperimentKind::noise_sweep: sweep(Sweep::noise); break;
            case ExperimentKind::flip_sweep: sweep(Sweep::flip); break;
            case ExperimentKind::depth_sweep: depth_sweep(); break;
            case ExperimentKind::rownorm_ablation: rownorm_ablation(); break;
        }
        return std::move(out_);
    }

private:
    enum class Sweep { noise, flip };

    ResultRow base_row(std::uint64_t seed) const {
        ResultRow r;
        r.experiment = std::string(to_string(cfg_.experiment));
        r.seed = seed;
        r.graph = graph_label(cfg_.graph.n);
        r.n = cfg_.graph.n;
        r.filter = std::string(to_string(cfg_.filter.kind));
        r.mode = std::string(to_string(cfg_.filter.mode));
        r.lambda = cfg_.filter.lambda;
        r.order = cfg_.filter.order;
        r.epsilon = cfg_.filter.kind == FilterKind::rngc ? cfg_.filter.epsilon : 0.0;
        r.noise = std::string(to_string(cfg_.noise.kind));
        r.noise_level = cfg_.noise.kind == NoiseKind::gaussian ? cfg_.noise.level : cfg_.noise.flip_prob;
        r.row_normalize = cfg_.noise.row_normalize;
        return r;
    }

    void emit(ResultRow r, std::string metric, double value) {
        r.metric = std::move(metric);
        r.value = value;
        out_.rows.push_back(std::move(r));
    }

    void check(std::string name, bool passed, std::string detail) {
        out_.checks.push_back({std::move(name), passed, std::move(detail)});
    }

    std::string graph_label(Index n) const {
        if (cfg_.graph.kind == "file") return "file";
        return cfg_.graph.kind + ":" + std::to_string(n);
    }

    Graph generated_graph(Index n, std::uint64_t seed) const {
        GeneratorParams p;
        p.p = cfg_.graph.p;
        p.blocks = cfg_.graph.blocks;
        p.p_in = cfg_.graph.p_in;
        p.p_out = cfg_.graph.p_out;
        const GraphKind kind = parse_graph_kind(cfg_.graph.kind);
        if (kind == GraphKind::sbm) p = sbm_params(synthetic_spec(cfg_, n, false));
        return canonical_graph(kind, n, p, seed);
    }

    const LoadedDataset& loaded() {
        if (!loaded_) {
            loaded_ = load_dataset(cfg_.graph.edges, cfg_.graph.features, cfg_.graph.labels, cfg_.graph.split);
        }
        return *loaded_;
    }

    /// Graph plus labelled clean features for one seed.
    SyntheticProblem problem(std::uint64_t seed, bool binary) {
        if (cfg_.graph.kind == "file") {
            const LoadedDataset& d = loaded();
            if (binary && !d.binary) throw Error("flip noise needs binary features; the feature file is not 0/1");
            return {d.graph, d.data};
        }
        return make_synthetic(synthetic_spec(cfg_, cfg_.graph.n, binary), seed);
    }

    Graph plain_graph(std::uint64_t seed) {
        if (cfg_.graph.kind == "file") return loaded().graph;
        return generated_graph(cfg_.graph.n, seed);
    }

    // --- theory experiments -------------------------------------------------

    void tau_report() {
        bool ok = true;
        std::string why;
        for (std::uint64_t seed : cfg_.seeds) {
            for (const auto& text : cfg_.tau.graphs) {
                const GraphSpec spec = parse_graph_spec(text);
                const Graph g = canonical_graph(spec.kind, spec.n, spec.params, spec.has_seed ? spec.seed : seed);
                for (NormMode mode : {NormMode::rw, NormMode::sym}) {
                    NeumannOperator op(normalize_adjacency(g, mode), cfg_.filter.lambda, cfg_.filter.order);
                    const Index sample = std::min(cfg_.tau.sample_rows, g.num_nodes());
                    const ConnectivityReport rep = connectivity_factor(op, cfg_.tau.row_cap, sample, seed);
                    ResultRow r = base_row(seed);
                    r.graph = spec.text;
                    r.n = g.num_nodes();
                    r.filter = "ngc";
                    r.mode = std::string(to_string(mode));
                    r.epsilon = 0.0;
                    r.noise = "none";
                    r.noise_level = 0.0;
                    r.row_normalize = false;
                    const std::string suffix = mode == NormMode::rw ? "" : "_sym";
                    emit(r, "tau" + suffix, rep.tau);
                    emit(r, "predictor" + suffix, rep.predictor);
                    emit(r, "tau_over_n" + suffix, rep.tau / static_cast<double>(r.n));
                    emit(r, "tau_exact" + suffix, rep.exact ? 1.0 : 0.0);
                    if (mode == NormMode::rw && rep.exact) {
                        const double n = static_cast<double>(r.n);
                        if (rep.tau < 1.0 - 1e-9 || rep.tau > n + 1e-9) {
                            ok = false;
                            why += spec.text + " tau=" + fmt(rep.tau) + " outside [1,n]; ";
                        }
                    }
                }
            }
        }
        check("tau_in_range", ok, ok ? "every exact rw tau lies in [1, n]" : why);
    }

    void verify_neumann() {
        bool rows_ok = true, trunc_ok = true;
        double worst_dev = 0.0, worst_ratio = 0.0;
        for (std::uint64_t seed : cfg_.seeds) {
            for (Index k = 0; k < cfg_.verify.graphs; ++k) {
                Engine eng = make_engine(seed, "verify-graph", static_cast<std::uint64_t>(k));
                std::uniform_int_distribution<Index> size(2, cfg_.verify.max_n);
                std::uniform_real_distribution<double> prob(0.01, 0.2);
                const Index n = size(eng);
                GeneratorParams gp;
                gp.p = prob(eng);
                const Graph g = canonical_graph(GraphKind::erdos_renyi, n, gp, eng());
                Matrix x(n, 4);
                std::normal_distribution<double> normal(0.0, 1.0);
                for (Index i = 0; i < x.size(); ++i) x.data()[i] = normal(eng);
                const NormalizedAdjacency sym = normalize_adjacency(g, NormMode::sym);
                const NormalizedAdjacency rw = normalize_adjacency(g, NormMode::rw);
                const FeatureMatrix exact = exact_gsd_solve(sym, cfg_.filter.lambda, x, std::max<Index>(n, kDefaultSolveCap));
                for (int s : cfg_.verify.orders) {
                    ResultRow r = base_row(seed);
                    r.graph = "er:" + std::to_string(n) + ":p=" + fmt(gp.p);
                    r.n = n;
                    r.filter = "ngc";
                    r.order = s;
                    r.epsilon = 0.0;
                    r.noise = "none";
                    r.noise_level = 0.0;
                    r.row_normalize = false;
                    const NeumannOperator op_sym(sym, cfg_.filter.lambda, s);
                    const double err = (neumann_propagate(op_sym, x) - exact).norm() / x.norm();
                    const double bound = std::pow(op_sym.decay_ratio(), s + 1);
                    r.mode = "sym";
                    emit(r, "trunc_rel_error", err);
                    emit(r, "trunc_bound", bound);
                    const RowSumReport rs = row_sum_check(NeumannOperator(rw, cfg_.filter.lambda, s));
                    r.mode = "rw";
                    emit(r, "rowsum_max_dev", rs.max_deviation);
                    worst_dev = std::max(worst_dev, rs.max_deviation);
                    if (rs.max_deviation >= 1e-10) rows_ok = false;
                    if (bound > 0.0) worst_ratio = std::max(worst_ratio, err / bound);
                    if (err > bound * (1.0 + 1e-9) + 1e-14) trunc_ok = false;
                }
            }
        }
        check("row_sum_identity", rows_ok, "max row-sum deviation " + fmt(worst_dev) + " (< 1e-10)");
        check("truncation_bound", trunc_ok, "max error/bound ratio " + fmt(worst_ratio) + " (<= 1)");
    }

    void verify_lemma1() {
        bool ok = true;
        std::string detail_text;
        std::ostringstream trials;
        for (std::uint64_t seed : cfg_.seeds) {
            const Graph g = plain_graph(seed);
            const NeumannOperator op(normalize_adjacency(g, cfg_.filter.mode), cfg_.filter.lambda,
                                     cfg_.filter.order);
            for (double sigma : cfg_.lemma1.sigmas) {
                const Lemma1Report rep =
                    lemma1_verify(op, sigma, cfg_.lemma1.dim, cfg_.lemma1.trials, seed, cfg_.tau.row_cap);
                ResultRow r = base_row(seed);
                r.n = g.num_nodes();
                r.graph = graph_label(r.n);
                r.filter = "ngc";
                r.epsilon = 0.0;
                r.noise = "gaussian";
                r.noise_level = sigma;
                r.row_normalize = false;
                double mean = 0.0;
                for (double v : rep.observed) mean += v;
                mean /= static_cast<double>(rep.trials());
                emit(r, "tau", rep.tau);
                emit(r, "bound", rep.bound);
                emit(r, "mean_observed", mean);
                emit(r, "violation_rate", rep.violation_rate);
                emit(r, "entrywise_violation_rate", rep.entrywise_violation_rate);
                const double limit = 1.0 / static_cast<double>(cfg_.lemma1.dim);
                if (rep.violation_rate > limit) ok = false;
                detail_text += "sigma=" + fmt(sigma) + " rate=" + fmt(rep.violation_rate) + "; ";

                std::ostringstream one;
                write_csv(one, rep);
                std::istringstream lines(one.str());
                std::string line;
                std::getline(lines, line);
                if (trials.tellp() == 0) trials << "seed," << line << '\n';
                while (std::getline(lines, line)) trials << seed << ',' << line << '\n';
            }
        }
        out_.extra_files["lemma1_trials.csv"] = trials.str();
        check("violation_rate", ok, detail_text + "limit 1/d = " + fmt(1.0 / static_cast<double>(cfg_.lemma1.dim)));
    }

    void theorem1_trend() {
        Index decreasing = 0;
        std::ostringstream traces;
        traces << "seed,n,step,loss,weight_norm\n";
        for (std::uint64_t seed : cfg_.seeds) {
            std::vector<double> gaps;
            for (Index n : cfg_.graph.sizes) {
                SyntheticProblem pr = make_synthetic(synthetic_spec(cfg_, n, false), seed);
                const GaussianDraw draw = inject_gaussian(pr.data.clean, cfg_.noise.sigma, cfg_.noise.level, seed);
                pr.data.noise = draw.noise;
                pr.data.observed = draw.observed;
                const NeumannOperator op(normalize_adjacency(pr.graph, cfg_.filter.mode), cfg_.filter.lambda,
                                         cfg_.filter.order);
                const Theorem1Report rep = theorem1_gap(op, pr.data, cfg_.train.step_size, cfg_.train.steps,
                                                        cfg_.tau.row_cap);
                ResultRow r = base_row(seed);
                r.graph = graph_label(n);
                r.n = n;
                r.filter = "ngc";
                r.epsilon = 0.0;
                r.noise = "gaussian";
                r.row_normalize = false;
                emit(r, "gap", rep.gap);
                emit(r, "g_trained", rep.g_trained);
                emit(r, "g_optimal", rep.g_optimal);
                emit(r, "gap_per_node", rep.gap / static_cast<double>(n));
                emit(r, "tau", rep.tau);
                emit(r, "tau_exact", rep.tau_exact ? 1.0 : 0.0);
                emit(r, "predictor", rep.predictor);
                emit(r, "step_size", rep.step_size);
                emit(r, "weight_norm", rep.weight_norm);
                gaps.push_back(rep.gap);
                for (std::size_t t = 0; t < rep.loss_trace.size(); ++t) {
                    traces << seed << ',' << n << ',' << t << ',' << fmt(rep.loss_trace[t]) << ','
                           << (t + 1 == rep.loss_trace.size() ? fmt(rep.weight_norm) : std::string()) << '\n';
                }
            }
            bool dec = true;
            for (std::size_t i = 1; i < gaps.size(); ++i) dec = dec && gaps[i] < gaps[i - 1];
            if (dec) ++decreasing;
        }
        out_.extra_files["theorem1_traces.csv"] = traces.str();
        const Index total = static_cast<Index>(cfg_.seeds.size());
        check("gap_decreases_in_n", decreasing * 10 >= total * 8,
              std::to_string(decreasing) + "/" + std::to_string(total) + " seeds strictly decreasing (need 80%)");
    }

    // --- classification sweeps ---------------------------------------------

    void emit_accuracy(ResultRow r, const ClassifyResult& c) {
        emit(r, "val_accuracy", c.val_accuracy);
        emit(r, "test_accuracy", c.test_accuracy);
        emit(r, "final_loss", c.final_loss);
        emit(r, "weight_norm", c.weight_norm);
    }

    std::vector<FilterSpec> compared_filters() const {
        std::vector<FilterSpec> fs{filter_spec(cfg_)};
        if (cfg_.filter.baseline && cfg_.filter.kind != FilterKind::identity) {
            FilterSpec id = fs.front();
            id.kind = FilterKind::identity;
            fs.push_back(id);
        }
        return fs;
    }

    void sweep(Sweep which) {
        const bool flip = which == Sweep::flip;
        const std::vector<double>& levels = flip ? cfg_.noise.flip_probs : cfg_.noise.levels;
        const auto filters = compared_filters();
        Index wins = 0;
        for (std::uint64_t seed : cfg_.seeds) {
            const SyntheticProblem pr = problem(seed, flip);
            const double top = *std::max_element(levels.begin(), levels.end());
            double main_acc = 0.0, base_acc = 0.0;
            for (double level : levels) {
                const FeatureMatrix x = corrupt(pr.data.clean, flip ? NoiseKind::flip : NoiseKind::gaussian,
                                                cfg_.noise.sigma, level, cfg_.noise.row_normalize, seed);
                for (std::size_t k = 0; k < filters.size(); ++k) {
                    const ClassifyResult c = classify(apply_filter(pr.graph, filters[k], x), pr.data, cfg_.train);
                    ResultRow r = base_row(seed);
                    r.n = pr.graph.num_nodes();
                    r.graph = graph_label(r.n);
                    r.filter = std::string(to_string(filters[k].kind));
                    if (filters[k].kind == FilterKind::identity) r.epsilon = 0.0;
                    r.noise = flip ? "flip" : "gaussian";
                    r.noise_level = level;
                    emit_accuracy(r, c);
                    if (level == top) (k == 0 ? main_acc : base_acc) = c.test_accuracy;
                }
            }
            if (main_acc > base_acc) ++wins;
        }
        if (filters.size() > 1) {
            const Index total = static_cast<Index>(cfg_.seeds.size());
            check("filter_beats_identity", wins * 10 >= total * 9,
                  std::to_string(wins) + "/" + std::to_string(total) +
                      " seeds with higher test accuracy than identity at the largest level (need 90%)");
        }
    }

    double sweep_level() const {
        return cfg_.noise.kind == NoiseKind::gaussian ? cfg_.noise.level : cfg_.noise.flip_prob;
    }

    void depth_sweep() {
        std::vector<int> orders = cfg_.filter.orders;
        std::sort(orders.begin(), orders.end());
        orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
        const bool flip = cfg_.noise.kind == NoiseKind::flip;
        Index holds = 0;
        for (std::uint64_t seed : cfg_.seeds) {
            const SyntheticProblem pr = problem(seed, flip);
            const FeatureMatrix x = corrupt(pr.data.clean, cfg_.noise.kind, cfg_.noise.sigma, sweep_level(),
                                            cfg_.noise.row_normalize, seed);
            FilterSpec f = filter_spec(cfg_);
            f.order = orders.back();
            // One pass to the deepest order; shallower orders are its partial sums.
            std::map<int, FeatureMatrix> partial;
            apply_filter(pr.graph, f, x, [&](int depth, const FeatureMatrix& z) {
                if (std::binary_search(orders.begin(), orders.end(), depth)) partial.emplace(depth, z);
            });
            double first = 0.0, last = 0.0;
            for (int s : orders) {
                const ClassifyResult c = classify(partial.at(s), pr.data, cfg_.train);
                ResultRow r = base_row(seed);
                r.n = pr.graph.num_nodes();
                r.graph = graph_label(r.n);
                r.order = s;
                emit_accuracy(r, c);
                if (s == orders.front()) first = c.test_accuracy;
                if (s == orders.back()) last = c.test_accuracy;
            }
            if (last >= first) ++holds;
        }
        const Index total = static_cast<Index>(cfg_.seeds.size());
        check("deepest_not_worse", holds * 10 >= total * 8,
              std::to_string(holds) + "/" + std::to_string(total) +
                  " seeds where the deepest order is at least as accurate as the shallowest (need 80%)");
    }

    void rownorm_ablation() {
        const bool flip = cfg_.noise.kind == NoiseKind::flip;
        const std::vector<double>& levels = flip ? cfg_.noise.flip_probs : cfg_.noise.levels;
        const FilterSpec f = filter_spec(cfg_);
        for (std::uint64_t seed : cfg_.seeds) {
            const SyntheticProblem pr = problem(seed, flip);
            for (double level : levels) {
                for (bool normalize : {false, true}) {
                    const FeatureMatrix x = corrupt(pr.data.clean, cfg_.noise.kind, cfg_.noise.sigma, level,
                                                    normalize, seed);
                    const FeatureMatrix clean = normalize ? row_normalize(pr.data.clean) : pr.data.clean;
                    const FeatureMatrix z = apply_filter(pr.graph, f, x);
                    const FeatureMatrix z_clean = apply_filter(pr.graph, f, clean);
                    const ClassifyResult c = classify(z, pr.data, cfg_.train);
                    ResultRow r = base_row(seed);
                    r.n = pr.graph.num_nodes();
                    r.graph = graph_label(r.n);
                    r.noise_level = level;
                    r.row_normalize = normalize;
                    emit_accuracy(r, c);
                    const double denom = z_clean.norm();
                    emit(r, "aggregated_noise_rel",
                         denom > 0.0 ? (z - z_clean).norm() / denom : std::numeric_limits<double>::quiet_NaN());
                }
            }
        }
    }

    const ExperimentConfig& cfg_;
    RunOutcome out_;
    std::optional<LoadedDataset> loaded_;
};

}  // namespace detail

/// Run the configured experiment in memory. Seeds run in list order and each
/// seed's sweep in configuration order, so the rows are deterministic.
inline RunOutcome execute(const ExperimentConfig& cfg) {
    const auto errs = validate_config(cfg);
    if (!errs.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : errs) msg += "\n  " + e;
        throw Error(msg);
    }
    return detail::Runner(cfg).run();
}

inline std::string config_hash(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << ngc::detail::fnv1a(serialize_config(cfg));
    return os.str();
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

/// Files written by run_experiment, all inside `cfg.output`:
///   results.csv        tidy rows, header kResultHeader
///   config.conf        the effective configuration with every default spelled out
///   manifest.txt       hash, version, seeds, checks, timestamp
///   plus any experiment-specific CSVs (lemma1_trials.csv, theorem1_traces.csv).
/// Returns 0, or 2 when `check` is set and a threshold fails.
inline int run_experiment(const ExperimentConfig& cfg, bool check, std::ostream& log) {
    const RunOutcome outcome = execute(cfg);
    namespace fs = std::filesystem;
    const fs::path dir(cfg.output);
    fs::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& body) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw Error("cannot write '" + (dir / name).string() + "'");
        f << body;
    };
    {
        std::ostringstream os;
        write_results_csv(os, outcome.rows);
        write("results.csv", os.str());
    }
    write("config.conf", serialize_config(cfg));
    for (const auto& [name, body] : outcome.extra_files) write(name, body);

    std::ostringstream man;
    man << "tool = ngc\n"
        << "version = " << kVersion << '\n'
        << "experiment = " << to_string(cfg.experiment) << '\n'
        << "config_hash = " << config_hash(cfg) << '\n'
        << "seeds = " << detail::format_value(cfg.seeds) << '\n'
        << "rows = " << outcome.rows.size() << '\n';
    for (const auto& [name, body] : outcome.extra_files) man << "file = " << name << '\n';
    for (const auto& c : outcome.checks)
        man << "check." << c.name << " = " << (c.passed ? "pass" : "fail") << " # " << c.detail << '\n';
    man << "timestamp = " << utc_timestamp() << '\n';
    write("manifest.txt", man.str());

    for (const auto& c : outcome.checks)
        log << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    log << "wrote " << outcome.rows.size() << " rows to " << (dir / "results.csv").string() << '\n';
    return check && !outcome.all_checks_passed() ? 2 : 0;
}

}  // namespace ngc::experiment
