#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ngc/error.hpp"
#include "ngc/experiment/graph_spec.hpp"
#include "ngc/experiment/io.hpp"
#include "ngc/graph.hpp"
#include "ngc/noise.hpp"
#include "ngc/robust.hpp"

namespace ngc::experiment {

enum class ExperimentKind {
    tau_report,
    verify_neumann,
    verify_lemma1,
    theorem1_trend,
    noise_sweep,
    flip_sweep,
    depth_sweep,
    rownorm_ablation,
};

inline constexpr ExperimentKind kAllExperiments[] = {
    ExperimentKind::tau_report,     ExperimentKind::verify_neumann, ExperimentKind::verify_lemma1,
    ExperimentKind::theorem1_trend, ExperimentKind::noise_sweep,    ExperimentKind::flip_sweep,
    ExperimentKind::depth_sweep,    ExperimentKind::rownorm_ablation,
};

inline std::string_view to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::tau_report: return "tau_report";
        case ExperimentKind::verify_neumann: return "verify_neumann";
        case ExperimentKind::verify_lemma1: return "verify_lemma1";
        case ExperimentKind::theorem1_trend: return "theorem1_trend";
        case ExperimentKind::noise_sweep: return "noise_sweep";
        case ExperimentKind::flip_sweep: return "flip_sweep";
        case ExperimentKind::depth_sweep: return "depth_sweep";
        case ExperimentKind::rownorm_ablation: return "rownorm_ablation";
    }
    return "?";
}

inline ExperimentKind parse_experiment_kind(std::string_view s) {
    for (auto k : kAllExperiments)
        if (to_string(k) == s) return k;
    throw ParseError("unknown experiment '" + std::string(s) + "'");
}

enum class FilterKind { ngc, rngc, identity };

inline std::string_view to_string(FilterKind k) {
    switch (k) {
        case FilterKind::ngc: return "ngc";
        case FilterKind::rngc: return "rngc";
        case FilterKind::identity: return "identity";
    }
    return "?";
}

inline FilterKind parse_filter_kind(std::string_view s) {
    if (s == "ngc") return FilterKind::ngc;
    if (s == "rngc") return FilterKind::rngc;
    if (s == "identity") return FilterKind::identity;
    throw ParseError("unknown filter '" + std::string(s) + "' (expected ngc|rngc|identity)");
}

/// Graph source. kind "file" reads the four dataset files; any generator kind
/// builds the graph, and "sbm" additionally synthesizes labelled features.
struct GraphSection {
    std::string kind = "sbm";
    Index n = 1000;
    double p = 0.01;
    Index blocks = 2;
    double p_in = 0.0;
    double p_out = 0.0;
    double expected_degree = 10.0;  ///< > 0 derives p_in/p_out for sbm
    double homophily = 0.9;
    std::vector<Index> sizes{200, 800, 2000};  ///< theorem1_trend
    std::string edges, features, labels, split;
};

struct FilterSection {
    FilterKind kind = FilterKind::ngc;
    double lambda = kDefaultLambda;
    int order = kDefaultOrder;
    double epsilon = kDefaultEpsilon;
    NormMode mode = NormMode::sym;
    SimilarityMode similarity = SimilarityMode::dense;
    bool baseline = true;  ///< also evaluate the identity filter in sweeps
    std::vector<int> orders{1, 2, 4, 8, 16, 32};  ///< depth_sweep
};

struct NoiseSection {
    NoiseKind kind = NoiseKind::gaussian;
    double sigma = 1.0;
    double level = 1.0;
    std::vector<double> levels{0.0, 0.5, 1.0, 2.0, 4.0};
    double flip_prob = 0.1;
    std::vector<double> flip_probs{0.0, 0.1, 0.2, 0.4};
    bool row_normalize = true;
};

struct DataSection {
    Index dim = 50;
    double feature_sigma = 0.05;
    double binary_high = 0.2;
    double binary_low = 0.05;
    Index train_per_class = 20;
    Index val = 200;
    Index test = 500;
};

struct TrainSection {
    double step_size = 0.0;  ///< 0 selects 1/L
    int steps = 500;
    double weight_decay = 0.0;
};

struct TauSection {
    std::vector<std::string> graphs{"isolated:4", "star:4", "complete:4", "ring:8"};
    Index row_cap = kDefaultMaterializeCap;
    Index sample_rows = 256;
};

struct Lemma1Section {
    Index dim = 32;
    Index trials = 2000;
    std::vector<double> sigmas{0.5, 1.0, 2.0};
};

struct VerifySection {
    Index graphs = 20;
    Index max_n = 200;
    std::vector<int> orders{4, 16, 64};
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::noise_sweep;
    GraphSection graph;
    FilterSection filter;
    NoiseSection noise;
    DataSection data;
    TrainSection train;
    TauSection tau;
    Lemma1Section lemma1;
    VerifySection verify;
    std::vector<std::uint64_t> seeds{0};
    std::string output = "results";
};

namespace detail {

// --- value formatting -------------------------------------------------------

inline std::string format_value(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}
inline std::string format_value(int v) { return std::to_string(v); }
inline std::string format_value(Index v) { return std::to_string(v); }
inline std::string format_value(std::uint64_t v) { return std::to_string(v); }
inline std::string format_value(bool v) { return v ? "true" : "false"; }
inline std::string format_value(const std::string& v) { return v; }
inline std::string format_value(ExperimentKind v) { return std::string(to_string(v)); }
inline std::string format_value(FilterKind v) { return std::string(to_string(v)); }
inline std::string format_value(NormMode v) { return std::string(to_string(v)); }
inline std::string format_value(SimilarityMode v) { return std::string(to_string(v)); }
inline std::string format_value(NoiseKind v) { return std::string(to_string(v)); }

template <typename T>
std::string format_list(const std::vector<T>& v, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += format_value(v[i]);
    }
    return out;
}

template <typename T>
std::string format_value(const std::vector<T>& v) { return format_list(v, ","); }
// Generator specs contain commas, so string lists use ';'.
inline std::string format_value(const std::vector<std::string>& v) { return format_list(v, ";"); }

// --- value parsing ----------------------------------------------------------

inline void parse_value(std::string_view s, double& out) {
    if (!parse_double(s, out)) throw Error("'" + std::string(s) + "' is not a number");
}
inline void parse_value(std::string_view s, Index& out) {
    if (!parse_index(s, out)) throw Error("'" + std::string(s) + "' is not an integer");
}
inline void parse_value(std::string_view s, int& out) {
    Index v = 0;
    parse_value(s, v);
    out = static_cast<int>(v);
}
inline void parse_value(std::string_view s, std::uint64_t& out) {
    Index v = 0;
    if (!parse_index(s, v) || v < 0) throw Error("'" + std::string(s) + "' is not a non-negative integer");
    out = static_cast<std::uint64_t>(v);
}
inline void parse_value(std::string_view s, bool& out) {
    if (s == "true") out = true;
    else if (s == "false") out = false;
    else throw Error("'" + std::string(s) + "' is not true|false");
}
inline void parse_value(std::string_view s, std::string& out) { out = std::string(s); }
inline void parse_value(std::string_view s, ExperimentKind& out) { out = parse_experiment_kind(s); }
inline void parse_value(std::string_view s, FilterKind& out) { out = parse_filter_kind(s); }
inline void parse_value(std::string_view s, NormMode& out) { out = parse_norm_mode(s); }
inline void parse_value(std::string_view s, SimilarityMode& out) { out = parse_similarity_mode(s); }
inline void parse_value(std::string_view s, NoiseKind& out) { out = parse_noise_kind(s); }

template <typename T>
void parse_value(std::string_view s, std::vector<T>& out) {
    out.clear();
    if (s.empty()) return;
    for (auto item : split(s, ',')) {
        T v{};
        parse_value(item, v);
        out.push_back(v);
    }
}
inline void parse_value(std::string_view s, std::vector<std::string>& out) {
    out.clear();
    if (s.empty()) return;
    for (auto item : split(s, ';')) out.emplace_back(item);
}

}  // namespace detail

/// Shortest text that parses back to the same double.
inline std::string format_number(double v) { return detail::format_value(v); }

/// Seed list: comma-separated integers and inclusive ranges `a..b`.
inline std::vector<std::uint64_t> parse_seed_list(std::string_view s) {
    std::vector<std::uint64_t> out;
    for (auto item : detail::split(s, ',')) {
        if (item.empty()) throw Error("empty entry in seed list");
        const auto dots = item.find("..");
        if (dots == std::string_view::npos) {
            std::uint64_t v = 0;
            detail::parse_value(item, v);
            out.push_back(v);
            continue;
        }
        std::uint64_t lo = 0, hi = 0;
        detail::parse_value(detail::trim(item.substr(0, dots)), lo);
        detail::parse_value(detail::trim(item.substr(dots + 2)), hi);
        if (hi < lo) throw Error("seed range '" + std::string(item) + "' is decreasing");
        for (std::uint64_t v = lo; v <= hi; ++v) out.push_back(v);
    }
    return out;
}

/// One configurable key with its formatter and parser.
struct ConfigField {
    std::string key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, std::string_view)> set;
};

namespace detail {

template <typename Access>
ConfigField field(std::string key, Access access) {
    return ConfigField{
        std::move(key),
        [access](const ExperimentConfig& c) { return format_value(access(c)); },
        [access](ExperimentConfig& c, std::string_view v) { parse_value(v, access(c)); },
    };
}

}  // namespace detail

/// Every key in serialization order.
inline const std::vector<ConfigField>& config_fields() {
    using detail::field;
    static const std::vector<ConfigField> fields = {
        field("experiment", [](auto& c) -> auto& { return c.experiment; }),
        field("graph.kind", [](auto& c) -> auto& { return c.graph.kind; }),
        field("graph.n", [](auto& c) -> auto& { return c.graph.n; }),
        field("graph.p", [](auto& c) -> auto& { return c.graph.p; }),
        field("graph.blocks", [](auto& c) -> auto& { return c.graph.blocks; }),
        field("graph.p_in", [](auto& c) -> auto& { return c.graph.p_in; }),
        field("graph.p_out", [](auto& c) -> auto& { return c.graph.p_out; }),
        field("graph.expected_degree", [](auto& c) -> auto& { return c.graph.expected_degree; }),
        field("graph.homophily", [](auto& c) -> auto& { return c.graph.homophily; }),
        field("graph.sizes", [](auto& c) -> auto& { return c.graph.sizes; }),
        field("graph.edges", [](auto& c) -> auto& { return c.graph.edges; }),
        field("graph.features", [](auto& c) -> auto& { return c.graph.features; }),
        field("graph.labels", [](auto& c) -> auto& { return c.graph.labels; }),
        field("graph.split", [](auto& c) -> auto& { return c.graph.split; }),
        field("filter.kind", [](auto& c) -> auto& { return c.filter.kind; }),
        field("filter.lambda", [](auto& c) -> auto& { return c.filter.lambda; }),
        field("filter.order", [](auto& c) -> auto& { return c.filter.order; }),
        field("filter.epsilon", [](auto& c) -> auto& { return c.filter.epsilon; }),
        field("filter.mode", [](auto& c) -> auto& { return c.filter.mode; }),
        field("filter.similarity", [](auto& c) -> auto& { return c.filter.similarity; }),
        field("filter.baseline", [](auto& c) -> auto& { return c.filter.baseline; }),
        field("filter.orders", [](auto& c) -> auto& { return c.filter.orders; }),
        field("noise.kind", [](auto& c) -> auto& { return c.noise.kind; }),
        field("noise.sigma", [](auto& c) -> auto& { return c.noise.sigma; }),
        field("noise.level", [](auto& c) -> auto& { return c.noise.level; }),
        field("noise.levels", [](auto& c) -> auto& { return c.noise.levels; }),
        field("noise.flip_prob", [](auto& c) -> auto& { return c.noise.flip_prob; }),
        field("noise.flip_probs", [](auto& c) -> auto& { return c.noise.flip_probs; }),
        field("noise.row_normalize", [](auto& c) -> auto& { return c.noise.row_normalize; }),
        field("data.dim", [](auto& c) -> auto& { return c.data.dim; }),
        field("data.feature_sigma", [](auto& c) -> auto& { return c.data.feature_sigma; }),
        field("data.binary_high", [](auto& c) -> auto& { return c.data.binary_high; }),
        field("data.binary_low", [](auto& c) -> auto& { return c.data.binary_low; }),
        field("data.train_per_class", [](auto& c) -> auto& { return c.data.train_per_class; }),
        field("data.val", [](auto& c) -> auto& { return c.data.val; }),
        field("data.test", [](auto& c) -> auto& { return c.data.test; }),
        field("train.step_size", [](auto& c) -> auto& { return c.train.step_size; }),
        field("train.steps", [](auto& c) -> auto& { return c.train.steps; }),
        field("train.weight_decay", [](auto& c) -> auto& { return c.train.weight_decay; }),
        field("tau.graphs", [](auto& c) -> auto& { return c.tau.graphs; }),
        field("tau.row_cap", [](auto& c) -> auto& { return c.tau.row_cap; }),
        field("tau.sample_rows", [](auto& c) -> auto& { return c.tau.sample_rows; }),
        field("lemma1.dim", [](auto& c) -> auto& { return c.lemma1.dim; }),
        field("lemma1.trials", [](auto& c) -> auto& { return c.lemma1.trials; }),
        field("lemma1.sigmas", [](auto& c) -> auto& { return c.lemma1.sigmas; }),
        field("verify.graphs", [](auto& c) -> auto& { return c.verify.graphs; }),
        field("verify.max_n", [](auto& c) -> auto& { return c.verify.max_n; }),
        field("verify.orders", [](auto& c) -> auto& { return c.verify.orders; }),
        ConfigField{
            "seeds",
            [](const ExperimentConfig& c) { return detail::format_value(c.seeds); },
            [](ExperimentConfig& c, std::string_view v) { c.seeds = parse_seed_list(v); },
        },
        field("output", [](auto& c) -> auto& { return c.output; }),
    };
    return fields;
}

/// Assign one key. Unknown keys and malformed values throw Error.
inline void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
    for (const auto& f : config_fields()) {
        if (f.key == key) {
            try {
                f.set(cfg, value);
            } catch (const Error& e) {
                throw Error(std::string(key) + ": " + e.what());
            }
            return;
        }
    }
    throw Error("unknown key '" + std::string(key) + "'");
}

/// `key = value` lines; '#' starts a comment line. Missing keys keep their
/// defaults; unknown or repeated keys are rejected with the line number.
inline ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::set<std::string, std::less<>> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::skippable(line)) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
        const auto key = detail::trim(std::string_view(line).substr(0, eq));
        const auto value = detail::trim(std::string_view(line).substr(eq + 1));
        if (!seen.insert(std::string(key)).second) {
            throw ParseError("key '" + std::string(key) + "' given twice", lineno);
        }
        try {
            set_config_value(cfg, key, value);
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    return cfg;
}

inline ExperimentConfig parse_config(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

/// Every key, one per line, in a fixed order.
inline std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& f : config_fields()) {
        out += f.key;
        out += " = ";
        out += f.get(cfg);
        out += '\n';
    }
    return out;
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return serialize_config(a) == serialize_config(b);
}

/// Semantic checks; each message names the offending key. Empty means valid.
inline std::vector<std::string> validate_config(const ExperimentConfig& c) {
    std::vector<std::string> errs;
    auto need = [&](bool ok, const char* key, const std::string& msg) {
        if (!ok) errs.push_back(std::string(key) + ": " + msg);
    };
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };

    const bool file = c.graph.kind == "file";
    if (!file) {
        try {
            (void)parse_graph_kind(c.graph.kind);
        } catch (const Error& e) {
            errs.push_back(std::string("graph.kind: ") + e.what() + " (or 'file')");
        }
    } else {
        need(!c.graph.edges.empty(), "graph.edges", "required when graph.kind = file");
        need(!c.graph.features.empty(), "graph.features", "required when graph.kind = file");
        need(!c.graph.labels.empty(), "graph.labels", "required when graph.kind = file");
        need(!c.graph.split.empty(), "graph.split", "required when graph.kind = file");
    }
    const bool labelled = c.experiment == ExperimentKind::noise_sweep ||
                          c.experiment == ExperimentKind::flip_sweep ||
                          c.experiment == ExperimentKind::depth_sweep ||
                          c.experiment == ExperimentKind::rownorm_ablation ||
                          c.experiment == ExperimentKind::theorem1_trend;
    need(!labelled || file || c.graph.kind == "sbm", "graph.kind",
         std::string(to_string(c.experiment)) + " needs labelled data (sbm or file)");
    need(c.experiment != ExperimentKind::theorem1_trend || !file, "graph.kind",
         "theorem1_trend generates graphs of several sizes and needs sbm");
    need(c.graph.n >= 1, "graph.n", "must be >= 1");
    need(prob(c.graph.p), "graph.p", "must lie in [0,1]");
    need(c.graph.blocks >= 1, "graph.blocks", "must be >= 1");
    need(c.graph.blocks <= c.graph.n, "graph.blocks", "must not exceed graph.n");
    need(prob(c.graph.p_in), "graph.p_in", "must lie in [0,1]");
    need(prob(c.graph.p_out), "graph.p_out", "must lie in [0,1]");
    need(finite_nonneg(c.graph.expected_degree), "graph.expected_degree", "must be finite and >= 0");
    need(prob(c.graph.homophily), "graph.homophily", "must lie in [0,1]");
    need(!c.graph.sizes.empty(), "graph.sizes", "must not be empty");
    for (Index s : c.graph.sizes) need(s >= c.graph.blocks, "graph.sizes", "every size must be >= graph.blocks");

    need(finite_nonneg(c.filter.lambda), "filter.lambda", "must be finite and >= 0");
    need(c.filter.order >= 0, "filter.order", "must be >= 0");
    need(finite_nonneg(c.filter.epsilon), "filter.epsilon", "must be finite and >= 0");
    need(!c.filter.orders.empty(), "filter.orders", "must not be empty");
    for (int s : c.filter.orders) need(s >= 0, "filter.orders", "every order must be >= 0");

    need(std::isfinite(c.noise.sigma) && c.noise.sigma > 0.0, "noise.sigma", "must be finite and > 0");
    need(finite_nonneg(c.noise.level), "noise.level", "must be finite and >= 0");
    need(!c.noise.levels.empty(), "noise.levels", "must not be empty");
    for (double v : c.noise.levels) need(finite_nonneg(v), "noise.levels", "every level must be >= 0");
    need(prob(c.noise.flip_prob), "noise.flip_prob", "must lie in [0,1]");
    need(!c.noise.flip_probs.empty(), "noise.flip_probs", "must not be empty");
    for (double v : c.noise.flip_probs) need(prob(v), "noise.flip_probs", "every probability must lie in [0,1]");

    need(c.data.dim >= 1, "data.dim", "must be >= 1");
    need(finite_nonneg(c.data.feature_sigma), "data.feature_sigma", "must be finite and >= 0");
    need(prob(c.data.binary_high), "data.binary_high", "must lie in [0,1]");
    need(prob(c.data.binary_low), "data.binary_low", "must lie in [0,1]");
    need(c.data.train_per_class >= 1, "data.train_per_class", "must be >= 1");
    need(c.data.val >= 0, "data.val", "must be >= 0");
    need(c.data.test >= 1, "data.test", "must be >= 1");

    need(finite_nonneg(c.train.step_size), "train.step_size", "must be finite and >= 0 (0 selects 1/L)");
    need(c.train.steps >= 1, "train.steps", "must be >= 1");
    need(finite_nonneg(c.train.weight_decay), "train.weight_decay", "must be finite and >= 0");

    need(!c.tau.graphs.empty(), "tau.graphs", "must not be empty");
    for (const auto& g : c.tau.graphs) {
        try {
            (void)parse_graph_spec(g);
        } catch (const Error& e) {
            errs.push_back(std::string("tau.graphs: ") + e.what());
        }
    }
    need(c.tau.row_cap >= 1, "tau.row_cap", "must be >= 1");
    need(c.tau.sample_rows >= 1, "tau.sample_rows", "must be >= 1");

    need(c.lemma1.dim >= 1, "lemma1.dim", "must be >= 1");
    need(c.lemma1.trials >= 1, "lemma1.trials", "must be >= 1");
    need(!c.lemma1.sigmas.empty(), "lemma1.sigmas", "must not be empty");
    for (double v : c.lemma1.sigmas) need(finite_nonneg(v), "lemma1.sigmas", "every sigma must be >= 0");

    need(c.verify.graphs >= 1, "verify.graphs", "must be >= 1");
    need(c.verify.max_n >= 2, "verify.max_n", "must be >= 2");
    need(!c.verify.orders.empty(), "verify.orders", "must not be empty");
    for (int s : c.verify.orders) need(s >= 0, "verify.orders", "every order must be >= 0");

    need(!c.seeds.empty(), "seeds", "must not be empty");
    need(!c.output.empty(), "output", "must not be empty");
    return errs;
}

}  // namespace ngc::experiment
