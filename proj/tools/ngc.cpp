// Command-line front end: run experiments, validate configs, report tau.
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 a --check
// threshold failed, 3 runtime failure while running.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "ngc/experiment/config.hpp"
#include "ngc/experiment/graph_spec.hpp"
#include "ngc/experiment/runner.hpp"
#include "ngc/graph.hpp"
#include "ngc/neumann.hpp"

namespace {

using namespace ngc;
using namespace ngc::experiment;

constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 3;

bool load_config(const std::string& path, ExperimentConfig& cfg) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "error: cannot open config '" << path << "'\n";
        return false;
    }
    try {
        cfg = parse_config(in);
    } catch (const Error& e) {
        std::cerr << path << ": " << e.what() << '\n';
        return false;
    }
    return true;
}

bool report_validation(const std::string& path, const ExperimentConfig& cfg) {
    const auto errs = validate_config(cfg);
    for (const auto& e : errs) std::cerr << path << ": " << e << '\n';
    return errs.empty();
}

Graph load_graph_source(const std::string& source, std::uint64_t seed, std::string& label) {
    if (std::filesystem::is_regular_file(source)) {
        std::ifstream in(source);
        label = std::filesystem::path(source).filename().string();
        return read_edge_list(in);
    }
    const GraphSpec spec = parse_graph_spec(source);
    label = spec.text;
    return canonical_graph(spec.kind, spec.n, spec.params, spec.has_seed ? spec.seed : seed);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neumann graph convolution experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir, seeds;
    bool check = false;
    auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
    run->add_option("config", config_path, "Config file (key = value lines)")->required();
    run->add_flag("--check", check, "Exit with code 2 when an acceptance threshold fails");
    run->add_option("--out", out_dir, "Output directory (overrides 'output')");
    run->add_option("--seeds", seeds, "Seeds, e.g. 0..9 or 1,4,7 (overrides 'seeds')");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Check a config file and print its effective form");
    validate->add_option("config", validate_path, "Config file")->required();

    std::string source, mode = "rw", rows_path, dump_path;
    double lambda = kDefaultLambda;
    int order = kDefaultOrder;
    Index row_cap = kDefaultMaterializeCap, sample_rows = 256;
    std::uint64_t seed = 0;
    auto* tau = app.add_subcommand("tau", "Connectivity factor of a graph's propagation operator");
    tau->add_option("source", source, "Edge-list file or generator spec such as ring:8 or sbm:1000:p_in=0.02,p_out=0.001")
        ->required();
    tau->add_option("--lambda", lambda, "Regularization strength")->check(CLI::NonNegativeNumber);
    tau->add_option("--order", order, "Truncation order S")->check(CLI::NonNegativeNumber);
    tau->add_option("--mode", mode, "Normalization")->check(CLI::IsMember({"rw", "sym"}));
    tau->add_option("--row-cap", row_cap, "Largest n for exact tau; larger graphs are sampled");
    tau->add_option("--sample-rows", sample_rows, "Rows sampled above the cap");
    tau->add_option("--seed", seed, "Seed for random generators and row sampling");
    tau->add_option("--rows", rows_path, "Write per-node tau_i as CSV to this file");
    tau->add_option("--dump-operator", dump_path, "Write the dense operator as CSV to this file");

    CLI11_PARSE(app, argc, argv);

    if (*run) {
        ExperimentConfig cfg;
        if (!load_config(config_path, cfg)) return kExitInvalid;
        try {
            if (!out_dir.empty()) cfg.output = out_dir;
            if (!seeds.empty()) cfg.seeds = parse_seed_list(seeds);
        } catch (const Error& e) {
            std::cerr << "--seeds: " << e.what() << '\n';
            return kExitInvalid;
        }
        if (!report_validation(config_path, cfg)) return kExitInvalid;
        try {
            return run_experiment(cfg, check, std::cerr);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitRuntime;
        }
    }

    if (*validate) {
        ExperimentConfig cfg;
        if (!load_config(validate_path, cfg)) return kExitInvalid;
        if (!report_validation(validate_path, cfg)) return kExitInvalid;
        std::cout << serialize_config(cfg);
        return 0;
    }

    // tau
    Graph g;
    std::string label;
    try {
        g = load_graph_source(source, seed, label);
    } catch (const Error& e) {
        std::cerr << source << ": " << e.what() << '\n';
        return kExitInvalid;
    }
    try {
        const NeumannOperator op(normalize_adjacency(g, parse_norm_mode(mode)), lambda, order);
        const Index n = g.num_nodes();
        const ConnectivityReport rep = connectivity_factor(op, row_cap, std::min(sample_rows, n), seed);
        std::cout << "graph,n,mode,lambda,order,tau,predictor,exact,sampled_rows\n"
                  << csv_field(label) << ',' << n << ',' << mode << ',' << format_number(lambda) << ',' << order << ','
                  << format_number(rep.tau) << ',' << format_number(rep.predictor) << ',' << (rep.exact ? 1 : 0)
                  << ',' << rep.sampled_rows << '\n';
        if (!rows_path.empty()) {
            std::ofstream f(rows_path);
            f << "node,tau_i\n";
            for (Index i = 0; i < n; ++i)
                if (!std::isnan(rep.tau_i[i])) f << i << ',' << format_number(rep.tau_i[i]) << '\n';
        }
        if (!dump_path.empty()) {
            const Matrix dense = materialize_operator(op, row_cap);
            std::ofstream f(dump_path);
            for (Index i = 0; i < dense.rows(); ++i) {
                for (Index j = 0; j < dense.cols(); ++j) f << (j ? "," : "") << format_number(dense(i, j));
                f << '\n';
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
