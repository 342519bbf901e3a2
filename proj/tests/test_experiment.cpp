#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ngc/experiment/runner.hpp"

using namespace ngc;
using namespace ngc::experiment;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::filesystem::path tmp_dir(const std::string& name) {
    const auto p = std::filesystem::path(NGC_TEST_TMPDIR) / name;
    std::filesystem::remove_all(p);
    return p;
}

std::string data_path(const std::string& rel) { return std::string(NGC_TEST_DATADIR) + "/" + rel; }

std::size_t parse_error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

ExperimentConfig small_sweep() {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::noise_sweep;
    cfg.graph.n = 200;
    cfg.data.dim = 10;
    cfg.data.val = 40;
    cfg.data.test = 100;
    cfg.noise.levels = {0.0, 1.0};
    cfg.train.steps = 50;
    cfg.seeds = {0, 1};
    return cfg;
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
    const ExperimentConfig cfg;
    EXPECT_EQ(cfg.filter.lambda, 32.0);
    EXPECT_EQ(cfg.filter.order, 16);
    EXPECT_EQ(cfg.filter.mode, NormMode::sym);
    EXPECT_EQ(cfg.train.steps, 500);
    EXPECT_TRUE(validate_config(cfg).empty());
    EXPECT_TRUE(parse_config(serialize_config(cfg)) == cfg);
}

TEST(Config, RoundTripsEveryKey) {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::depth_sweep;
    cfg.filter.kind = FilterKind::rngc;
    cfg.filter.similarity = SimilarityMode::edge_masked;
    cfg.filter.lambda = 0.1;
    cfg.noise.levels = {0.0, 0.3, 1e-7};
    cfg.tau.graphs = {"ring:8", "sbm:40:p_in=0.3,p_out=0.01"};
    cfg.seeds = {3, 4, 9};
    const ExperimentConfig back = parse_config(serialize_config(cfg));
    EXPECT_TRUE(back == cfg);
    EXPECT_EQ(back.noise.levels[2], 1e-7);
    EXPECT_EQ(back.tau.graphs[1], "sbm:40:p_in=0.3,p_out=0.01");
}

TEST(Config, ParsesCommentsAndOverrides) {
    const ExperimentConfig cfg = parse_config("# comment\n\nfilter.lambda = 4\n  seeds = 0..2,7\n");
    EXPECT_EQ(cfg.filter.lambda, 4.0);
    EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{0, 1, 2, 7}));
}

TEST(Config, RejectsWithLineNumbers) {
    EXPECT_EQ(parse_error_line("filter.lambda = 1\nfilter.lamda = 2\n"), 2u);
    EXPECT_EQ(parse_error_line("seeds = 1\n\nseeds = 2\n"), 3u);
    EXPECT_EQ(parse_error_line("filter.order = abc\n"), 1u);
    EXPECT_EQ(parse_error_line("just words\n"), 1u);
    EXPECT_EQ(parse_error_line("filter.mode = row\n"), 1u);
}

TEST(Config, SeedLists) {
    EXPECT_EQ(parse_seed_list("0..3"), (std::vector<std::uint64_t>{0, 1, 2, 3}));
    EXPECT_EQ(parse_seed_list("5"), (std::vector<std::uint64_t>{5}));
    EXPECT_THROW(parse_seed_list("3..1"), Error);
    EXPECT_THROW(parse_seed_list("1,,2"), Error);
}

TEST(Config, ValidationNamesTheKey) {
    ExperimentConfig cfg;
    cfg.filter.lambda = -1.0;
    cfg.noise.flip_prob = 2.0;
    cfg.graph.kind = "ring";
    const auto errs = validate_config(cfg);
    auto mentions = [&](const std::string& key) {
        for (const auto& e : errs)
            if (e.rfind(key + ":", 0) == 0) return true;
        return false;
    };
    EXPECT_TRUE(mentions("filter.lambda"));
    EXPECT_TRUE(mentions("noise.flip_prob"));
    EXPECT_TRUE(mentions("graph.kind"));

    ExperimentConfig file;
    file.graph.kind = "file";
    EXPECT_TRUE(!validate_config(file).empty());
    file.graph.edges = "e";
    file.graph.features = "f";
    file.graph.labels = "l";
    file.graph.split = "s";
    EXPECT_TRUE(validate_config(file).empty());

    ExperimentConfig tau;
    tau.experiment = ExperimentKind::tau_report;
    tau.tau.graphs = {"grid:4"};
    EXPECT_FALSE(validate_config(tau).empty());
    EXPECT_THROW(execute(tau), Error);
}

TEST(Config, ShippedConfigsValidate) {
    for (const auto& entry : std::filesystem::directory_iterator(NGC_TEST_CONFIGDIR)) {
        std::ifstream in(entry.path());
        const ExperimentConfig cfg = parse_config(in);
        EXPECT_TRUE(validate_config(cfg).empty()) << entry.path();
    }
}

TEST(GraphSpecParse, KindsAndKeys) {
    const GraphSpec s = parse_graph_spec("sbm:40:p_in=0.3,p_out=0.01,blocks=4,seed=9");
    EXPECT_EQ(s.kind, GraphKind::sbm);
    EXPECT_EQ(s.n, 40);
    EXPECT_EQ(s.params.blocks, 4);
    EXPECT_EQ(s.params.p_in, 0.3);
    EXPECT_TRUE(s.has_seed);
    EXPECT_EQ(s.seed, 9u);
    EXPECT_EQ(parse_graph_spec("ring:8").build().num_edges(), 8u);
    EXPECT_THROW(parse_graph_spec("ring"), ParseError);
    EXPECT_THROW(parse_graph_spec("ring:0"), ParseError);
    EXPECT_THROW(parse_graph_spec("er:10:q=0.1"), ParseError);
    EXPECT_THROW(parse_graph_spec("er:10:p=x"), ParseError);
}

TEST(Io, CsvFieldQuoting) {
    EXPECT_EQ(csv_field("ring:8"), "ring:8");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"x\""), "\"say \"\"x\"\"\"");
}

TEST(Io, LoadsTinyDataset) {
    const LoadedDataset ds = load_dataset(data_path("tiny/edges.txt"), data_path("tiny/features.csv"),
                                          data_path("tiny/labels.csv"), data_path("tiny/split.csv"));
    EXPECT_EQ(ds.graph.num_nodes(), 4);
    EXPECT_EQ(ds.graph.num_edges(), 3u);
    EXPECT_EQ(ds.data.clean.cols(), 3);
    EXPECT_EQ(ds.data.classes, 3);
    EXPECT_TRUE(ds.binary);
    EXPECT_EQ(mask_count(ds.data.train), 1);
    EXPECT_EQ(mask_count(ds.data.val), 1);
    EXPECT_EQ(mask_count(ds.data.test), 1);
    EXPECT_TRUE(ds.data.train[0]);
    EXPECT_TRUE(ds.data.test[1]);
}

TEST(Io, ReportsBadRows) {
    std::istringstream features("1,0\n0,1,1\n");
    try {
        read_feature_csv(features);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    std::istringstream labels("0\n-1\n");
    EXPECT_THROW(read_labels(labels), ParseError);
    std::istringstream split("train\nholdout\n");
    EXPECT_THROW(read_split(split), ParseError);

    std::istringstream e("0 1\n"), f("1\n0\n"), l("0\n"), s("train\ntest\n");
    EXPECT_THROW(load_dataset(e, f, l, s), Error);
    EXPECT_THROW(load_dataset("/nonexistent/e", "/nonexistent/f", "/nonexistent/l", "/nonexistent/s"), Error);
}

TEST(Synthetic, ShapesSplitAndDeterminism) {
    SyntheticSpec spec;
    spec.n = 300;
    spec.classes = 3;
    spec.dim = 12;
    spec.val = 50;
    spec.test = 100;
    const SyntheticProblem a = make_synthetic(spec, 4);
    const SyntheticProblem b = make_synthetic(spec, 4);
    EXPECT_TRUE(a.graph == b.graph);
    EXPECT_EQ(a.data.clean, b.data.clean);
    EXPECT_EQ(a.data.clean.rows(), 300);
    EXPECT_EQ(a.data.clean.cols(), 12);
    EXPECT_EQ(a.data.classes, 3);
    EXPECT_EQ(mask_count(a.data.train), 60);
    EXPECT_EQ(mask_count(a.data.val), 50);
    EXPECT_EQ(mask_count(a.data.test), 100);
    for (std::size_t i = 0; i < 300; ++i) {
        EXPECT_LE(int(a.data.train[i]) + int(a.data.val[i]) + int(a.data.test[i]), 1);
        EXPECT_EQ(a.data.labels[i], sbm_block_of(300, 3, static_cast<Index>(i)));
    }
    std::vector<Index> per_class(3, 0);
    for (std::size_t i = 0; i < 300; ++i)
        if (a.data.train[i]) ++per_class[static_cast<std::size_t>(a.data.labels[i])];
    EXPECT_EQ(per_class, (std::vector<Index>{20, 20, 20}));
    EXPECT_EQ(a.data.observed, a.data.clean);

    const double mean_degree = 2.0 * static_cast<double>(a.graph.num_edges()) / 300.0;
    EXPECT_NEAR(mean_degree, 10.0, 1.5);

    spec.binary = true;
    EXPECT_TRUE(is_binary(make_synthetic(spec, 4).data.clean));
}

TEST(Synthetic, SbmParamsHitTargetDegree) {
    SyntheticSpec spec;
    spec.n = 1000;
    spec.classes = 2;
    const GeneratorParams p = sbm_params(spec);
    EXPECT_NEAR(p.p_in * 499.0, 9.0, 1e-12);
    EXPECT_NEAR(p.p_out * 500.0, 1.0, 1e-12);
}

TEST(Runner, TauReportOnCaseStudyGraphs) {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::tau_report;
    cfg.filter.lambda = 64;
    cfg.filter.order = 64;
    const RunOutcome out = execute(cfg);
    int tau_rows = 0;
    for (const auto& r : out.rows) {
        if (r.metric != "tau") continue;
        ++tau_rows;
        EXPECT_EQ(r.mode, "rw");
        if (r.graph == "isolated:4") EXPECT_NEAR(r.value, 4.0, 1e-9);
        EXPECT_GE(r.value, 1.0 - 1e-9);
        EXPECT_LE(r.value, static_cast<double>(r.n) + 1e-9);
    }
    EXPECT_EQ(tau_rows, 4);
    EXPECT_TRUE(out.all_checks_passed());
}

TEST(Runner, DeterministicFiles) {
    ExperimentConfig cfg = small_sweep();
    cfg.output = tmp_dir("det_a").string();
    std::ostringstream log;
    EXPECT_EQ(run_experiment(cfg, false, log), 0);
    ExperimentConfig again = cfg;
    again.output = tmp_dir("det_b").string();
    EXPECT_EQ(run_experiment(again, false, log), 0);
    const std::string a = slurp(std::filesystem::path(cfg.output) / "results.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(std::filesystem::path(again.output) / "results.csv"));
    EXPECT_EQ(a.substr(0, a.find('\n')), kResultHeader);

    const std::string manifest = slurp(std::filesystem::path(cfg.output) / "manifest.txt");
    EXPECT_NE(manifest.find("config_hash = " + config_hash(cfg)), std::string::npos);
    EXPECT_NE(manifest.find("version = " + std::string(kVersion)), std::string::npos);
    EXPECT_TRUE(parse_config(slurp(std::filesystem::path(cfg.output) / "config.conf")) == cfg);
}

TEST(Runner, IdentityNearChanceUnderHeavyNoise) {
    ExperimentConfig cfg = small_sweep();
    cfg.graph.n = 1000;
    cfg.data.val = 200;
    cfg.data.test = 500;
    cfg.noise.levels = {50.0};
    cfg.noise.row_normalize = false;
    cfg.seeds = {0};
    const RunOutcome out = execute(cfg);
    bool seen = false;
    for (const auto& r : out.rows) {
        if (r.filter != "identity" || r.metric != "test_accuracy") continue;
        seen = true;
        // 500 test nodes, 2 classes: 4 standard deviations around 0.5.
        EXPECT_NEAR(r.value, 0.5, 4.0 * std::sqrt(0.25 / 500.0));
    }
    EXPECT_TRUE(seen);
}

TEST(Runner, CheckFailureExitCode) {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::verify_lemma1;
    cfg.graph.kind = "ring";
    cfg.graph.n = 64;
    cfg.filter.mode = NormMode::rw;
    cfg.lemma1.trials = 20;
    cfg.lemma1.sigmas = {1.0};
    cfg.output = tmp_dir("lemma1_check").string();
    std::ostringstream log;
    const RunOutcome out = execute(cfg);
    ASSERT_FALSE(out.checks.empty());
    const int expected = out.all_checks_passed() ? 0 : 2;
    EXPECT_EQ(run_experiment(cfg, true, log), expected);
    EXPECT_EQ(run_experiment(cfg, false, log), 0);
    EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(cfg.output) / "lemma1_trials.csv"));
}

TEST(Runner, ApplyFilterKinds) {
    const Graph g = canonical_graph(GraphKind::ring, 10);
    Matrix x = Matrix::Identity(10, 3);
    FilterSpec id;
    id.kind = FilterKind::identity;
    EXPECT_EQ(apply_filter(g, id, x), x);
    FilterSpec ngc_spec;
    FilterSpec rngc_spec;
    rngc_spec.kind = FilterKind::rngc;
    rngc_spec.epsilon = 0.0;
    EXPECT_LE((apply_filter(g, ngc_spec, x) - apply_filter(g, rngc_spec, x)).cwiseAbs().maxCoeff(), 1e-12);
    int calls = 0;
    apply_filter(g, ngc_spec, x, [&](int, const FeatureMatrix&) { ++calls; });
    EXPECT_EQ(calls, ngc_spec.order + 1);
}
