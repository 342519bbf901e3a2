#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ngc/error.hpp"
#include "ngc/graph.hpp"
#include "ngc/noise.hpp"
#include "ngc/rng.hpp"

namespace ngc::experiment {

/// Homophilous SBM with class-conditional features.
struct SyntheticSpec {
    Index n = 1000;
    Index classes = 2;
    /// When > 0, p_in/p_out are derived so that the expected degree is this
    /// value with a `homophily` fraction of it inside the node's own block.
    double expected_degree = 10.0;
    double homophily = 0.9;
    double p_in = 0.0;
    double p_out = 0.0;

    Index dim = 50;
    /// Gaussian features: unit-norm class mean plus N(0, feature_sigma^2) per entry.
    double feature_sigma = 0.05;
    /// Binary features: Bernoulli(binary_high) on the class's signature
    /// coordinates (j mod classes == class), Bernoulli(binary_low) elsewhere.
    bool binary = false;
    double binary_high = 0.2;
    double binary_low = 0.05;

    Index train_per_class = 20;
    Index val = 200;
    Index test = 500;
};

/// Edge probabilities implied by the spec for contiguous equal blocks.
inline GeneratorParams sbm_params(const SyntheticSpec& spec) {
    GeneratorParams p;
    p.blocks = spec.classes;
    if (spec.expected_degree > 0.0) {
        const double block = static_cast<double>(spec.n) / static_cast<double>(spec.classes);
        const double within = std::max(block - 1.0, 1.0);
        const double across = std::max(static_cast<double>(spec.n) - block, 1.0);
        p.p_in = std::min(1.0, spec.homophily * spec.expected_degree / within);
        p.p_out = std::min(1.0, (1.0 - spec.homophily) * spec.expected_degree / across);
    } else {
        p.p_in = spec.p_in;
        p.p_out = spec.p_out;
    }
    return p;
}

/// Train/val/test split: `per_class` random nodes of each class for training,
/// then `val` and `test` nodes from the rest in random order. val and test are
/// clipped to the nodes that remain.
inline void assign_split(NoisyDataset& data, Index per_class, Index val, Index test,
                         std::uint64_t seed) {
    const Index n = static_cast<Index>(data.labels.size());
    data.train.assign(static_cast<std::size_t>(n), false);
    data.val.assign(static_cast<std::size_t>(n), false);
    data.test.assign(static_cast<std::size_t>(n), false);
    Engine eng = make_engine(seed, "split");
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), eng);
    std::vector<Index> taken(static_cast<std::size_t>(data.classes), 0);
    std::vector<Index> rest;
    for (Index i : order) {
        const auto c = static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)]);
        if (taken[c] < per_class) {
            ++taken[c];
            data.train[static_cast<std::size_t>(i)] = true;
        } else {
            rest.push_back(i);
        }
    }
    std::size_t k = 0;
    for (Index v = 0; v < val && k < rest.size(); ++v) data.val[static_cast<std::size_t>(rest[k++])] = true;
    for (Index t = 0; t < test && k < rest.size(); ++t) data.test[static_cast<std::size_t>(rest[k++])] = true;
}

struct SyntheticProblem {
    Graph graph;
    NoisyDataset data;  // clean features, labels, split; noise left empty
};

inline SyntheticProblem make_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.classes < 1 || spec.classes > spec.n) throw Error("synthetic: classes must lie in [1, n]");
    if (spec.dim < 1) throw Error("synthetic: feature dimension must be >= 1");
    SyntheticProblem out;
    out.graph = canonical_graph(GraphKind::sbm, spec.n, sbm_params(spec), seed);

    NoisyDataset& data = out.data;
    data.classes = spec.classes;
    data.labels.resize(static_cast<std::size_t>(spec.n));
    const auto starts = sbm_block_starts(spec.n, spec.classes);
    for (Index b = 0; b < spec.classes; ++b)
        for (Index i = starts[static_cast<std::size_t>(b)]; i < starts[static_cast<std::size_t>(b) + 1]; ++i)
            data.labels[static_cast<std::size_t>(i)] = b;

    data.clean.resize(spec.n, spec.dim);
    if (spec.binary) {
        Engine eng = make_engine(seed, "features");
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (Index i = 0; i < spec.n; ++i) {
            const Index c = data.labels[static_cast<std::size_t>(i)];
            for (Index j = 0; j < spec.dim; ++j) {
                const double p = (j % spec.classes == c) ? spec.binary_high : spec.binary_low;
                data.clean(i, j) = unif(eng) < p ? 1.0 : 0.0;
            }
        }
    } else {
        Engine mean_eng = make_engine(seed, "class-means");
        std::normal_distribution<double> normal(0.0, 1.0);
        Matrix means(spec.classes, spec.dim);
        for (Index c = 0; c < spec.classes; ++c) {
            for (Index j = 0; j < spec.dim; ++j) means(c, j) = normal(mean_eng);
            means.row(c).normalize();
        }
        Engine eng = make_engine(seed, "features");
        for (Index i = 0; i < spec.n; ++i) {
            const Index c = data.labels[static_cast<std::size_t>(i)];
            for (Index j = 0; j < spec.dim; ++j)
                data.clean(i, j) = means(c, j) + spec.feature_sigma * normal(eng);
        }
    }
    data.noise = FeatureMatrix::Zero(spec.n, spec.dim);
    data.observed = data.clean;
    assign_split(data, spec.train_per_class, spec.val, spec.test, seed);
    return out;
}

}  // namespace ngc::experiment
