#pragma once

#include <cstdint>
#include <random>

#include "ngc/graph.hpp"
#include "ngc/linalg.hpp"
#include "ngc/rng.hpp"

namespace ngc::test {

inline Graph random_er(Index n, double p, std::uint64_t seed) {
    GeneratorParams gp;
    gp.p = p;
    return canonical_graph(GraphKind::erdos_renyi, n, gp, seed);
}

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed, const char* stream = "test-matrix") {
    Engine eng = make_engine(seed, stream);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(eng);
    return m;
}

}  // namespace ngc::test
