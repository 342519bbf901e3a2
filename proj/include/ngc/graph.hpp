#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ngc/error.hpp"
#include "ngc/linalg.hpp"
#include "ngc/rng.hpp"

namespace ngc {

/// Undirected edge, stored with first < second.
using Edge = std::pair<Index, Index>;

/// Undirected simple graph in CSR form. Never stores self-loops; those are
/// added by normalize_adjacency.
class Graph {
public:
    Graph() = default;

    /// Symmetrize, deduplicate and sort `edges`. Either orientation and
    /// repeated pairs are accepted; self-loops and out-of-range indices throw.
    static Graph from_edges(Index n, std::span<const Edge> edges) {
        if (n < 1) throw Error("graph needs at least one node, got n=" + std::to_string(n));
        std::vector<Edge> canon;
        canon.reserve(edges.size());
        for (auto [u, v] : edges) {
            if (u < 0 || u >= n || v < 0 || v >= n) {
                throw Error("edge (" + std::to_string(u) + "," + std::to_string(v) +
                            ") out of range for n=" + std::to_string(n));
            }
            if (u == v) throw Error("self-loop on node " + std::to_string(u) + " rejected");
            canon.emplace_back(std::min(u, v), std::max(u, v));
        }
        std::sort(canon.begin(), canon.end());
        canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

        Graph g;
        g.n_ = n;
        g.edges_ = std::move(canon);
        g.degree_.assign(static_cast<std::size_t>(n), 0);
        for (auto [u, v] : g.edges_) {
            ++g.degree_[static_cast<std::size_t>(u)];
            ++g.degree_[static_cast<std::size_t>(v)];
        }
        g.row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
        for (Index i = 0; i < n; ++i) {
            g.row_ptr_[static_cast<std::size_t>(i) + 1] =
                g.row_ptr_[static_cast<std::size_t>(i)] + g.degree_[static_cast<std::size_t>(i)];
        }
        g.col_idx_.resize(2 * g.edges_.size());
        std::vector<Index> fill(g.row_ptr_.begin(), g.row_ptr_.end() - 1);
        for (auto [u, v] : g.edges_) {
            g.col_idx_[static_cast<std::size_t>(fill[static_cast<std::size_t>(v)]++)] = u;
        }
        for (auto [u, v] : g.edges_) {
            g.col_idx_[static_cast<std::size_t>(fill[static_cast<std::size_t>(u)]++)] = v;
        }
        for (Index i = 0; i < n; ++i) {
            auto b = g.col_idx_.begin() + g.row_ptr_[static_cast<std::size_t>(i)];
            auto e = g.col_idx_.begin() + g.row_ptr_[static_cast<std::size_t>(i) + 1];
            std::sort(b, e);
        }
        return g;
    }

    Index num_nodes() const noexcept { return n_; }
    std::size_t num_edges() const noexcept { return edges_.size(); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<Index>& row_ptr() const noexcept { return row_ptr_; }
    const std::vector<Index>& col_idx() const noexcept { return col_idx_; }
    const std::vector<Index>& degree() const noexcept { return degree_; }

    std::span<const Index> neighbors(Index i) const {
        const auto b = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i)]);
        const auto e = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i) + 1]);
        return std::span<const Index>(col_idx_).subspan(b, e - b);
    }

    friend bool operator==(const Graph& a, const Graph& b) {
        return a.n_ == b.n_ && a.edges_ == b.edges_;
    }

private:
    Index n_ = 0;
    std::vector<Edge> edges_;
    std::vector<Index> row_ptr_{0};
    std::vector<Index> col_idx_;
    std::vector<Index> degree_;
};

inline Graph build_graph(Index n, std::span<const Edge> edges) {
    return Graph::from_edges(n, edges);
}

inline Graph build_graph(Index n, const std::vector<Edge>& edges) {
    return Graph::from_edges(n, std::span<const Edge>(edges));
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

enum class GraphKind { isolated, star, complete, ring, erdos_renyi, sbm };

inline std::string_view to_string(GraphKind k) {
    switch (k) {
        case GraphKind::isolated: return "isolated";
        case GraphKind::star: return "star";
        case GraphKind::complete: return "complete";
        case GraphKind::ring: return "ring";
        case GraphKind::erdos_renyi: return "erdos_renyi";
        case GraphKind::sbm: return "sbm";
    }
    return "?";
}

inline GraphKind parse_graph_kind(std::string_view s) {
    if (s == "isolated") return GraphKind::isolated;
    if (s == "star") return GraphKind::star;
    if (s == "complete") return GraphKind::complete;
    if (s == "ring") return GraphKind::ring;
    if (s == "erdos_renyi" || s == "er") return GraphKind::erdos_renyi;
    if (s == "sbm") return GraphKind::sbm;
    throw ParseError("unknown graph kind '" + std::string(s) + "'");
}

/// Family parameters; only the fields of the requested kind are read.
struct GeneratorParams {
    double p = 0.0;      // erdos_renyi edge probability
    Index blocks = 2;    // sbm
    double p_in = 0.0;   // sbm within-block probability
    double p_out = 0.0;  // sbm cross-block probability
};

/// First node index owned by each SBM block, plus n as a sentinel.
inline std::vector<Index> sbm_block_starts(Index n, Index blocks) {
    std::vector<Index> starts(static_cast<std::size_t>(blocks) + 1);
    for (Index b = 0; b <= blocks; ++b) starts[static_cast<std::size_t>(b)] = b * n / blocks;
    return starts;
}

/// Block of node i under contiguous assignment.
inline Index sbm_block_of(Index n, Index blocks, Index i) {
    const auto starts = sbm_block_starts(n, blocks);
    auto it = std::upper_bound(starts.begin(), starts.end(), i);
    return static_cast<Index>(it - starts.begin()) - 1;
}

namespace detail {

inline void check_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
        std::ostringstream os;
        os << name << " must lie in [0,1], got " << p;
        throw Error(os.str());
    }
}

}  // namespace detail

/// Deterministic generator for the case-study shapes and random families.
/// star(n) uses node 0 as the center; ring(n) for n < 3 degenerates to a path.
inline Graph canonical_graph(GraphKind kind, Index n, const GeneratorParams& params = {},
                             std::uint64_t seed = 0) {
    if (n < 1) throw Error("canonical_graph needs n >= 1");
    std::vector<Edge> edges;
    switch (kind) {
        case GraphKind::isolated:
            break;
        case GraphKind::star:
            for (Index i = 1; i < n; ++i) edges.emplace_back(0, i);
            break;
        case GraphKind::complete:
            for (Index i = 0; i < n; ++i)
                for (Index j = i + 1; j < n; ++j) edges.emplace_back(i, j);
            break;
        case GraphKind::ring:
            for (Index i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
            if (n > 2) edges.emplace_back(n - 1, 0);
            break;
        case GraphKind::erdos_renyi: {
            detail::check_probability(params.p, "erdos_renyi p");
            Engine eng = make_engine(seed, "graph");
            std::bernoulli_distribution coin(params.p);
            for (Index i = 0; i < n; ++i)
                for (Index j = i + 1; j < n; ++j)
                    if (coin(eng)) edges.emplace_back(i, j);
            break;
        }
        case GraphKind::sbm: {
            detail::check_probability(params.p_in, "sbm p_in");
            detail::check_probability(params.p_out, "sbm p_out");
            if (params.blocks < 1) throw Error("sbm needs at least one block");
            if (params.blocks > n) {
                throw Error("sbm with " + std::to_string(params.blocks) + " blocks exceeds n=" +
                            std::to_string(n));
            }
            const auto starts = sbm_block_starts(n, params.blocks);
            std::vector<Index> block(static_cast<std::size_t>(n));
            for (Index b = 0; b < params.blocks; ++b)
                for (Index i = starts[static_cast<std::size_t>(b)];
                     i < starts[static_cast<std::size_t>(b) + 1]; ++i)
                    block[static_cast<std::size_t>(i)] = b;
            Engine eng = make_engine(seed, "graph");
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            for (Index i = 0; i < n; ++i)
                for (Index j = i + 1; j < n; ++j) {
                    const double p = block[static_cast<std::size_t>(i)] ==
                                             block[static_cast<std::size_t>(j)]
                                         ? params.p_in
                                         : params.p_out;
                    if (unif(eng) < p) edges.emplace_back(i, j);
                }
            break;
        }
    }
    return Graph::from_edges(n, edges);
}

// ---------------------------------------------------------------------------
// Edge-list text format: "u v" per line, 0-indexed, '#' starts a comment.
// ---------------------------------------------------------------------------

/// Parse an edge list. With n < 0 the node count is max index + 1 (at least 1);
/// otherwise indices must lie in [0, n).
inline Graph read_edge_list(std::istream& in, Index n = -1) {
    std::vector<Edge> edges;
    std::string line;
    std::size_t lineno = 0;
    Index max_index = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        long long u = 0, v = 0;
        if (!(ls >> u)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw ParseError("expected 'u v' pair", lineno);
        }
        if (!(ls >> v)) throw ParseError("expected 'u v' pair", lineno);
        std::string rest;
        if (ls >> rest) throw ParseError("trailing token '" + rest + "'", lineno);
        if (u < 0 || v < 0) throw ParseError("negative node index", lineno);
        if (n >= 0 && (u >= n || v >= n)) {
            throw ParseError("node index " + std::to_string(std::max(u, v)) +
                                 " out of range for " + std::to_string(n) + " nodes",
                             lineno);
        }
        if (u == v) throw ParseError("self-loop on node " + std::to_string(u) + " rejected", lineno);
        edges.emplace_back(static_cast<Index>(u), static_cast<Index>(v));
        max_index = std::max<Index>(max_index, static_cast<Index>(std::max(u, v)));
    }
    const Index nodes = n >= 0 ? n : std::max<Index>(max_index + 1, 1);
    return Graph::from_edges(nodes, edges);
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

enum class NormMode { sym, rw };

inline std::string_view to_string(NormMode m) { return m == NormMode::sym ? "sym" : "rw"; }

inline NormMode parse_norm_mode(std::string_view s) {
    if (s == "sym") return NormMode::sym;
    if (s == "rw") return NormMode::rw;
    throw ParseError("unknown normalization mode '" + std::string(s) + "' (expected sym|rw)");
}

/// Self-loop-augmented normalized adjacency: D^-1/2 (A+I) D^-1/2 (sym) or
/// D^-1 (A+I) (rw), with D the degree matrix of A+I.
class NormalizedAdjacency {
public:
    NormalizedAdjacency(NormMode mode, SparseMatrix matrix, Vector self_loop_degree)
        : mode_(mode), matrix_(std::move(matrix)), degree_(std::move(self_loop_degree)) {}

    NormMode mode() const noexcept { return mode_; }
    const SparseMatrix& matrix() const noexcept { return matrix_; }
    /// Diagonal of D + I.
    const Vector& self_loop_degree() const noexcept { return degree_; }
    Index size() const noexcept { return matrix_.rows(); }

    Matrix to_dense() const { return Matrix(matrix_); }

private:
    NormMode mode_;
    SparseMatrix matrix_;
    Vector degree_;
};

inline NormalizedAdjacency normalize_adjacency(const Graph& g, NormMode mode) {
    const Index n = g.num_nodes();
    Vector deg(n);
    for (Index i = 0; i < n; ++i) deg[i] = static_cast<double>(g.degree()[static_cast<std::size_t>(i)] + 1);

    SparseMatrix m(n, n);
    m.reserve(static_cast<Index>(g.col_idx().size()) + n);
    std::vector<Eigen::Triplet<double, Index>> trips;
    trips.reserve(g.col_idx().size() + static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        trips.emplace_back(i, i, 1.0 / deg[i]);
        for (Index j : g.neighbors(i)) {
            const double w = mode == NormMode::rw ? 1.0 / deg[i] : 1.0 / std::sqrt(deg[i] * deg[j]);
            trips.emplace_back(i, j, w);
        }
    }
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return NormalizedAdjacency(mode, std::move(m), std::move(deg));
}

/// Dominant eigenvalue magnitude of the normalized adjacency.
inline SpectralEstimate spectral_radius(const NormalizedAdjacency& a, int iters = 1000,
                                        double tol = 1e-10) {
    if (iters < 1) throw Error("spectral_radius needs at least one iteration");
    const SparseMatrix& m = a.matrix();
    return power_iteration([&](const Vector& v) -> Vector { return m * v; }, a.size(), iters, tol);
}

}  // namespace ngc
