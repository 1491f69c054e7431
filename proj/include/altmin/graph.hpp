#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "altmin/random.hpp"

namespace altmin {

struct Edge {
  std::size_t row = 0;
  std::size_t col = 0;

  friend constexpr auto operator<=>(const Edge&, const Edge&) = default;
};

namespace detail {

// Breadth-first distances from `source` over an adjacency callback.
// Unreached vertices keep SIZE_MAX.
template <typename NeighborFn>
std::vector<std::size_t> bfs_distances(std::size_t n_vertices, std::size_t source, NeighborFn&& neighbors) {
  constexpr auto kUnreached = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(n_vertices, kUnreached);
  std::queue<std::size_t> frontier;
  dist[source] = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    const auto v = frontier.front();
    frontier.pop();
    neighbors(v, [&](std::size_t w) {
      if (dist[w] == kUnreached) {
        dist[w] = dist[v] + 1;
        frontier.push(w);
      }
    });
  }
  return dist;
}

template <typename NeighborFn>
bool all_connected(std::size_t n_vertices, NeighborFn&& neighbors) {
  if (n_vertices == 0) return false;
  const auto dist = bfs_distances(n_vertices, 0, neighbors);
  return std::none_of(dist.begin(), dist.end(),
                      [](std::size_t d) { return d == std::numeric_limits<std::size_t>::max(); });
}

template <typename NeighborFn>
std::size_t exact_diameter(std::size_t n_vertices, NeighborFn&& neighbors) {
  if (n_vertices == 0) throw std::invalid_argument("diameter: graph has no vertices");
  std::size_t diameter = 0;
  for (std::size_t s = 0; s < n_vertices; ++s) {
    for (auto d : bfs_distances(n_vertices, s, neighbors)) {
      if (d == std::numeric_limits<std::size_t>::max())
        throw std::invalid_argument("diameter: graph is disconnected");
      diameter = std::max(diameter, d);
    }
  }
  return diameter;
}

}  // namespace detail

// Observation pattern G = (rows ∪ cols, E). Immutable once built; edges are
// stored sorted by (row, col), so an edge's position in `edges()` is a stable
// edge id used to index observed values and ELS messages.
class BipartiteGraph {
 public:
  BipartiteGraph() = default;

  // Duplicate edges are merged. Throws std::out_of_range on bad indices.
  BipartiteGraph(std::size_t n_rows, std::size_t n_cols, std::vector<Edge> edges)
      : n_rows_(n_rows), n_cols_(n_cols), edges_(std::move(edges)) {
    for (const auto& e : edges_) {
      if (e.row >= n_rows_ || e.col >= n_cols_)
        throw std::out_of_range("edge (" + std::to_string(e.row) + ", " + std::to_string(e.col) +
                                ") outside " + std::to_string(n_rows_) + " x " + std::to_string(n_cols_));
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    build_adjacency();
  }

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return n_cols_; }
  std::size_t n_edges() const { return edges_.size(); }
  std::span<const Edge> edges() const { return edges_; }

  // Sorted column neighbours of a row; the k-th entry is edge id
  // row_edge_begin(i) + k.
  std::span<const std::size_t> row_neighbors(std::size_t i) const {
    return {row_adj_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
  }
  std::size_t row_edge_begin(std::size_t i) const { return row_offsets_[i]; }

  // Sorted row neighbours of a column, with the matching edge ids.
  std::span<const std::size_t> col_neighbors(std::size_t j) const {
    return {col_adj_.data() + col_offsets_[j], col_offsets_[j + 1] - col_offsets_[j]};
  }
  std::span<const std::size_t> col_edge_ids(std::size_t j) const {
    return {col_edge_.data() + col_offsets_[j], col_offsets_[j + 1] - col_offsets_[j]};
  }

  std::size_t row_degree(std::size_t i) const { return row_offsets_[i + 1] - row_offsets_[i]; }
  std::size_t col_degree(std::size_t j) const { return col_offsets_[j + 1] - col_offsets_[j]; }

  std::size_t max_degree() const {
    std::size_t best = 0;
    for (std::size_t i = 0; i < n_rows_; ++i) best = std::max(best, row_degree(i));
    for (std::size_t j = 0; j < n_cols_; ++j) best = std::max(best, col_degree(j));
    return best;
  }

  std::size_t min_degree() const {
    if (n_rows_ + n_cols_ == 0) return 0;
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i < n_rows_; ++i) best = std::min(best, row_degree(i));
    for (std::size_t j = 0; j < n_cols_; ++j) best = std::min(best, col_degree(j));
    return best;
  }

  // Edge id of (i, j), or n_edges() when absent.
  std::size_t find_edge(std::size_t i, std::size_t j) const {
    const auto nbrs = row_neighbors(i);
    const auto it = std::lower_bound(nbrs.begin(), nbrs.end(), j);
    if (it == nbrs.end() || *it != j) return n_edges();
    return row_offsets_[i] + static_cast<std::size_t>(it - nbrs.begin());
  }

  bool has_edge(std::size_t i, std::size_t j) const { return find_edge(i, j) != n_edges(); }

  // Joint vertex numbering: rows are [0, n_rows), columns follow.
  std::size_t n_vertices() const { return n_rows_ + n_cols_; }

  template <typename Visit>
  void for_each_neighbor(std::size_t v, Visit&& visit) const {
    if (v < n_rows_) {
      for (auto j : row_neighbors(v)) visit(n_rows_ + j);
    } else {
      for (auto i : col_neighbors(v - n_rows_)) visit(i);
    }
  }

  bool is_connected() const {
    return detail::all_connected(n_vertices(), [this](std::size_t v, auto&& visit) { for_each_neighbor(v, visit); });
  }

  // Exact diameter by BFS from every vertex. Throws std::invalid_argument on
  // a disconnected graph.
  std::size_t diameter() const {
    return detail::exact_diameter(n_vertices(), [this](std::size_t v, auto&& visit) { for_each_neighbor(v, visit); });
  }

  friend bool operator==(const BipartiteGraph& a, const BipartiteGraph& b) {
    return a.n_rows_ == b.n_rows_ && a.n_cols_ == b.n_cols_ && a.edges_ == b.edges_;
  }

 private:
  void build_adjacency() {
    row_offsets_.assign(n_rows_ + 1, 0);
    col_offsets_.assign(n_cols_ + 1, 0);
    for (const auto& e : edges_) {
      ++row_offsets_[e.row + 1];
      ++col_offsets_[e.col + 1];
    }
    for (std::size_t i = 0; i < n_rows_; ++i) row_offsets_[i + 1] += row_offsets_[i];
    for (std::size_t j = 0; j < n_cols_; ++j) col_offsets_[j + 1] += col_offsets_[j];

    row_adj_.resize(edges_.size());
    col_adj_.resize(edges_.size());
    col_edge_.resize(edges_.size());
    std::vector<std::size_t> fill(col_offsets_.begin(), col_offsets_.end() - 1);
    for (std::size_t id = 0; id < edges_.size(); ++id) {
      const auto& e = edges_[id];
      row_adj_[id] = e.col;  // edges are row-major sorted
      const auto slot = fill[e.col]++;
      col_adj_[slot] = e.row;
      col_edge_[slot] = id;
    }
  }

  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> col_offsets_{0};
  std::vector<std::size_t> row_adj_;
  std::vector<std::size_t> col_adj_;
  std::vector<std::size_t> col_edge_;
};

inline BipartiteGraph complete_bipartite(std::size_t n_rows, std::size_t n_cols) {
  std::vector<Edge> edges;
  edges.reserve(n_rows * n_cols);
  for (std::size_t i = 0; i < n_rows; ++i)
    for (std::size_t j = 0; j < n_cols; ++j) edges.push_back({i, j});
  return {n_rows, n_cols, std::move(edges)};
}

namespace detail {

inline bool row_has_collision(const std::vector<std::vector<std::size_t>>& perms, std::size_t upto,
                              std::size_t row, std::size_t col) {
  for (std::size_t m = 0; m < upto; ++m)
    if (perms[m][row] == col) return true;
  return false;
}

// Simple k-regular bipartite edge set as the union of k uniformly random
// perfect matchings. Any parallel edge triggers a wholesale redraw. If that
// keeps failing (large k) the last draw is repaired by random transpositions
// inside each matching, which leaves the result simple and k-regular but no
// longer exactly uniform.
inline std::vector<Edge> random_matching_union(std::size_t n, std::size_t k, Rng& rng) {
  constexpr int kWholesaleAttempts = 2000;
  std::vector<std::vector<std::size_t>> perms(k, std::vector<std::size_t>(n));
  std::vector<std::size_t> cols(k);

  auto draw = [&] {
    for (auto& p : perms) {
      for (std::size_t i = 0; i < n; ++i) p[i] = i;
      rng.shuffle(p.begin(), p.end());
    }
  };
  auto simple = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t m = 0; m < k; ++m) cols[m] = perms[m][i];
      std::sort(cols.begin(), cols.end());
      if (std::adjacent_find(cols.begin(), cols.end()) != cols.end()) return false;
    }
    return true;
  };

  bool ok = false;
  for (int attempt = 0; attempt < kWholesaleAttempts && !ok; ++attempt) {
    draw();
    ok = simple();
  }
  if (!ok) {
    for (std::size_t m = 1; m < k; ++m) {
      auto& p = perms[m];
      std::size_t budget = 1000 * n * n;
      for (std::size_t i = 0; i < n; ++i) {
        while (row_has_collision(perms, m, i, p[i])) {
          if (budget-- == 0) throw std::runtime_error("regular bipartite generator: repair did not terminate");
          const auto other = static_cast<std::size_t>(rng.below(n));
          if (other == i) continue;
          if (!row_has_collision(perms, m, i, p[other]) && !row_has_collision(perms, m, other, p[i]))
            std::swap(p[i], p[other]);
        }
      }
    }
  }

  std::vector<Edge> edges;
  edges.reserve(n * k);
  for (const auto& p : perms)
    for (std::size_t i = 0; i < n; ++i) edges.push_back({i, p[i]});
  return edges;
}

}  // namespace detail

// Simple d-regular bipartite graph on n + n vertices, deterministic in seed.
// For d > n/2 the (n - d)-regular complement is drawn instead.
inline BipartiteGraph gen_random_regular_bipartite(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (d < 1 || d > n)
    throw std::invalid_argument("regular bipartite graph needs 1 <= d <= n (got n=" + std::to_string(n) +
                                ", d=" + std::to_string(d) + ")");
  if (d == n) return complete_bipartite(n, n);
  Rng rng(seed);
  const bool complement = 2 * d > n;
  auto edges = detail::random_matching_union(n, complement ? n - d : d, rng);
  if (!complement) return {n, n, std::move(edges)};

  std::vector<char> taken(n * n, 0);
  for (const auto& e : edges) taken[e.row * n + e.col] = 1;
  std::vector<Edge> rest;
  rest.reserve(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (!taken[i * n + j]) rest.push_back({i, j});
  return {n, n, std::move(rest)};
}

// Erdős–Rényi bipartite edge set: each of the n² pairs independently with
// probability c/n, visited in row-major order.
inline std::vector<Edge> gen_er_edges(std::size_t n, double c, std::uint64_t seed) {
  if (!(c >= 0.0) || c > static_cast<double>(n))
    throw std::invalid_argument("ER expected degree must lie in [0, n]");
  std::vector<Edge> edges;
  if (n == 0) return edges;
  const double p = c / static_cast<double>(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (rng.bernoulli(p)) edges.push_back({i, j});
  return edges;
}

inline BipartiteGraph graph_union(const BipartiteGraph& g, std::span<const Edge> extra) {
  std::vector<Edge> edges(g.edges().begin(), g.edges().end());
  edges.insert(edges.end(), extra.begin(), extra.end());
  return {g.n_rows(), g.n_cols(), std::move(edges)};
}

// Graph on the directed edges of G. Vertex e in [0, |E|) is the row->col
// edge (i, j) of edge id e; vertex |E| + e is the reverse col->row edge
// (j, i). A row->col vertex (i, j) and a col->row vertex (k, l) are adjacent
// iff j == k or l == i; there are no edges inside either part.
class DualGraph {
 public:
  explicit DualGraph(const BipartiteGraph& g) : n_base_edges_(g.n_edges()), adj_(2 * g.n_edges()) {
    const auto edges = g.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto [i, j] = edges[e];
      auto& nbrs = adj_[e];
      for (auto id : g.col_edge_ids(j)) nbrs.push_back(n_base_edges_ + id);  // (j, l): k == j
      for (std::size_t k = 0; k < g.row_degree(i); ++k)
        nbrs.push_back(n_base_edges_ + g.row_edge_begin(i) + k);  // (k, i): l == i
      std::sort(nbrs.begin(), nbrs.end());
      nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
      for (auto w : nbrs) adj_[w].push_back(e);
    }
    for (std::size_t v = n_base_edges_; v < adj_.size(); ++v) std::sort(adj_[v].begin(), adj_[v].end());
  }

  std::size_t n_vertices() const { return adj_.size(); }
  std::size_t n_row_part() const { return n_base_edges_; }
  bool is_row_to_col(std::size_t v) const { return v < n_base_edges_; }
  std::size_t base_edge(std::size_t v) const { return v < n_base_edges_ ? v : v - n_base_edges_; }
  std::span<const std::size_t> neighbors(std::size_t v) const { return adj_[v]; }

  bool adjacent(std::size_t a, std::size_t b) const {
    const auto& nbrs = adj_[a];
    return std::binary_search(nbrs.begin(), nbrs.end(), b);
  }

  bool is_connected() const {
    return detail::all_connected(n_vertices(), [this](std::size_t v, auto&& visit) {
      for (auto w : adj_[v]) visit(w);
    });
  }

  std::size_t diameter() const {
    return detail::exact_diameter(n_vertices(), [this](std::size_t v, auto&& visit) {
      for (auto w : adj_[v]) visit(w);
    });
  }

 private:
  std::size_t n_base_edges_;
  std::vector<std::vector<std::size_t>> adj_;
};

inline DualGraph build_dual_graph(const BipartiteGraph& g) { return DualGraph(g); }

}  // namespace altmin
