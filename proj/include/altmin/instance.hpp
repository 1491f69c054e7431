#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "altmin/errors.hpp"
#include "altmin/graph.hpp"
#include "altmin/random.hpp"
#include "altmin/state.hpp"

namespace altmin {

// What a solver is allowed to see: the pattern and the revealed values,
// values[e] belonging to edge id e.
struct ObservedView {
  const BipartiteGraph* graph = nullptr;
  std::span<const double> values;
  Eigen::Index rank = 1;
};

// Ground truth M = alpha * beta^T on an n x n grid, revealed on graph edges.
// `b` records the entry bound b <= alpha_i, beta_j <= 1/b for positive
// rank-1 instances and is 0 when no such bound applies.
struct Instance {
  std::size_t n = 0;
  Eigen::Index rank = 1;
  Factors alpha;
  Factors beta;
  BipartiteGraph graph;
  std::vector<double> observed;
  double b = 0.0;
  std::uint64_t seed = 0;

  ObservedView view() const { return {&graph, observed, rank}; }

  double truth(std::size_t i, std::size_t j) const {
    return alpha.row(static_cast<Eigen::Index>(i)).dot(beta.row(static_cast<Eigen::Index>(j)));
  }
};

// Assembles an instance and fills the observed entries from the factors.
inline Instance make_instance(Factors alpha, Factors beta, BipartiteGraph graph, double b, std::uint64_t seed) {
  if (alpha.rows() != beta.rows() || alpha.cols() != beta.cols())
    throw std::invalid_argument("alpha and beta must have identical shape");
  if (alpha.cols() < 1) throw std::invalid_argument("rank must be at least 1");
  const auto n = static_cast<std::size_t>(alpha.rows());
  if (graph.n_rows() != n || graph.n_cols() != n)
    throw std::invalid_argument("graph is " + std::to_string(graph.n_rows()) + " x " +
                                std::to_string(graph.n_cols()) + " but factors have " + std::to_string(n) + " rows");
  Instance inst;
  inst.n = n;
  inst.rank = alpha.cols();
  inst.alpha = std::move(alpha);
  inst.beta = std::move(beta);
  inst.graph = std::move(graph);
  inst.b = b;
  inst.seed = seed;
  inst.observed.reserve(inst.graph.n_edges());
  for (const auto& e : inst.graph.edges()) inst.observed.push_back(inst.truth(e.row, e.col));
  return inst;
}

// Sampling interval used by the rank-1 experiments, intersected with the
// theoretical box [b, 1/b].
struct SamplingBox {
  double lo = 0.01;
  double hi = 0.99;
};

inline Instance gen_rank1_instance(std::size_t n, double b, const BipartiteGraph& graph, std::uint64_t seed,
                                   SamplingBox box = {}) {
  if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("entry bound b must lie in (0, 1)");
  const double lo = std::max(b, box.lo);
  const double hi = std::min(1.0 / b, box.hi);
  if (!(lo <= hi)) throw std::invalid_argument("sampling box does not intersect [b, 1/b]");
  Rng rng(seed);
  const auto rows = static_cast<Eigen::Index>(n);
  Factors alpha(rows, 1), beta(rows, 1);
  for (Eigen::Index i = 0; i < rows; ++i) alpha(i, 0) = rng.uniform(lo, hi);
  for (Eigen::Index j = 0; j < rows; ++j) beta(j, 0) = rng.uniform(lo, hi);
  return make_instance(std::move(alpha), std::move(beta), graph, b, seed);
}

// Rank-1 instance whose row factor is the two-level pattern alpha_i = b for
// the first n/2 rows and 1/b for the rest; beta ~ U[b, 1/b]. Paired with the
// adversarial-split initialisation it realises the large-subspace-distance
// start.
inline Instance gen_split_rank1_instance(std::size_t n, double b, const BipartiteGraph& graph, std::uint64_t seed) {
  if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("entry bound b must lie in (0, 1)");
  Rng rng(seed);
  const auto rows = static_cast<Eigen::Index>(n);
  Factors alpha(rows, 1), beta(rows, 1);
  for (Eigen::Index i = 0; i < rows; ++i) alpha(i, 0) = (static_cast<std::size_t>(i) < n / 2) ? b : 1.0 / b;
  for (Eigen::Index j = 0; j < rows; ++j) beta(j, 0) = rng.uniform(b, 1.0 / b);
  return make_instance(std::move(alpha), std::move(beta), graph, b, seed);
}

// Rank-r instance with every factor entry ~ U[-1, 1].
inline Instance gen_rank_r_instance(std::size_t n, Eigen::Index r, const BipartiteGraph& graph, std::uint64_t seed) {
  if (r < 1) throw std::invalid_argument("rank must be at least 1");
  Rng rng(seed);
  const auto rows = static_cast<Eigen::Index>(n);
  Factors alpha(rows, r), beta(rows, r);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < r; ++k) alpha(i, k) = rng.uniform(-1.0, 1.0);
  for (Eigen::Index j = 0; j < rows; ++j)
    for (Eigen::Index k = 0; k < r; ++k) beta(j, k) = rng.uniform(-1.0, 1.0);
  return make_instance(std::move(alpha), std::move(beta), graph, 0.0, seed);
}

enum class InitMode {
  UniformBox,        // entries ~ U[b, 1/b]
  AdversarialSplit,  // x = 1/b on the first n/2 rows, b after; y ~ U[b, 1/b]
  GroundTruth,       // x = alpha, y = beta
  Custom,            // caller-supplied, validated
  UniformSymmetric,  // entries ~ U[-scale, scale]
};

struct InitSpec {
  InitMode mode = InitMode::UniformBox;
  double b = 0.5;
  double scale = 1.0;
  std::uint64_t seed = 0;
  // Custom mode only: n x r for factor states, |E| x r for message states.
  Factors custom_x;
  Factors custom_y;
};

namespace detail {

inline void require_box(double b) {
  if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("initial box bound b must lie in (0, 1)");
}

inline void fill_uniform(Factors& m, Rng& rng, double lo, double hi) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) m(i, k) = rng.uniform(lo, hi);
}

inline Factors validated_custom(const Factors& m, Eigen::Index rows, Eigen::Index rank, double b, const char* what) {
  if (m.rows() != rows || m.cols() != rank)
    throw std::invalid_argument(std::string("custom ") + what + " has shape " + std::to_string(m.rows()) + " x " +
                                std::to_string(m.cols()) + ", expected " + std::to_string(rows) + " x " +
                                std::to_string(rank));
  if (!m.allFinite()) throw std::invalid_argument(std::string("custom ") + what + " has non-finite entries");
  if (b > 0.0 && b < 1.0 && (m.minCoeff() < b || m.maxCoeff() > 1.0 / b))
    throw std::invalid_argument(std::string("custom ") + what + " has entries outside [b, 1/b]");
  return m;
}

inline double split_value(std::size_t i, std::size_t n, double b) { return i < n / 2 ? 1.0 / b : b; }

}  // namespace detail

// Initial VLS state. Draw order is fixed (all of x, then all of y) so the
// result is reproducible from the seed.
inline FactorState make_factor_init(const Instance& inst, const InitSpec& spec) {
  const auto n = static_cast<Eigen::Index>(inst.n);
  const auto r = inst.rank;
  FactorState s;
  s.x.resize(n, r);
  s.y.resize(n, r);
  Rng rng(spec.seed);
  switch (spec.mode) {
    case InitMode::UniformBox:
      detail::require_box(spec.b);
      detail::fill_uniform(s.x, rng, spec.b, 1.0 / spec.b);
      detail::fill_uniform(s.y, rng, spec.b, 1.0 / spec.b);
      break;
    case InitMode::AdversarialSplit:
      detail::require_box(spec.b);
      if (r != 1) throw std::invalid_argument("adversarial-split initialisation is defined for rank 1 only");
      for (Eigen::Index i = 0; i < n; ++i) s.x(i, 0) = detail::split_value(static_cast<std::size_t>(i), inst.n, spec.b);
      detail::fill_uniform(s.y, rng, spec.b, 1.0 / spec.b);
      break;
    case InitMode::GroundTruth:
      s.x = inst.alpha;
      s.y = inst.beta;
      break;
    case InitMode::Custom:
      s.x = detail::validated_custom(spec.custom_x, n, r, spec.b, "x");
      s.y = detail::validated_custom(spec.custom_y, n, r, spec.b, "y");
      break;
    case InitMode::UniformSymmetric:
      detail::fill_uniform(s.x, rng, -spec.scale, spec.scale);
      detail::fill_uniform(s.y, rng, -spec.scale, spec.scale);
      break;
  }
  return s;
}

// Initial ELS state; every vertex must have at least one edge.
inline MessageState make_message_init(const Instance& inst, const InitSpec& spec) {
  const auto& g = inst.graph;
  if (g.min_degree() < 1) throw StructuralError("message initialisation needs every vertex to have degree >= 1");
  const auto m = static_cast<Eigen::Index>(g.n_edges());
  const auto r = inst.rank;
  MessageState s;
  s.x_msgs.resize(m, r);
  s.y_msgs.resize(m, r);
  Rng rng(spec.seed);
  const auto edges = g.edges();
  switch (spec.mode) {
    case InitMode::UniformBox:
      detail::require_box(spec.b);
      detail::fill_uniform(s.x_msgs, rng, spec.b, 1.0 / spec.b);
      detail::fill_uniform(s.y_msgs, rng, spec.b, 1.0 / spec.b);
      break;
    case InitMode::AdversarialSplit:
      detail::require_box(spec.b);
      if (r != 1) throw std::invalid_argument("adversarial-split initialisation is defined for rank 1 only");
      for (std::size_t e = 0; e < edges.size(); ++e)
        s.x_msgs(static_cast<Eigen::Index>(e), 0) = detail::split_value(edges[e].row, inst.n, spec.b);
      detail::fill_uniform(s.y_msgs, rng, spec.b, 1.0 / spec.b);
      break;
    case InitMode::GroundTruth:
      for (std::size_t e = 0; e < edges.size(); ++e) {
        s.x_msgs.row(static_cast<Eigen::Index>(e)) = inst.alpha.row(static_cast<Eigen::Index>(edges[e].row));
        s.y_msgs.row(static_cast<Eigen::Index>(e)) = inst.beta.row(static_cast<Eigen::Index>(edges[e].col));
      }
      break;
    case InitMode::Custom:
      s.x_msgs = detail::validated_custom(spec.custom_x, m, r, spec.b, "x messages");
      s.y_msgs = detail::validated_custom(spec.custom_y, m, r, spec.b, "y messages");
      break;
    case InitMode::UniformSymmetric:
      detail::fill_uniform(s.x_msgs, rng, -spec.scale, spec.scale);
      detail::fill_uniform(s.y_msgs, rng, -spec.scale, spec.scale);
      break;
  }
  return s;
}

}  // namespace altmin
