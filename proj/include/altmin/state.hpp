#pragma once

#include <cstddef>

#include <Eigen/Core>

#include "altmin/graph.hpp"

namespace altmin {

// One length-r vector per row, stored row-major so each vertex vector is
// contiguous.
using Factors = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// VLS iterate: x_i per row vertex, y_j per column vertex.
struct FactorState {
  Factors x;
  Factors y;
  std::size_t iteration = 0;

  Eigen::Index rank() const { return x.cols(); }
};

// ELS iterate. Row e of x_msgs is the row->col message x_{i->j} on edge id
// e = (i, j); row e of y_msgs is the reverse message y_{j->i}.
struct MessageState {
  Factors x_msgs;
  Factors y_msgs;
  std::size_t iteration = 0;

  Eigen::Index rank() const { return x_msgs.cols(); }
};

// Every message leaving a vertex starts at that vertex's value.
inline MessageState broadcast_to_messages(const FactorState& s, const BipartiteGraph& g) {
  MessageState m;
  m.x_msgs.resize(static_cast<Eigen::Index>(g.n_edges()), s.rank());
  m.y_msgs.resize(static_cast<Eigen::Index>(g.n_edges()), s.rank());
  const auto edges = g.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto id = static_cast<Eigen::Index>(e);
    m.x_msgs.row(id) = s.x.row(static_cast<Eigen::Index>(edges[e].row));
    m.y_msgs.row(id) = s.y.row(static_cast<Eigen::Index>(edges[e].col));
  }
  m.iteration = s.iteration;
  return m;
}

}  // namespace altmin
