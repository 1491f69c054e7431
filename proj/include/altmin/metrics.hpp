#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>

#include <Eigen/Core>

#include "altmin/instance.hpp"
#include "altmin/state.hpp"

namespace altmin {

namespace detail {

inline void require_factor_shape(const Factors& x, const Factors& y, std::size_t n_rows, std::size_t n_cols,
                                 Eigen::Index rank) {
  if (x.rows() != static_cast<Eigen::Index>(n_rows) || y.rows() != static_cast<Eigen::Index>(n_cols) ||
      x.cols() != rank || y.cols() != rank)
    throw std::invalid_argument("factor dimensions do not match the instance");
}

}  // namespace detail

// Completion error (1/n) * ||M - X Y^T||_F over the full n x n matrix,
// using the ground truth M = alpha beta^T.
inline double rms(const Factors& x, const Factors& y, const Instance& inst) {
  detail::require_factor_shape(x, y, inst.n, inst.n, inst.rank);
  if (inst.n == 0) return 0.0;
  const Eigen::MatrixXd diff = inst.alpha * inst.beta.transpose() - x * y.transpose();
  return diff.norm() / static_cast<double>(inst.n);
}

// Same metric with the dense ground truth computed once; used inside solve
// loops where rms is evaluated every iteration.
class RmsOracle {
 public:
  explicit RmsOracle(const Instance& inst)
      : n_(inst.n), rank_(inst.rank), truth_(inst.alpha * inst.beta.transpose()) {}

  double operator()(const Factors& x, const Factors& y) const {
    detail::require_factor_shape(x, y, n_, n_, rank_);
    if (n_ == 0) return 0.0;
    return (truth_ - x * y.transpose()).norm() / static_cast<double>(n_);
  }

 private:
  std::size_t n_;
  Eigen::Index rank_;
  Eigen::MatrixXd truth_;
};

// Sum of squared residuals over the observed edges only.
inline double objective(const Factors& x, const Factors& y, const ObservedView& obs) {
  const auto& g = *obs.graph;
  detail::require_factor_shape(x, y, g.n_rows(), g.n_cols(), obs.rank);
  const auto edges = g.edges();
  double total = 0.0;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double r = x.row(static_cast<Eigen::Index>(edges[e].row)).dot(y.row(static_cast<Eigen::Index>(edges[e].col))) -
                     obs.values[e];
    total += r * r;
  }
  return total;
}

// 1 - cos^2 of the angle between u and v.
inline double subspace_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("subspace_distance: length mismatch");
  const Eigen::Map<const Eigen::VectorXd> a(u.data(), static_cast<Eigen::Index>(u.size()));
  const Eigen::Map<const Eigen::VectorXd> c(v.data(), static_cast<Eigen::Index>(v.size()));
  const double na = a.norm();
  const double nc = c.norm();
  if (na == 0.0 || nc == 0.0) throw std::invalid_argument("subspace_distance: zero vector");
  const double cosine = a.dot(c) / (na * nc);
  return std::clamp(1.0 - cosine * cosine, 0.0, 1.0);
}

inline double spread(std::span<const double> w) {
  if (w.empty()) throw std::invalid_argument("spread: empty vector");
  const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
  return *hi - *lo;
}

inline std::span<const double> as_span(const Factors& column_vector) {
  return {column_vector.data(), static_cast<std::size_t>(column_vector.size())};
}

struct MetricReport {
  double rms = 0.0;
  double objective = 0.0;
  // Rank-1 only; empty otherwise.
  std::optional<double> subspace_dist_x;
  std::optional<double> subspace_dist_y;
  std::optional<double> spread_u;
  std::optional<double> spread_v;
};

inline MetricReport metric_report(const FactorState& s, const Instance& inst) {
  MetricReport rep;
  rep.rms = rms(s.x, s.y, inst);
  rep.objective = objective(s.x, s.y, inst.view());
  if (inst.rank == 1 && inst.n > 0) {
    rep.subspace_dist_x = subspace_distance(as_span(s.x), as_span(inst.alpha));
    rep.subspace_dist_y = subspace_distance(as_span(s.y), as_span(inst.beta));
    const Eigen::VectorXd u = s.x.col(0).cwiseQuotient(inst.alpha.col(0));
    const Eigen::VectorXd v = s.y.col(0).cwiseQuotient(inst.beta.col(0));
    rep.spread_u = spread({u.data(), static_cast<std::size_t>(u.size())});
    rep.spread_v = spread({v.data(), static_cast<std::size_t>(v.size())});
  }
  return rep;
}

}  // namespace altmin
