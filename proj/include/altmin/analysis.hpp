#pragma once

// Oracle-assisted diagnostics for rank-1 runs. With u = x / alpha and
// v = y / beta, one VLS iteration is u_{t+1} = P_t u_t for a row-stochastic
// P_t supported on the distance-two row adjacency; these helpers build P_t
// explicitly and check the properties the convergence argument relies on.
//
// P_t maps u_t to u_{t+1} only when y_t is the column update of x_t, which
// holds for every VLS/ELS iterate after the first one. The initial state's y
// is arbitrary, so consistency and envelope checks start at t = 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "altmin/instance.hpp"
#include "altmin/metrics.hpp"
#include "altmin/solver.hpp"
#include "altmin/state.hpp"

namespace altmin {

// Dense extraction is a diagnostics-only cost.
inline constexpr std::size_t kMaxDenseTransitionSize = 20000;

struct RatioVectors {
  Eigen::VectorXd u;
  Eigen::VectorXd v;
};

namespace detail {

inline void require_rank1(const Instance& inst) {
  if (inst.rank != 1) throw std::invalid_argument("ratio diagnostics are defined for rank 1 only");
}

inline double vec_spread(const Eigen::VectorXd& w) { return w.size() ? w.maxCoeff() - w.minCoeff() : 0.0; }

}  // namespace detail

inline RatioVectors ratio_vectors(const FactorState& s, const Instance& inst) {
  detail::require_rank1(inst);
  return {s.x.col(0).cwiseQuotient(inst.alpha.col(0)), s.y.col(0).cwiseQuotient(inst.beta.col(0))};
}

// Per directed edge: u_{i->j} = x_{i->j} / alpha_i, v_{j->i} = y_{j->i} / beta_j,
// both indexed by edge id.
inline RatioVectors ratio_vectors(const MessageState& s, const Instance& inst) {
  detail::require_rank1(inst);
  const auto edges = inst.graph.edges();
  RatioVectors r{Eigen::VectorXd(static_cast<Eigen::Index>(edges.size())),
                 Eigen::VectorXd(static_cast<Eigen::Index>(edges.size()))};
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto id = static_cast<Eigen::Index>(e);
    r.u(id) = s.x_msgs(id, 0) / inst.alpha(static_cast<Eigen::Index>(edges[e].row), 0);
    r.v(id) = s.y_msgs(id, 0) / inst.beta(static_cast<Eigen::Index>(edges[e].col), 0);
  }
  return r;
}

struct TransitionMatrix {
  Eigen::MatrixXd p;

  double row_sum_error() const {
    if (p.rows() == 0) return 0.0;
    return (p.rowwise().sum().array() - 1.0).abs().maxCoeff();
  }

  double min_nonzero() const {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index j = 0; j < p.cols(); ++j)
        if (p(i, j) != 0.0) best = std::min(best, p(i, j));
    return best;
  }

  bool has_negative() const { return p.size() && p.minCoeff() < 0.0; }
};

// P_t[i1, i2] = sum_{j ~ i1, j ~ i2} (y_j^2 / sum_{k~i1} y_k^2) * (alpha_i2 x_i2 / sum_{k~j} alpha_k x_k).
//
// The second factor's denominator runs over the column's neighbours k; that
// is the only indexing under which 1/v_j is the weighted mean of u.
inline TransitionMatrix extract_transition_matrix(const FactorState& s, const Instance& inst) {
  detail::require_rank1(inst);
  const auto& g = inst.graph;
  if (g.n_rows() > kMaxDenseTransitionSize) throw std::invalid_argument("transition matrix too large to materialise");
  if (!(s.x.minCoeff() > 0.0) || !(s.y.minCoeff() > 0.0))
    throw std::invalid_argument("transition matrix needs strictly positive iterates");
  const auto& x = s.x;
  const auto& y = s.y;
  const auto& alpha = inst.alpha;

  Eigen::VectorXd col_mass(static_cast<Eigen::Index>(g.n_cols()));
  for (std::size_t j = 0; j < g.n_cols(); ++j) {
    double m = 0.0;
    for (auto k : g.col_neighbors(j)) m += alpha(static_cast<Eigen::Index>(k), 0) * x(static_cast<Eigen::Index>(k), 0);
    col_mass(static_cast<Eigen::Index>(j)) = m;
  }

  const auto n = static_cast<Eigen::Index>(g.n_rows());
  TransitionMatrix t{Eigen::MatrixXd::Zero(n, n)};
  for (std::size_t i1 = 0; i1 < g.n_rows(); ++i1) {
    double row_mass = 0.0;
    for (auto k : g.row_neighbors(i1)) row_mass += y(static_cast<Eigen::Index>(k), 0) * y(static_cast<Eigen::Index>(k), 0);
    for (auto j : g.row_neighbors(i1)) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double w = y(jj, 0) * y(jj, 0) / row_mass;
      for (auto i2 : g.col_neighbors(j)) {
        const auto ii = static_cast<Eigen::Index>(i2);
        t.p(static_cast<Eigen::Index>(i1), ii) += w * alpha(ii, 0) * x(ii, 0) / col_mass(jj);
      }
    }
  }
  return t;
}

// ELS analogue on the row->col messages (indexed by edge id):
// P[(i,j), (l,k)] = sum over k ~ i, k != j and l ~ k, l != i of
//   (y_{k->i}^2 / sum_{m~i, m!=j} y_{m->i}^2) * (alpha_l x_{l->k} / sum_{m~k, m!=i} alpha_m x_{m->k}).
inline TransitionMatrix extract_transition_matrix(const MessageState& s, const Instance& inst) {
  detail::require_rank1(inst);
  const auto& g = inst.graph;
  const auto m = g.n_edges();
  if (m > kMaxDenseTransitionSize) throw std::invalid_argument("transition matrix too large to materialise");
  if (!(s.x_msgs.minCoeff() > 0.0) || !(s.y_msgs.minCoeff() > 0.0))
    throw std::invalid_argument("transition matrix needs strictly positive iterates");
  const auto edges = g.edges();
  const auto& alpha = inst.alpha;
  auto ax = [&](std::size_t edge) {
    return alpha(static_cast<Eigen::Index>(edges[edge].row), 0) * s.x_msgs(static_cast<Eigen::Index>(edge), 0);
  };
  auto ysq = [&](std::size_t edge) {
    const double v = s.y_msgs(static_cast<Eigen::Index>(edge), 0);
    return v * v;
  };

  // Excluded sums are accumulated directly rather than as total minus one
  // term, which would cancel badly when a single term dominates.
  TransitionMatrix t{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m))};
  for (std::size_t i = 0; i < g.n_rows(); ++i) {
    const auto deg = g.row_degree(i);
    const auto base = g.row_edge_begin(i);
    for (std::size_t out = 0; out < deg; ++out) {
      const auto e = static_cast<Eigen::Index>(base + out);
      double excl = 0.0;
      for (std::size_t k = 0; k < deg; ++k)
        if (k != out) excl += ysq(base + k);
      for (std::size_t k = 0; k < deg; ++k) {
        if (k == out) continue;
        const double w = ysq(base + k) / excl;
        const auto in_edge = base + k;  // edge (i, col)
        const auto ids = g.col_edge_ids(edges[in_edge].col);
        double denom = 0.0;
        for (auto f : ids)
          if (f != in_edge) denom += ax(f);
        for (auto f : ids) {
          if (f == in_edge) continue;
          t.p(e, static_cast<Eigen::Index>(f)) += w * ax(f) / denom;
        }
      }
    }
  }
  return t;
}

struct EntryBoundReport {
  double bound = 0.0;  // b^6 / Delta
  double min_nonzero = 0.0;
  std::size_t violations = 0;
};

inline double entry_lower_bound(double b, std::size_t delta) {
  if (!(b > 0.0 && b < 1.0) || delta == 0) throw std::invalid_argument("entry bound needs b in (0,1) and Delta >= 1");
  return std::pow(b, 6) / static_cast<double>(delta);
}

inline EntryBoundReport verify_entry_lower_bound(const TransitionMatrix& t, double b, std::size_t delta) {
  EntryBoundReport rep;
  rep.bound = entry_lower_bound(b, delta);
  rep.min_nonzero = t.min_nonzero();
  for (Eigen::Index i = 0; i < t.p.size(); ++i) {
    const double v = t.p.data()[i];
    if (v != 0.0 && v < rep.bound) ++rep.violations;
  }
  return rep;
}

struct WindowReport {
  Eigen::MatrixXd q;
  double min_entry = 0.0;
  double bound = 0.0;  // z^d, zero when not requested
  std::size_t bound_violations = 0;
  bool strictly_positive = false;
};

// Q = P_{d-1} ... P_1 P_0 over the first d matrices of `ps`, so that
// Q u_t = u_{t+d}. `bound` is the per-entry floor z^d (pass 0 to skip).
inline WindowReport window_product(std::span<const TransitionMatrix> ps, std::size_t d, double z = 0.0) {
  if (d == 0) throw std::invalid_argument("window length must be at least 1");
  if (ps.size() < d) throw std::invalid_argument("window needs " + std::to_string(d) + " matrices, got " + std::to_string(ps.size()));
  WindowReport rep;
  rep.q = ps[0].p;
  for (std::size_t k = 1; k < d; ++k) rep.q = ps[k].p * rep.q;
  rep.min_entry = rep.q.size() ? rep.q.minCoeff() : 0.0;
  rep.strictly_positive = rep.min_entry > 0.0;
  if (z > 0.0) {
    rep.bound = std::pow(z, static_cast<double>(d));
    rep.bound_violations = static_cast<std::size_t>((rep.q.array() < rep.bound).count());
  }
  return rep;
}

struct SpreadPoint {
  std::size_t t = 0;
  double spread = 0.0;
  double max_u = 0.0;
  double min_u = 0.0;
};

struct ContractionTrace {
  std::vector<SpreadPoint> points;
  std::size_t envelope_violations = 0;
};

// Envelope slack, relative to the magnitude of the envelope itself.
inline constexpr double kEnvelopeTolerance = 1e-12;

namespace detail {

inline bool envelope_ok(const SpreadPoint& prev, const SpreadPoint& next) {
  const double up = kEnvelopeTolerance * std::max(1.0, std::abs(prev.max_u));
  const double down = kEnvelopeTolerance * std::max(1.0, std::abs(prev.min_u));
  return next.max_u <= prev.max_u + up && next.min_u >= prev.min_u - down;
}

inline SpreadPoint spread_point(std::size_t t, const Eigen::VectorXd& u) {
  return {t, detail::vec_spread(u), u.maxCoeff(), u.minCoeff()};
}

}  // namespace detail

// Spread of u over a recorded sequence of VLS states (states[k] at iteration
// states[k].iteration). The envelope check starts from the first state with
// iteration >= 1.
template <typename State>
ContractionTrace contraction_trace(std::span<const State> states, const Instance& inst) {
  ContractionTrace out;
  for (const auto& s : states) {
    const auto rv = ratio_vectors(s, inst);
    auto pt = detail::spread_point(s.iteration, rv.u);
    if (!out.points.empty() && out.points.back().t >= 1 && !detail::envelope_ok(out.points.back(), pt))
      ++out.envelope_violations;
    out.points.push_back(pt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Streaming diagnostics over a whole run.

struct DiagnosticConfig {
  std::size_t max_iterations = 500;
  double rms_tolerance = 1e-6;
  // Entry bound of the hypothesis; 0 means use the instance's b.
  double b = 0.0;
  // Keep the first `keep_matrices` extracted P_t (t = 1, 2, ...).
  std::size_t keep_matrices = 0;
  double row_sum_tolerance = 1e-10;
  double consistency_tolerance = 1e-9;
};

struct DiagnosticRow {
  std::size_t t = 0;
  double spread_u = 0.0;
  double max_u = 0.0;
  double min_u = 0.0;
  // NaN at t = 0, where P_t is not defined.
  double min_nonzero_p = std::numeric_limits<double>::quiet_NaN();
  double row_sum_err = std::numeric_limits<double>::quiet_NaN();
  double consistency_err = std::numeric_limits<double>::quiet_NaN();
  double rms = 0.0;
};

struct DiagnosticReport {
  std::vector<DiagnosticRow> rows;
  std::vector<TransitionMatrix> matrices;
  double b = 0.0;
  std::size_t delta = 0;
  double z = 0.0;
  std::size_t row_sum_violations = 0;
  std::size_t consistency_violations = 0;
  std::size_t box_violations = 0;
  std::size_t entry_bound_violations = 0;
  std::size_t envelope_violations = 0;
  std::size_t negative_entries = 0;
  bool converged = false;
  double final_rms = 0.0;

  std::size_t total_violations() const {
    return row_sum_violations + consistency_violations + box_violations + entry_bound_violations +
           envelope_violations + negative_entries;
  }
};

namespace detail {

inline std::size_t box_violations(const FactorState& s, double lo, double hi) {
  return static_cast<std::size_t>((s.x.array() < lo).count() + (s.x.array() > hi).count() + (s.y.array() < lo).count() +
                                  (s.y.array() > hi).count());
}

inline std::size_t box_violations(const MessageState& s, double lo, double hi) {
  return static_cast<std::size_t>((s.x_msgs.array() < lo).count() + (s.x_msgs.array() > hi).count() +
                                  (s.y_msgs.array() < lo).count() + (s.y_msgs.array() > hi).count());
}

inline void advance(FactorState& s, const Instance& inst) { vls_step(s, inst.view()); }
inline void advance(MessageState& s, const Instance& inst) { els_step(s, inst.view()); }
inline FactorState estimates(const FactorState& s, const Instance&) { return s; }
inline FactorState estimates(const MessageState& s, const Instance& inst) { return els_collapse(s, inst.graph); }

}  // namespace detail

// Runs VLS (FactorState) or ELS (MessageState) from `init`, extracting P_t at
// every iteration t >= 1 and checking: row sums, u_{t+1} = P_t u_t, iterates
// inside [b^3, 1/b^3], non-zero entries >= b^6/Delta, and the monotone
// max/min envelope of u.
template <typename State>
DiagnosticReport diagnose(const Instance& inst, State state, const DiagnosticConfig& cfg) {
  detail::require_rank1(inst);
  if constexpr (std::is_same_v<State, MessageState>) check_els_structure(inst.graph, 1);
  DiagnosticReport rep;
  rep.b = cfg.b > 0.0 ? cfg.b : inst.b;
  if (!(rep.b > 0.0 && rep.b < 1.0)) throw std::invalid_argument("diagnostics need an entry bound b in (0, 1)");
  rep.delta = inst.graph.max_degree();
  rep.z = entry_lower_bound(rep.b, rep.delta);
  const double lo = std::pow(rep.b, 3);
  const double hi = 1.0 / lo;
  const RmsOracle oracle(inst);

  auto current_rms = [&] {
    const auto est = detail::estimates(state, inst);
    return oracle(est.x, est.y);
  };

  rep.box_violations += detail::box_violations(state, lo, hi);
  Eigen::VectorXd u = ratio_vectors(state, inst).u;
  DiagnosticRow row0;
  const auto sp0 = detail::spread_point(0, u);
  row0.spread_u = sp0.spread;
  row0.max_u = sp0.max_u;
  row0.min_u = sp0.min_u;
  row0.rms = current_rms();
  rep.rows.push_back(row0);
  rep.final_rms = row0.rms;
  rep.converged = row0.rms < cfg.rms_tolerance;

  SpreadPoint prev_pt = sp0;
  TransitionMatrix prev_p;
  Eigen::VectorXd prev_u;
  bool have_prev = false;

  for (std::size_t t = 1; t <= cfg.max_iterations && !rep.converged; ++t) {
    detail::advance(state, inst);
    rep.box_violations += detail::box_violations(state, lo, hi);
    u = ratio_vectors(state, inst).u;
    const auto pt = detail::spread_point(t, u);

    DiagnosticRow row;
    row.t = t;
    row.spread_u = pt.spread;
    row.max_u = pt.max_u;
    row.min_u = pt.min_u;

    if (have_prev) {
      const Eigen::VectorXd predicted = prev_p.p * prev_u;
      const double scale = std::max(u.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
      row.consistency_err = (predicted - u).cwiseAbs().maxCoeff() / scale;
      if (!(row.consistency_err <= cfg.consistency_tolerance)) ++rep.consistency_violations;
      if (!detail::envelope_ok(prev_pt, pt)) ++rep.envelope_violations;
    } else {
      row.consistency_err = std::numeric_limits<double>::quiet_NaN();
    }

    TransitionMatrix p = extract_transition_matrix(state, inst);
    row.row_sum_err = p.row_sum_error();
    if (!(row.row_sum_err <= cfg.row_sum_tolerance)) ++rep.row_sum_violations;
    if (p.has_negative()) ++rep.negative_entries;
    const auto bound = verify_entry_lower_bound(p, rep.b, rep.delta);
    row.min_nonzero_p = bound.min_nonzero;
    rep.entry_bound_violations += bound.violations;

    row.rms = current_rms();
    rep.final_rms = row.rms;
    rep.converged = row.rms < cfg.rms_tolerance;
    rep.rows.push_back(row);

    if (rep.matrices.size() < cfg.keep_matrices) rep.matrices.push_back(p);
    prev_p = std::move(p);
    prev_u = u;
    prev_pt = pt;
    have_prev = true;
  }
  return rep;
}

}  // namespace altmin
