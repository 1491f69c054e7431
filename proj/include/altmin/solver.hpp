#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "altmin/errors.hpp"
#include "altmin/instance.hpp"
#include "altmin/least_squares.hpp"
#include "altmin/metrics.hpp"
#include "altmin/state.hpp"

namespace altmin {

// One local least-squares term: the neighbour vector and its observed value.
struct LsTarget {
  Eigen::VectorXd y;
  double value = 0.0;
};

namespace detail {

inline Eigen::VectorXd solve_targets(std::span<const LsTarget> targets) {
  NormalEquations eq(targets.front().y.size());
  for (const auto& t : targets) {
    if (t.y.size() != eq.rank()) throw std::invalid_argument("targets have inconsistent rank");
    eq.add(t.y, t.value);
  }
  return eq.solve();
}

}  // namespace detail

// argmin_x sum_k (x^T y_k - M_k)^2 over one vertex's neighbours.
inline Eigen::VectorXd vls_vertex_solve(std::span<const LsTarget> targets) {
  if (targets.empty()) throw std::invalid_argument("vls_vertex_solve: no targets");
  return detail::solve_targets(targets);
}

// Same least-squares contract; `targets` is the neighbour set with the
// message's destination already removed, so an empty list means the source
// vertex has degree 1.
inline Eigen::VectorXd els_edge_solve(std::span<const LsTarget> targets) {
  if (targets.empty()) throw StructuralError("els_edge_solve: empty excluded-neighbour sum (source vertex has degree 1)");
  return detail::solve_targets(targets);
}

// In-place VLS iteration: every x_i from y_t, then every y_j from x_{t+1}.
// Degree-0 vertices keep their value.
inline void vls_step(FactorState& s, const ObservedView& obs) {
  const auto& g = *obs.graph;
  NormalEquations eq(obs.rank);
  for (std::size_t i = 0; i < g.n_rows(); ++i) {
    const auto nbrs = g.row_neighbors(i);
    if (nbrs.empty()) continue;
    eq.reset();
    const auto base = g.row_edge_begin(i);
    for (std::size_t k = 0; k < nbrs.size(); ++k)
      eq.add(s.y.row(static_cast<Eigen::Index>(nbrs[k])), obs.values[base + k]);
    try {
      s.x.row(static_cast<Eigen::Index>(i)) = eq.solve().transpose();
    } catch (const SolveError& err) {
      throw SolveError("row vertex " + std::to_string(i) + ": " + err.what());
    }
  }
  for (std::size_t j = 0; j < g.n_cols(); ++j) {
    const auto nbrs = g.col_neighbors(j);
    if (nbrs.empty()) continue;
    eq.reset();
    const auto ids = g.col_edge_ids(j);
    for (std::size_t k = 0; k < nbrs.size(); ++k) eq.add(s.x.row(static_cast<Eigen::Index>(nbrs[k])), obs.values[ids[k]]);
    try {
      s.y.row(static_cast<Eigen::Index>(j)) = eq.solve().transpose();
    } catch (const SolveError& err) {
      throw SolveError("column vertex " + std::to_string(j) + ": " + err.what());
    }
  }
  ++s.iteration;
}

inline FactorState vls_iterate(FactorState s, const ObservedView& obs) {
  vls_step(s, obs);
  return s;
}

// Throws StructuralError naming the first vertex of degree < 2 (its ELS
// update is an empty sum). Returns how many vertices fall below the r + 1
// degree recommended for rank r.
inline std::size_t check_els_structure(const BipartiteGraph& g, Eigen::Index rank) {
  auto fail = [](const std::string& side, std::size_t v, std::size_t deg, const std::string& edge) {
    throw StructuralError("ELS needs every vertex to have degree >= 2; " + side + " vertex " + std::to_string(v) +
                          " has degree " + std::to_string(deg) + edge);
  };
  std::size_t below = 0;
  const auto want = static_cast<std::size_t>(rank) + 1;
  for (std::size_t i = 0; i < g.n_rows(); ++i) {
    const auto d = g.row_degree(i);
    if (d < 2) fail("row", i, d, d == 1 ? " (edge " + std::to_string(i) + " -> " + std::to_string(g.row_neighbors(i)[0]) + ")" : "");
    if (d < want) ++below;
  }
  for (std::size_t j = 0; j < g.n_cols(); ++j) {
    const auto d = g.col_degree(j);
    if (d < 2) fail("column", j, d, d == 1 ? " (edge " + std::to_string(j) + " -> " + std::to_string(g.col_neighbors(j)[0]) + ")" : "");
    if (d < want) ++below;
  }
  return below;
}

// In-place ELS iteration. Messages x_{i->j} are refreshed from the incoming
// y_{k->i}, k != j; then y_{j->i} from the new x_{k->j}, k != i.
//
// The residual of neighbour k is taken against M_ik (the closed-form update),
// not M_ij as a literal reading of the argmin form would suggest; only the
// former makes the ground truth a fixed point.
inline void els_step(MessageState& s, const ObservedView& obs) {
  const auto& g = *obs.graph;
  NormalEquations eq(obs.rank);
  for (std::size_t i = 0; i < g.n_rows(); ++i) {
    const auto deg = g.row_degree(i);
    const auto base = g.row_edge_begin(i);
    if (deg == 1)
      throw StructuralError("row vertex " + std::to_string(i) + " has degree 1: message " + std::to_string(i) + " -> " +
                            std::to_string(g.row_neighbors(i)[0]) + " has no source terms");
    for (std::size_t out = 0; out < deg; ++out) {
      eq.reset();
      for (std::size_t k = 0; k < deg; ++k) {
        if (k == out) continue;
        eq.add(s.y_msgs.row(static_cast<Eigen::Index>(base + k)), obs.values[base + k]);
      }
      try {
        s.x_msgs.row(static_cast<Eigen::Index>(base + out)) = eq.solve().transpose();
      } catch (const SolveError& err) {
        throw SolveError("message from row vertex " + std::to_string(i) + ": " + err.what());
      }
    }
  }
  for (std::size_t j = 0; j < g.n_cols(); ++j) {
    const auto ids = g.col_edge_ids(j);
    const auto deg = ids.size();
    if (deg == 1)
      throw StructuralError("column vertex " + std::to_string(j) + " has degree 1: message " + std::to_string(j) +
                            " -> " + std::to_string(g.col_neighbors(j)[0]) + " has no source terms");
    for (std::size_t out = 0; out < deg; ++out) {
      eq.reset();
      for (std::size_t k = 0; k < deg; ++k) {
        if (k == out) continue;
        eq.add(s.x_msgs.row(static_cast<Eigen::Index>(ids[k])), obs.values[ids[k]]);
      }
      try {
        s.y_msgs.row(static_cast<Eigen::Index>(ids[out])) = eq.solve().transpose();
      } catch (const SolveError& err) {
        throw SolveError("message from column vertex " + std::to_string(j) + ": " + err.what());
      }
    }
  }
  ++s.iteration;
}

inline MessageState els_iterate(MessageState s, const ObservedView& obs) {
  els_step(s, obs);
  return s;
}

// Vertex estimates as the mean of each vertex's outgoing messages.
inline FactorState els_collapse(const MessageState& s, const BipartiteGraph& g) {
  FactorState out;
  const auto r = s.rank();
  out.x = Factors::Zero(static_cast<Eigen::Index>(g.n_rows()), r);
  out.y = Factors::Zero(static_cast<Eigen::Index>(g.n_cols()), r);
  for (std::size_t i = 0; i < g.n_rows(); ++i) {
    const auto deg = g.row_degree(i);
    if (deg == 0) throw StructuralError("els_collapse: row vertex " + std::to_string(i) + " has degree 0");
    const auto base = static_cast<Eigen::Index>(g.row_edge_begin(i));
    out.x.row(static_cast<Eigen::Index>(i)) =
        s.x_msgs.middleRows(base, static_cast<Eigen::Index>(deg)).colwise().sum() / static_cast<double>(deg);
  }
  for (std::size_t j = 0; j < g.n_cols(); ++j) {
    const auto ids = g.col_edge_ids(j);
    if (ids.empty()) throw StructuralError("els_collapse: column vertex " + std::to_string(j) + " has degree 0");
    auto row = out.y.row(static_cast<Eigen::Index>(j));
    for (auto id : ids) row += s.y_msgs.row(static_cast<Eigen::Index>(id));
    row /= static_cast<double>(ids.size());
  }
  out.iteration = s.iteration;
  return out;
}

enum class Algorithm { VLS, ELS };
enum class Status { Running, Converged, Diverged, IterationCap };

inline std::string_view to_string(Algorithm a) { return a == Algorithm::VLS ? "vls" : "els"; }

inline std::string_view to_string(Status s) {
  switch (s) {
    case Status::Running: return "running";
    case Status::Converged: return "converged";
    case Status::Diverged: return "diverged";
    case Status::IterationCap: return "iteration-cap";
  }
  return "unknown";
}

struct SolveConfig {
  Algorithm algorithm = Algorithm::VLS;
  // 0 evaluates the initial state only.
  std::size_t max_iterations = 500;
  double rms_tolerance = 1e-3;
  double divergence_cap = 1e6;
  std::uint64_t seed = 0;
  std::size_t record_every = 1;

  void validate() const {
    if (!(rms_tolerance > 0.0)) throw std::invalid_argument("rms_tolerance must be positive");
    if (!(divergence_cap > rms_tolerance)) throw std::invalid_argument("divergence_cap must exceed rms_tolerance");
    if (record_every < 1) throw std::invalid_argument("record_every must be at least 1");
  }
};

struct TracePoint {
  std::size_t iteration = 0;
  double rms = 0.0;
  double objective = 0.0;
  double seconds = 0.0;  // wall time of the iteration that produced this point
};

struct Trace {
  std::vector<TracePoint> points;
  Status status = Status::Running;
  // Iteration at which the run stopped.
  std::size_t final_iteration = 0;

  // First recorded iteration with rms below `threshold`, if any.
  std::optional<std::size_t> first_below(double threshold) const {
    for (const auto& p : points)
      if (p.rms < threshold) return p.iteration;
    return std::nullopt;
  }
};

struct RunResult {
  FactorState final_state;
  Trace trace;
};

// Maps the current vertex estimates to the completion RMS. Solvers never see
// the ground truth directly.
using RmsMonitor = std::function<double(const FactorState&)>;

namespace detail {

inline Status classify(double rms, const FactorState& s, const SolveConfig& cfg) {
  if (!std::isfinite(rms) || !s.x.allFinite() || !s.y.allFinite()) return Status::Diverged;
  if (rms > cfg.divergence_cap) return Status::Diverged;
  if (rms < cfg.rms_tolerance) return Status::Converged;
  return Status::Running;
}

// Shared stopping loop. `step` advances the native state; `estimate` returns
// the current vertex estimates.
template <typename Step, typename Estimate>
RunResult drive(const ObservedView& obs, const SolveConfig& cfg, const RmsMonitor& monitor, Step&& step,
                Estimate&& estimate) {
  cfg.validate();
  using Clock = std::chrono::steady_clock;
  RunResult result;
  auto& trace = result.trace;

  auto evaluate = [&](std::size_t t, double seconds, bool force) {
    FactorState est = estimate();
    const double r = monitor(est);
    const double obj = objective(est.x, est.y, obs);
    const Status st = classify(r, est, cfg);
    if (force || st != Status::Running || t % cfg.record_every == 0 || t == cfg.max_iterations)
      trace.points.push_back({t, r, obj, seconds});
    result.final_state = std::move(est);
    return st;
  };

  std::size_t t = 0;
  Status status = evaluate(0, 0.0, true);
  while (status == Status::Running && t < cfg.max_iterations) {
    const auto start = Clock::now();
    step();
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    ++t;
    status = evaluate(t, seconds, false);
  }
  trace.status = status == Status::Running ? Status::IterationCap : status;
  trace.final_iteration = t;
  result.final_state.iteration = t;
  return result;
}

}  // namespace detail

// Runs VLS until rms < tolerance (converged), rms > cap or a non-finite value
// (diverged), or the iteration cap.
inline RunResult run_vls(const ObservedView& obs, FactorState init, const SolveConfig& cfg, const RmsMonitor& monitor) {
  FactorState state = std::move(init);
  return detail::drive(
      obs, cfg, monitor, [&] { vls_step(state, obs); }, [&] { return state; });
}

// ELS counterpart; rms is measured on the collapsed vertex estimates.
inline RunResult run_els(const ObservedView& obs, MessageState init, const SolveConfig& cfg, const RmsMonitor& monitor) {
  check_els_structure(*obs.graph, obs.rank);
  MessageState state = std::move(init);
  return detail::drive(
      obs, cfg, monitor, [&] { els_step(state, obs); }, [&] { return els_collapse(state, *obs.graph); });
}

inline RmsMonitor rms_monitor(const Instance& inst) {
  return [oracle = RmsOracle(inst)](const FactorState& s) { return oracle(s.x, s.y); };
}

inline RunResult run(const Instance& inst, FactorState init, const SolveConfig& cfg) {
  if (cfg.algorithm != Algorithm::VLS) throw std::invalid_argument("a factor-state initialisation needs algorithm VLS");
  return run_vls(inst.view(), std::move(init), cfg, rms_monitor(inst));
}

inline RunResult run(const Instance& inst, MessageState init, const SolveConfig& cfg) {
  if (cfg.algorithm != Algorithm::ELS) throw std::invalid_argument("a message-state initialisation needs algorithm ELS");
  return run_els(inst.view(), std::move(init), cfg, rms_monitor(inst));
}

}  // namespace altmin
