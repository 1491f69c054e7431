#pragma once

// Experiment drivers: VLS vs ELS convergence comparison on a shared
// instance, failure-fraction sweeps over the Erdős–Rényi augmentation
// density c, and critical-c estimation.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "altmin/analysis.hpp"
#include "altmin/graph.hpp"
#include "altmin/instance.hpp"
#include "altmin/io.hpp"
#include "altmin/random.hpp"
#include "altmin/solver.hpp"
#include "altmin/svg.hpp"

namespace altmin {

inline Algorithm parse_algorithm(std::string_view s) {
  if (s == "vls" || s == "VLS") return Algorithm::VLS;
  if (s == "els" || s == "ELS") return Algorithm::ELS;
  throw ParseError("unknown algorithm '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Compare

struct CompareRow {
  Algorithm algorithm = Algorithm::VLS;
  std::size_t iteration = 0;
  double normalized = 0.0;
  double rms = 0.0;
};

struct CompareResult {
  RunResult vls;
  RunResult els;
  std::size_t delta = 0;
  // Common denominator of the normalized index: the larger of the two runs'
  // iteration counts.
  std::size_t total_iterations = 1;
  std::vector<CompareRow> rows;

  // Normalized index of the first recorded point with rms < threshold.
  std::optional<double> first_normalized_below(Algorithm a, double threshold) const {
    for (const auto& r : rows)
      if (r.algorithm == a && r.rms < threshold) return r.normalized;
    return std::nullopt;
  }
};

// VLS index t/T; ELS index Delta * t / T, charging an ELS iteration Delta
// times the work of a VLS one.
inline double normalized_index(Algorithm a, std::size_t t, std::size_t total, std::size_t delta) {
  const double base = static_cast<double>(t) / static_cast<double>(total);
  return a == Algorithm::ELS ? static_cast<double>(delta) * base : base;
}

// Both algorithms start from the same point: ELS messages are initialised to
// the VLS vertex values of their source vertex.
inline CompareResult compare(const Instance& inst, const InitSpec& init, SolveConfig cfg) {
  CompareResult out;
  out.delta = inst.graph.max_degree();
  const FactorState start = make_factor_init(inst, init);
  cfg.algorithm = Algorithm::VLS;
  out.vls = run(inst, start, cfg);
  cfg.algorithm = Algorithm::ELS;
  out.els = run(inst, broadcast_to_messages(start, inst.graph), cfg);
  out.total_iterations = std::max<std::size_t>({out.vls.trace.final_iteration, out.els.trace.final_iteration, 1});
  for (const auto* r : {&out.vls, &out.els}) {
    const auto alg = r == &out.vls ? Algorithm::VLS : Algorithm::ELS;
    for (const auto& p : r->trace.points)
      out.rows.push_back({alg, p.iteration, normalized_index(alg, p.iteration, out.total_iterations, out.delta), p.rms});
  }
  return out;
}

inline constexpr std::string_view kCompareHeader = "algorithm,iteration,normalized_index,rms";

inline void write_compare_csv(std::ostream& out, std::span<const CompareRow> rows) {
  out << kCompareHeader << '\n';
  for (const auto& r : rows)
    out << to_string(r.algorithm) << ',' << r.iteration << ',' << format_double(r.normalized) << ','
        << format_double(r.rms) << '\n';
}

inline std::vector<CompareRow> read_compare_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCompareHeader) throw ParseError("compare: bad header");
  std::vector<CompareRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    detail::expect_tokens(f, 4, "compare row");
    rows.push_back({parse_algorithm(f[0]), parse_int<std::size_t>(f[1]), parse_double(f[2]), parse_double(f[3])});
  }
  return rows;
}

inline std::string compare_svg(std::span<const CompareRow> rows) {
  LineChart chart;
  chart.title = "RMS vs normalized iteration index";
  chart.x_label = "normalized iteration index";
  chart.y_label = "RMS";
  chart.log_y = true;
  for (auto a : {Algorithm::VLS, Algorithm::ELS}) {
    Series s;
    s.name = a == Algorithm::VLS ? "VLS" : "ELS";
    for (const auto& r : rows) {
      if (r.algorithm != a) continue;
      s.xs.push_back(r.normalized);
      s.ys.push_back(r.rms);
    }
    chart.series.push_back(std::move(s));
  }
  return render_svg(chart);
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepConfig {
  Eigen::Index rank = 2;
  std::size_t n = 100;
  // 0 selects rank + 1.
  std::size_t planted_degree = 0;
  std::vector<double> c_grid = default_c_grid();
  std::size_t trials = 200;
  double failure_threshold = 1e-3;
  std::size_t iteration_cap = 500;
  double divergence_cap = 1e6;
  std::vector<Algorithm> algorithms{Algorithm::ELS, Algorithm::VLS};
  std::uint64_t master_seed = 0;
  std::size_t workers = 1;

  static std::vector<double> default_c_grid() {
    std::vector<double> g;
    for (int c = 0; c <= 20; ++c) g.push_back(c);
    return g;
  }

  std::size_t degree() const { return planted_degree ? planted_degree : static_cast<std::size_t>(rank) + 1; }

  void validate() const {
    if (rank < 1) throw std::invalid_argument("sweep rank must be at least 1");
    if (c_grid.empty()) throw std::invalid_argument("sweep c grid is empty");
    for (double c : c_grid)
      if (!(c >= 0.0) || c > static_cast<double>(n)) throw std::invalid_argument("sweep c values must lie in [0, n]");
    if (trials < 1) throw std::invalid_argument("sweep needs at least one trial");
    if (algorithms.empty()) throw std::invalid_argument("sweep needs at least one algorithm");
    if (!(failure_threshold > 0.0)) throw std::invalid_argument("failure threshold must be positive");
    if (degree() < 1 || degree() > n) throw std::invalid_argument("planted degree must lie in [1, n]");
    if (workers < 1) throw std::invalid_argument("sweep needs at least one worker");
  }
};

struct TrialOutcome {
  bool failed = true;
  bool diverged = false;
  std::size_t iterations = 0;
};

struct SweepCell {
  Algorithm algorithm = Algorithm::VLS;
  Eigen::Index rank = 1;
  std::size_t n = 0;
  double c = 0.0;
  std::size_t trials = 0;
  std::size_t failures = 0;
  std::size_t diverged = 0;
  double failure_fraction = 0.0;
  double mean_success_iters = std::numeric_limits<double>::quiet_NaN();
  std::vector<TrialOutcome> outcomes;  // empty when read back from CSV
};

struct SweepResult {
  std::vector<SweepCell> cells;

  std::vector<const SweepCell*> cells_for(Algorithm a) const {
    std::vector<const SweepCell*> out;
    for (const auto& c : cells)
      if (c.algorithm == a) out.push_back(&c);
    return out;
  }
};

// One trial: fresh planted regular graph united with ER(c/n) edges, fresh
// rank-r instance with U[-1, 1] factors, fresh U[-1, 1] start. Failure means
// rms never dropped below the threshold within the cap, or diverged.
inline TrialOutcome run_trial(const SweepConfig& cfg, Algorithm alg, double c, std::uint64_t trial_seed) {
  const auto planted = gen_random_regular_bipartite(cfg.n, cfg.degree(), derive_seed(trial_seed, {0}));
  const auto extra = gen_er_edges(cfg.n, c, derive_seed(trial_seed, {1}));
  const auto inst = gen_rank_r_instance(cfg.n, cfg.rank, graph_union(planted, extra), derive_seed(trial_seed, {2}));
  InitSpec init;
  init.mode = InitMode::UniformSymmetric;
  init.seed = derive_seed(trial_seed, {3});

  SolveConfig sc;
  sc.algorithm = alg;
  sc.max_iterations = cfg.iteration_cap;
  if (std::isinf(cfg.failure_threshold)) {
    sc.rms_tolerance = std::numeric_limits<double>::max();
    sc.divergence_cap = std::numeric_limits<double>::infinity();
  } else {
    sc.rms_tolerance = cfg.failure_threshold;
    sc.divergence_cap = std::max(cfg.divergence_cap, 2 * cfg.failure_threshold);
  }
  sc.record_every = std::max<std::size_t>(cfg.iteration_cap, 1);

  const auto result = alg == Algorithm::VLS ? run(inst, make_factor_init(inst, init), sc)
                                            : run(inst, make_message_init(inst, init), sc);
  TrialOutcome o;
  o.failed = result.trace.status != Status::Converged;
  o.diverged = result.trace.status == Status::Diverged;
  o.iterations = result.trace.final_iteration;
  return o;
}

inline std::uint64_t trial_seed(std::uint64_t master, Algorithm alg, std::size_t c_index, std::size_t trial) {
  return derive_seed(master, {static_cast<std::uint64_t>(alg), c_index, trial});
}

// Trials run on a pool of cfg.workers threads. Each trial owns its RNG
// stream, keyed by (master seed, algorithm, c index, trial index), and
// writes into a fixed slot, so results do not depend on scheduling.
inline SweepResult run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const std::size_t n_c = cfg.c_grid.size();
  const std::size_t n_items = cfg.algorithms.size() * n_c * cfg.trials;
  std::vector<TrialOutcome> outcomes(n_items);
  std::vector<std::string> errors(n_items);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t k = next.fetch_add(1); k < n_items; k = next.fetch_add(1)) {
      const std::size_t trial = k % cfg.trials;
      const std::size_t c_index = (k / cfg.trials) % n_c;
      const Algorithm alg = cfg.algorithms[k / (cfg.trials * n_c)];
      try {
        outcomes[k] = run_trial(cfg, alg, cfg.c_grid[c_index], trial_seed(cfg.master_seed, alg, c_index, trial));
      } catch (const std::exception& err) {
        errors[k] = err.what();
      }
    }
  };
  const std::size_t n_threads = std::min(cfg.workers, std::max<std::size_t>(n_items, 1));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error("sweep trial failed: " + e);

  SweepResult res;
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
    for (std::size_t ci = 0; ci < n_c; ++ci) {
      SweepCell cell;
      cell.algorithm = cfg.algorithms[a];
      cell.rank = cfg.rank;
      cell.n = cfg.n;
      cell.c = cfg.c_grid[ci];
      cell.trials = cfg.trials;
      const auto begin = outcomes.begin() + static_cast<std::ptrdiff_t>((a * n_c + ci) * cfg.trials);
      cell.outcomes.assign(begin, begin + static_cast<std::ptrdiff_t>(cfg.trials));
      double iters = 0.0;
      for (const auto& o : cell.outcomes) {
        cell.failures += o.failed;
        cell.diverged += o.diverged;
        if (!o.failed) iters += static_cast<double>(o.iterations);
      }
      cell.failure_fraction = static_cast<double>(cell.failures) / static_cast<double>(cell.trials);
      const auto successes = cell.trials - cell.failures;
      if (successes > 0) cell.mean_success_iters = iters / static_cast<double>(successes);
      res.cells.push_back(std::move(cell));
    }
  }
  return res;
}

inline constexpr std::string_view kSweepHeader =
    "algorithm,r,n,c,trials,failures,diverged,failure_fraction,mean_success_iters";

inline void write_sweep_csv(std::ostream& out, const SweepResult& res) {
  out << kSweepHeader << '\n';
  for (const auto& c : res.cells)
    out << to_string(c.algorithm) << ',' << c.rank << ',' << c.n << ',' << format_double(c.c) << ',' << c.trials << ','
        << c.failures << ',' << c.diverged << ',' << format_double(c.failure_fraction) << ','
        << format_double(c.mean_success_iters) << '\n';
}

inline SweepResult read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSweepHeader) throw ParseError("sweep: bad header");
  SweepResult res;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    detail::expect_tokens(f, 9, "sweep row");
    SweepCell c;
    c.algorithm = parse_algorithm(f[0]);
    c.rank = parse_int<Eigen::Index>(f[1]);
    c.n = parse_int<std::size_t>(f[2]);
    c.c = parse_double(f[3]);
    c.trials = parse_int<std::size_t>(f[4]);
    c.failures = parse_int<std::size_t>(f[5]);
    c.diverged = parse_int<std::size_t>(f[6]);
    c.failure_fraction = parse_double(f[7]);
    c.mean_success_iters = parse_double(f[8]);
    if (c.trials == 0 || c.failures > c.trials || c.diverged > c.failures)
      throw ParseError("sweep: inconsistent counts in row '" + line + "'");
    res.cells.push_back(std::move(c));
  }
  return res;
}

inline std::string sweep_svg(const SweepResult& res) {
  LineChart chart;
  chart.title = "Failure fraction vs c";
  chart.x_label = "c";
  chart.y_label = "failure fraction";
  for (auto a : {Algorithm::ELS, Algorithm::VLS}) {
    const auto cells = res.cells_for(a);
    if (cells.empty()) continue;
    Series s;
    s.name = std::string(a == Algorithm::VLS ? "VLS" : "ELS") + " r=" + std::to_string(cells.front()->rank);
    for (const auto* c : cells) {
      s.xs.push_back(c->c);
      s.ys.push_back(c->failure_fraction);
    }
    chart.series.push_back(std::move(s));
  }
  return render_svg(chart);
}

// ---------------------------------------------------------------------------
// Critical c

// c at which the piecewise-linear failure curve first crosses 1/2, or
// nullopt when it never does.
inline std::optional<double> estimate_threshold(std::span<const double> c, std::span<const double> failure) {
  if (c.size() != failure.size()) throw std::invalid_argument("estimate_threshold: length mismatch");
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (failure[k] == 0.5) return c[k];
    if (k + 1 < c.size()) {
      const double a = failure[k] - 0.5;
      const double b = failure[k + 1] - 0.5;
      if ((a > 0 && b < 0) || (a < 0 && b > 0)) return c[k] + (c[k + 1] - c[k]) * a / (a - b);
    }
  }
  return std::nullopt;
}

inline std::optional<double> estimate_threshold(std::span<const SweepCell* const> cells) {
  std::vector<double> c, f;
  for (const auto* cell : cells) {
    c.push_back(cell->c);
    f.push_back(cell->failure_fraction);
  }
  return estimate_threshold(c, f);
}

struct ThresholdInterval {
  std::optional<double> estimate;
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = std::numeric_limits<double>::quiet_NaN();
  // Share of bootstrap replicates whose curve crossed 1/2.
  double crossing_rate = 0.0;
};

// Percentile bootstrap over trial outcomes: every replicate redraws each
// cell's failures as Binomial(trials, observed fraction), which is the same
// as resampling that cell's per-trial outcomes with replacement.
inline ThresholdInterval bootstrap_threshold(std::span<const SweepCell* const> cells, std::size_t replicates,
                                             std::uint64_t seed, double level = 0.95) {
  ThresholdInterval out;
  out.estimate = estimate_threshold(cells);
  if (replicates == 0) return out;
  Rng rng(seed);
  std::vector<double> c, f(cells.size()), hits;
  for (const auto* cell : cells) c.push_back(cell->c);
  for (std::size_t r = 0; r < replicates; ++r) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const double p = cells[k]->failure_fraction;
      std::size_t fails = 0;
      for (std::size_t t = 0; t < cells[k]->trials; ++t) fails += rng.bernoulli(p);
      f[k] = static_cast<double>(fails) / static_cast<double>(cells[k]->trials);
    }
    if (auto est = estimate_threshold(c, f)) hits.push_back(*est);
  }
  out.crossing_rate = static_cast<double>(hits.size()) / static_cast<double>(replicates);
  if (!hits.empty()) {
    std::sort(hits.begin(), hits.end());
    auto quantile = [&](double q) {
      const double pos = q * static_cast<double>(hits.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = std::min(lo + 1, hits.size() - 1);
      return hits[lo] + (hits[hi] - hits[lo]) * (pos - static_cast<double>(lo));
    };
    out.lo = quantile((1.0 - level) / 2.0);
    out.hi = quantile(1.0 - (1.0 - level) / 2.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Diagnostics CSV: "t,spread_u,max_u,min_u,min_nonzero_P,row_sum_err".

inline constexpr std::string_view kDiagnosticsHeader = "t,spread_u,max_u,min_u,min_nonzero_P,row_sum_err";

inline void write_diagnostics_csv(std::ostream& out, const DiagnosticReport& rep) {
  out << kDiagnosticsHeader << '\n';
  for (const auto& r : rep.rows)
    out << r.t << ',' << format_double(r.spread_u) << ',' << format_double(r.max_u) << ',' << format_double(r.min_u)
        << ',' << format_double(r.min_nonzero_p) << ',' << format_double(r.row_sum_err) << '\n';
}

inline std::vector<DiagnosticRow> read_diagnostics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kDiagnosticsHeader) throw ParseError("diagnostics: bad header");
  std::vector<DiagnosticRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    detail::expect_tokens(f, 6, "diagnostics row");
    DiagnosticRow r;
    r.t = parse_int<std::size_t>(f[0]);
    r.spread_u = parse_double(f[1]);
    r.max_u = parse_double(f[2]);
    r.min_u = parse_double(f[3]);
    r.min_nonzero_p = parse_double(f[4]);
    r.row_sum_err = parse_double(f[5]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace altmin
