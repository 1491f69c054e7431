// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/QR>

#include "altmin/altmin.hpp"

namespace {

using namespace altmin;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Connected 3-regular graph for a seed; redraws with a derived seed if the
// first draw happens to be disconnected.
BipartiteGraph connected_regular(std::size_t n, std::size_t d, std::uint64_t seed) {
  for (std::uint64_t k = 0;; ++k) {
    auto g = gen_random_regular_bipartite(n, d, derive_seed(seed, {k}));
    if (g.is_connected()) return g;
  }
}

struct Rank1Setup {
  Instance inst;
  InitSpec init;
};

Rank1Setup rank1_setup(std::uint64_t seed, std::size_t n = 100) {
  auto g = connected_regular(n, 3, derive_seed(seed, {0}));
  Rank1Setup s{gen_rank1_instance(n, 0.01, g, derive_seed(seed, {1})), {}};
  s.init.mode = InitMode::UniformBox;
  s.init.b = 0.01;
  s.init.seed = derive_seed(seed, {2});
  return s;
}

Verdict box_start_run(Algorithm alg) {
  const auto start = Clock::now();
  SolveConfig cfg;
  cfg.algorithm = alg;
  cfg.max_iterations = 5000;
  cfg.rms_tolerance = 1e-6;
  cfg.record_every = 5000;
  int ok = 0;
  std::size_t worst = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = rank1_setup(seed);
    const auto res = alg == Algorithm::VLS ? run(s.inst, make_factor_init(s.inst, s.init), cfg)
                                           : run(s.inst, make_message_init(s.inst, s.init), cfg);
    ok += res.trace.status == Status::Converged;
    worst = std::max(worst, res.trace.final_iteration);
  }
  const double secs = seconds_since(start);
  const bool fast_enough = alg == Algorithm::ELS || secs < 10.0;
  return {ok == 20 && fast_enough,
          fmt("%d/20 seeds reach rms < 1e-6 within 5000 iterations (max %zu), %.2f s", ok, worst, secs)};
}

Verdict adversarial_start() {
  const double b = 0.1;
  SolveConfig cfg;
  cfg.max_iterations = 1000000;
  cfg.rms_tolerance = 1e-6;
  cfg.record_every = cfg.max_iterations;
  int ok = 0;
  double min_dist = 1.0;
  std::ostringstream iters;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto g = connected_regular(100, 3, derive_seed(seed, {10}));
    const auto inst = gen_split_rank1_instance(100, b, g, derive_seed(seed, {11}));
    InitSpec spec;
    spec.mode = InitMode::AdversarialSplit;
    spec.b = b;
    spec.seed = derive_seed(seed, {12});
    const auto init = make_factor_init(inst, spec);
    min_dist = std::min(min_dist, subspace_distance(as_span(init.x), as_span(inst.alpha)));
    const auto res = run(inst, init, cfg);
    ok += res.trace.status == Status::Converged;
    iters << (seed ? ", " : "") << res.trace.final_iteration;
  }
  return {ok == 3 && min_dist > 0.5,
          fmt("initial subspace distance %.6f; %d/3 seeds reach rms < 1e-6 (iterations: %s)", min_dist, ok,
              iters.str().c_str())};
}

Verdict transition_invariants() {
  std::size_t runs = 0, violations = 0, converged = 0;
  std::size_t rs = 0, cons = 0, box = 0, bound = 0, env = 0;
  for (std::size_t n : {10u, 100u}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto s = rank1_setup(100 + seed, n);
      DiagnosticConfig cfg;
      cfg.max_iterations = 5000;
      for (auto rep : {diagnose(s.inst, make_factor_init(s.inst, s.init), cfg),
                       diagnose(s.inst, make_message_init(s.inst, s.init), cfg)}) {
        ++runs;
        converged += rep.converged;
        violations += rep.total_violations();
        rs += rep.row_sum_violations;
        cons += rep.consistency_violations;
        box += rep.box_violations;
        bound += rep.entry_bound_violations + rep.negative_entries;
        env += rep.envelope_violations;
      }
    }
  }
  return {violations == 0 && converged == runs,
          fmt("%zu diagnostic runs (VLS and ELS), %zu converged; violations: row_sum %zu, consistency %zu, box %zu, "
              "entry_bound %zu, envelope %zu",
              runs, converged, rs, cons, box, bound, env)};
}

Verdict window_positivity() {
  const auto s = rank1_setup(7, 20);
  const auto d = s.inst.graph.diameter();
  DiagnosticConfig cfg;
  cfg.keep_matrices = d;
  cfg.max_iterations = d;
  cfg.rms_tolerance = 1e-300;
  const auto rep = diagnose(s.inst, make_factor_init(s.inst, s.init), cfg);
  if (rep.matrices.size() < d) return {false, "run stopped before a full window"};
  const auto w = window_product(rep.matrices, d, rep.z);
  return {w.strictly_positive,
          fmt("n=20, diameter %zu: min entry of P_%zu...P_1 = %.3e (z^d = %.3e, %zu entries below z^d)", d, d,
              w.min_entry, w.bound, w.bound_violations)};
}

Verdict normalized_ordering() {
  int wins = 0;
  SolveConfig cfg;
  cfg.max_iterations = 5000;
  cfg.rms_tolerance = 1e-6;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = rank1_setup(200 + seed);
    const auto res = compare(s.inst, s.init, cfg);
    const auto v = res.first_normalized_below(Algorithm::VLS, 1e-3);
    const auto e = res.first_normalized_below(Algorithm::ELS, 1e-3);
    wins += e && (!v || *e < *v);
  }
  return {wins >= 18, fmt("ELS reaches rms 1e-3 at a smaller normalized index on %d/20 seeds", wins)};
}

std::string curve(const std::vector<const SweepCell*>& cells) {
  std::ostringstream o;
  for (std::size_t k = 0; k < cells.size(); ++k) o << (k ? " " : "") << format_double(cells[k]->failure_fraction);
  return o.str();
}

Verdict failure_curves() {
  SweepConfig cfg;
  cfg.rank = 2;
  cfg.n = 100;
  cfg.trials = 50;
  cfg.master_seed = 2024;
  cfg.workers = std::max(1u, std::thread::hardware_concurrency());
  const auto start = Clock::now();
  const auto res = run_sweep(cfg);
  const auto els = res.cells_for(Algorithm::ELS);
  const auto vls = res.cells_for(Algorithm::VLS);
  bool monotone = true;
  for (std::size_t a = 0; a < els.size(); ++a)
    for (std::size_t b = a + 1; b < els.size(); ++b)
      monotone = monotone && els[b]->failure_fraction <= els[a]->failure_fraction + 0.1;
  const bool ends = els.front()->failure_fraction >= 0.9 && els.back()->failure_fraction <= 0.1;
  const auto c_els = estimate_threshold(els);
  auto c_vls = estimate_threshold(vls);
  // A VLS curve that never drops below 1/2 on the grid crosses beyond it.
  const bool vls_all_high = std::all_of(vls.begin(), vls.end(), [](auto* c) { return c->failure_fraction >= 0.5; });
  if (!c_vls && vls_all_high) c_vls = std::numeric_limits<double>::infinity();
  const bool ordered = c_els && c_vls && *c_vls > *c_els;
  return {ends && monotone && ordered,
          fmt("ELS c* %s, VLS c* %s (%.0f s); ELS curve [%s]; VLS curve [%s]",
              c_els ? format_double(*c_els).c_str() : "none", c_vls ? format_double(*c_vls).c_str() : "none",
              seconds_since(start), curve(els).c_str(), curve(vls).c_str())};
}

// Minimiser of sum_k (x y_k - m_k)^2 over the grid {lo + 1e-4 k}.
double grid_minimizer(const std::vector<std::pair<double, double>>& terms, double lo, double hi) {
  double best = lo, best_loss = std::numeric_limits<double>::infinity();
  const auto steps = static_cast<long>(std::llround((hi - lo) / 1e-4));
  for (long k = 0; k <= steps; ++k) {
    const double x = lo + 1e-4 * static_cast<double>(k);
    double loss = 0.0;
    for (const auto& [y, m] : terms) loss += (x * y - m) * (x * y - m);
    if (loss < best_loss) best_loss = loss, best = x;
  }
  return best;
}

Verdict oracle_equivalence() {
  std::size_t graphs = 0, checks = 0;
  double worst_grid = 0.0;
  Rng rng(99);
  for (std::size_t n = 1; n <= 3; ++n) {
    const std::size_t pairs = n * n;
    for (std::size_t mask = 1; mask < (std::size_t{1} << pairs); ++mask) {
      std::vector<Edge> edges;
      for (std::size_t p = 0; p < pairs; ++p)
        if (mask >> p & 1) edges.push_back({p / n, p % n});
      const BipartiteGraph g(n, n, edges);
      if (g.min_degree() < 1) continue;
      ++graphs;
      const auto inst = gen_rank1_instance(n, 0.01, g, rng.next_u64(), SamplingBox{0.2, 0.99});
      InitSpec spec;
      spec.b = 0.5;
      spec.seed = rng.next_u64();
      const auto s0 = make_factor_init(inst, spec);
      const auto s1 = vls_iterate(s0, inst.view());
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, double>> terms;
        for (auto j : g.row_neighbors(i)) terms.push_back({s0.y(static_cast<Eigen::Index>(j), 0), inst.truth(i, j)});
        const double want = grid_minimizer(terms, 0.0, 4.0);
        worst_grid = std::max(worst_grid, std::abs(s1.x(static_cast<Eigen::Index>(i), 0) - want));
        ++checks;
      }
      for (std::size_t j = 0; j < n; ++j) {
        std::vector<std::pair<double, double>> terms;
        for (auto i : g.col_neighbors(j)) terms.push_back({s1.x(static_cast<Eigen::Index>(i), 0), inst.truth(i, j)});
        // |y_j| <= max_i |M_ij / x_i| < 1 / min x.
        const double want = grid_minimizer(terms, 0.0, 1.0 / s1.x.minCoeff());
        worst_grid = std::max(worst_grid, std::abs(s1.y(static_cast<Eigen::Index>(j), 0) - want));
        ++checks;
      }
    }
  }

  double worst_pinv = 0.0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const auto g = graph_union(gen_random_regular_bipartite(10, 3, k), gen_er_edges(10, 1.0, k + 1000));
    const auto inst = gen_rank_r_instance(10, 2, g, k + 2000);
    InitSpec spec;
    spec.mode = InitMode::UniformSymmetric;
    spec.seed = k + 3000;
    const auto s0 = make_factor_init(inst, spec);
    const auto s1 = vls_iterate(s0, inst.view());
    for (std::size_t i = 0; i < g.n_rows(); ++i) {
      const auto nbrs = g.row_neighbors(i);
      Eigen::MatrixXd a(static_cast<Eigen::Index>(nbrs.size()), 2);
      Eigen::VectorXd m(static_cast<Eigen::Index>(nbrs.size()));
      for (std::size_t q = 0; q < nbrs.size(); ++q) {
        a.row(static_cast<Eigen::Index>(q)) = s0.y.row(static_cast<Eigen::Index>(nbrs[q]));
        m(static_cast<Eigen::Index>(q)) = inst.truth(i, nbrs[q]);
      }
      const Eigen::VectorXd want = a.completeOrthogonalDecomposition().pseudoInverse() * m;
      const double scale = std::max(1.0, want.cwiseAbs().maxCoeff());
      worst_pinv = std::max(worst_pinv, (s1.x.row(static_cast<Eigen::Index>(i)).transpose() - want).cwiseAbs().maxCoeff() / scale);
    }
  }
  return {worst_grid <= 1e-3 && worst_pinv <= 1e-9,
          fmt("%zu graphs / %zu vertex updates vs grid search: max gap %.2e; rank-2 vs pseudo-inverse on 100 "
              "instances: max rel gap %.2e",
              graphs, checks, worst_grid, worst_pinv)};
}

Verdict determinism() {
  SweepConfig cfg;
  cfg.rank = 2;
  cfg.n = 100;
  cfg.trials = 5;
  cfg.c_grid = {0, 4, 8, 12, 16, 20};
  cfg.master_seed = 77;
  auto csv = [&](std::size_t workers) {
    cfg.workers = workers;
    std::ostringstream o;
    write_sweep_csv(o, run_sweep(cfg));
    return o.str();
  };
  const auto one = csv(1);
  const auto eight = csv(8);
  return {one == eight, fmt("%zu-byte sweep CSV, 1 worker vs 8 workers %s", one.size(),
                            one == eight ? "identical" : "differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"VLS convergence from uniform-box starts", [] { return box_start_run(Algorithm::VLS); }},
      {"ELS convergence from uniform-box starts", [] { return box_start_run(Algorithm::ELS); }},
      {"VLS convergence from the adversarial split start", adversarial_start},
      {"transition-matrix invariants", transition_invariants},
      {"window product positivity", window_positivity},
      {"ELS ahead of VLS on the normalized axis", normalized_ordering},
      {"failure fraction vs c, rank 2", failure_curves},
      {"local solves vs brute-force oracles", oracle_equivalence},
      {"sweep determinism across worker counts", determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s criterion %zu (%s): %s\n", v.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
