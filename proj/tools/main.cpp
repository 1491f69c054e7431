// altmin: command-line front end for graph generation, single solves,
// VLS/ELS comparisons, failure sweeps and rank-1 diagnostics.
//
// Exit codes: 0 success or converged, 1 usage or structural error,
// 2 diverged, 3 iteration cap, 4 diagnostic invariant violations.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "altmin/altmin.hpp"

namespace {

using namespace altmin;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitIterationCap = 3;
constexpr int kExitViolations = 4;

int exit_code(Status s) {
  switch (s) {
    case Status::Converged: return kExitOk;
    case Status::Diverged: return kExitDiverged;
    default: return kExitIterationCap;
  }
}

// Writes through `writer` to `path`, or to stdout when the path is empty.
template <typename Writer, typename Value>
void emit(const std::string& path, Writer&& writer, const Value& value) {
  if (path.empty()) {
    writer(std::cout, value);
    std::cout.flush();
  } else {
    write_file(path, writer, value);
  }
}

void write_text(std::ostream& out, const std::string& s) { out << s; }

struct GraphFlags {
  std::size_t n = 100;
  std::size_t degree = 3;
  double er_c = 0.0;
  std::string graph_file;

  void add(CLI::App* app, bool with_file) {
    app->add_option("--n", n, "vertices per side")->check(CLI::PositiveNumber);
    app->add_option("--degree", degree, "degree of the random regular graph")->check(CLI::PositiveNumber);
    app->add_option("--er-c", er_c, "add Erdos-Renyi edges with probability c/n")->check(CLI::NonNegativeNumber);
    if (with_file) app->add_option("--graph", graph_file, "read the graph from an edge-list file");
  }

  BipartiteGraph build(std::uint64_t seed) const {
    if (!graph_file.empty()) return read_file(graph_file, read_graph);
    if (degree > n) throw std::invalid_argument("--degree must not exceed --n");
    auto g = gen_random_regular_bipartite(n, degree, derive_seed(seed, {0}));
    if (er_c > 0.0) g = graph_union(g, gen_er_edges(n, er_c, derive_seed(seed, {1})));
    return g;
  }
};

// Shared flags of the solve-style subcommands.
struct ScenarioFlags {
  GraphFlags graph;
  std::string instance_file;
  std::string instance_kind = "random";
  Eigen::Index rank = 1;
  double b = 0.01;
  std::string init = "auto";
  double init_b = 0.0;
  double init_scale = 1.0;
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    graph.add(app, true);
    app->add_option("--instance", instance_file, "read the instance (graph, factors, values) from a file");
    app->add_option("--instance-kind", instance_kind, "random | split (rank 1 only)")
        ->check(CLI::IsMember({"random", "split"}));
    app->add_option("--rank", rank, "rank of the planted factors")->check(CLI::PositiveNumber);
    app->add_option("--b", b, "rank-1 entry bound b in (0, 1)")->check(CLI::Range(0.0, 1.0));
    app->add_option("--init", init, "auto | uniform-box | adversarial-split | ground-truth | uniform-symmetric")
        ->check(CLI::IsMember({"auto", "uniform-box", "adversarial-split", "ground-truth", "uniform-symmetric"}));
    app->add_option("--init-b", init_b, "box bound of the initialisation (default: --b)");
    app->add_option("--init-scale", init_scale, "half-width of the uniform-symmetric initialisation");
    app->add_option("--seed", seed, "master seed");
  }

  Instance build_instance() const {
    if (!instance_file.empty()) return read_file(instance_file, read_instance);
    auto g = graph.build(seed);
    if (g.n_rows() != g.n_cols()) throw std::invalid_argument("instances need an n x n graph");
    const auto n = g.n_rows();
    const auto inst_seed = derive_seed(seed, {2});
    if (instance_kind == "split") {
      if (rank != 1) throw std::invalid_argument("--instance-kind split is rank 1 only");
      return gen_split_rank1_instance(n, b, g, inst_seed);
    }
    if (rank == 1) return gen_rank1_instance(n, b, g, inst_seed);
    return gen_rank_r_instance(n, rank, g, inst_seed);
  }

  InitSpec init_spec(const Instance& inst) const {
    InitSpec s;
    s.seed = derive_seed(seed, {3});
    s.b = init_b > 0.0 ? init_b : (inst.b > 0.0 ? inst.b : b);
    s.scale = init_scale;
    if (init == "auto")
      s.mode = inst.rank == 1 ? InitMode::UniformBox : InitMode::UniformSymmetric;
    else if (init == "uniform-box")
      s.mode = InitMode::UniformBox;
    else if (init == "adversarial-split")
      s.mode = InitMode::AdversarialSplit;
    else if (init == "ground-truth")
      s.mode = InitMode::GroundTruth;
    else
      s.mode = InitMode::UniformSymmetric;
    return s;
  }
};

struct SolveFlags {
  std::string alg = "vls";
  std::size_t max_iter = 500;
  double tol = 1e-3;
  double cap = 1e6;
  std::size_t record_every = 1;

  void add(CLI::App* app, double default_tol) {
    tol = default_tol;
    app->add_option("--alg", alg, "vls | els")->check(CLI::IsMember({"vls", "els"}));
    app->add_option("--max-iter", max_iter, "iteration cap");
    app->add_option("--tol", tol, "stop once RMS falls below this value")->check(CLI::PositiveNumber);
    app->add_option("--cap", cap, "declare divergence once RMS exceeds this value")->check(CLI::PositiveNumber);
    app->add_option("--record-every", record_every, "trace stride")->check(CLI::PositiveNumber);
  }

  SolveConfig config(std::uint64_t seed) const {
    SolveConfig c;
    c.algorithm = parse_algorithm(alg);
    c.max_iterations = max_iter;
    c.rms_tolerance = tol;
    c.divergence_cap = cap;
    c.record_every = record_every;
    c.seed = seed;
    return c;
  }
};

// ---------------------------------------------------------------------------

struct GenGraphCmd {
  GraphFlags graph;
  std::uint64_t seed = 0;
  std::string out;

  void add(CLI::App* app) {
    graph.add(app, false);
    app->add_option("--seed", seed, "master seed");
    app->add_option("--out", out, "edge-list file (default: stdout)");
  }

  int exec() const {
    const auto g = graph.build(seed);
    emit(out, write_graph, g);
    // Keep stdout clean when it carries the graph.
    std::ostream& log = out.empty() ? std::cerr : std::cout;
    const bool connected = g.is_connected();
    log << "n " << g.n_rows() << "\nedges " << g.n_edges() << "\nmax_degree " << g.max_degree() << "\nmin_degree "
        << g.min_degree() << "\nconnected " << (connected ? "yes" : "no") << "\ndiameter "
        << (connected ? std::to_string(g.diameter()) : std::string("inf")) << '\n';
    return kExitOk;
  }
};

struct RunCmd {
  ScenarioFlags scenario;
  SolveFlags solve;
  std::string out, svg, state_out, instance_out;

  void add(CLI::App* app) {
    scenario.add(app);
    solve.add(app, 1e-3);
    app->add_option("--out", out, "trace CSV (default: stdout)");
    app->add_option("--svg", svg, "RMS trace plot");
    app->add_option("--state-out", state_out, "final vertex estimates");
    app->add_option("--instance-out", instance_out, "write the generated instance");
  }

  int exec() const {
    const auto inst = scenario.build_instance();
    if (!instance_out.empty()) write_file(instance_out, write_instance, inst);
    const auto cfg = solve.config(scenario.seed);
    const auto init = scenario.init_spec(inst);
    RunResult res;
    if (cfg.algorithm == Algorithm::ELS) {
      check_els_structure(inst.graph, inst.rank);
      res = run(inst, make_message_init(inst, init), cfg);
    } else {
      res = run(inst, make_factor_init(inst, init), cfg);
    }
    emit(out, write_trace_csv, res.trace);
    if (!svg.empty()) {
      LineChart chart{"RMS per iteration", "iteration", "RMS", true, {}};
      Series s{std::string(to_string(cfg.algorithm)), {}, {}};
      for (const auto& p : res.trace.points) {
        s.xs.push_back(static_cast<double>(p.iteration));
        s.ys.push_back(p.rms);
      }
      chart.series.push_back(std::move(s));
      write_file(svg, write_text, render_svg(chart));
    }
    if (!state_out.empty()) write_file(state_out, write_factor_state, res.final_state);
    const auto& last = res.trace.points.back();
    std::cerr << to_string(res.trace.status) << " after " << res.trace.final_iteration << " iterations, rms "
              << format_double(last.rms) << '\n';
    return exit_code(res.trace.status);
  }
};

struct CompareCmd {
  ScenarioFlags scenario;
  std::size_t max_iter = 5000;
  double tol = 1e-6;
  double mark = 1e-3;
  std::string out, svg, replot;

  void add(CLI::App* app) {
    scenario.add(app);
    app->add_option("--max-iter", max_iter, "iteration cap for both runs");
    app->add_option("--tol", tol, "stop once RMS falls below this value")->check(CLI::PositiveNumber);
    app->add_option("--mark", mark, "report the normalized index at which RMS first drops below this value");
    app->add_option("--out", out, "comparison CSV (default: stdout)");
    app->add_option("--svg", svg, "RMS vs normalized index plot");
    app->add_option("--replot", replot, "re-render the SVG from an existing comparison CSV and exit");
  }

  int exec() const {
    if (!replot.empty()) {
      const auto rows = read_file(replot, read_compare_csv);
      emit(svg, write_text, compare_svg(rows));
      return kExitOk;
    }
    const auto inst = scenario.build_instance();
    check_els_structure(inst.graph, inst.rank);
    SolveConfig cfg;
    cfg.max_iterations = max_iter;
    cfg.rms_tolerance = tol;
    cfg.seed = scenario.seed;
    const auto res = compare(inst, scenario.init_spec(inst), cfg);
    emit(out, write_compare_csv, std::span<const CompareRow>(res.rows));
    if (!svg.empty()) write_file(svg, write_text, compare_svg(res.rows));
    auto show = [&](Algorithm a) {
      const auto idx = res.first_normalized_below(a, mark);
      return idx ? format_double(*idx) : std::string("never");
    };
    std::cerr << "delta " << res.delta << ", T " << res.total_iterations << "\nvls " << to_string(res.vls.trace.status)
              << " at " << res.vls.trace.final_iteration << ", reaches " << format_double(mark) << " at index "
              << show(Algorithm::VLS) << "\nels " << to_string(res.els.trace.status) << " at "
              << res.els.trace.final_iteration << ", reaches " << format_double(mark) << " at index "
              << show(Algorithm::ELS) << '\n';
    return kExitOk;
  }
};

std::vector<double> parse_grid(const std::string& spec) {
  // "lo:hi:step" or a comma-separated list.
  const auto colon = detail::split(spec, ':');
  if (colon.size() == 3) {
    const double lo = parse_double(colon[0]);
    const double hi = parse_double(colon[1]);
    const double step = parse_double(colon[2]);
    if (!(step > 0.0) || hi < lo) throw std::invalid_argument("bad grid '" + spec + "'");
    std::vector<double> g;
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t k = 0; k <= count; ++k) g.push_back(lo + step * static_cast<double>(k));
    return g;
  }
  std::vector<double> g;
  for (auto tok : detail::split(spec, ',')) g.push_back(parse_double(tok));
  return g;
}

struct SweepCmd {
  Eigen::Index rank = 2;
  std::size_t n = 100;
  std::size_t degree = 0;
  std::string grid = "0:20:1";
  std::size_t trials = 200;
  std::string threshold = "1e-3";
  std::size_t max_iter = 500;
  double cap = 1e6;
  std::string algs = "els,vls";
  std::size_t workers = 1;
  std::uint64_t seed = 0;
  std::string out, svg;

  void add(CLI::App* app) {
    app->add_option("--rank", rank, "rank of the planted factors")->check(CLI::PositiveNumber);
    app->add_option("--n", n, "vertices per side")->check(CLI::PositiveNumber);
    app->add_option("--degree", degree, "planted regular degree (default: rank + 1)");
    app->add_option("--c-grid", grid, "lo:hi:step or comma-separated c values");
    app->add_option("--trials", trials, "trials per grid point")->check(CLI::PositiveNumber);
    app->add_option("--threshold", threshold, "failure RMS threshold (inf disables)");
    app->add_option("--max-iter", max_iter, "iteration cap per trial");
    app->add_option("--cap", cap, "divergence cap")->check(CLI::PositiveNumber);
    app->add_option("--algs", algs, "comma-separated subset of vls,els");
    app->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "master seed");
    app->add_option("--out", out, "sweep CSV (default: stdout)");
    app->add_option("--svg", svg, "failure fraction plot");
  }

  int exec() const {
    SweepConfig cfg;
    cfg.rank = rank;
    cfg.n = n;
    cfg.planted_degree = degree;
    cfg.c_grid = parse_grid(grid);
    cfg.trials = trials;
    cfg.failure_threshold = parse_double(threshold);
    cfg.iteration_cap = max_iter;
    cfg.divergence_cap = cap;
    cfg.algorithms.clear();
    for (auto a : detail::split(algs, ',')) cfg.algorithms.push_back(parse_algorithm(a));
    cfg.workers = workers;
    cfg.master_seed = seed;
    const auto res = run_sweep(cfg);
    emit(out, write_sweep_csv, res);
    if (!svg.empty()) write_file(svg, write_text, sweep_svg(res));
    for (auto a : cfg.algorithms) {
      const auto est = estimate_threshold(res.cells_for(a));
      std::cerr << to_string(a) << " c* " << (est ? format_double(*est) : std::string("no crossing")) << '\n';
    }
    return kExitOk;
  }
};

struct EstimateCmd {
  std::string in;
  std::string alg;
  std::size_t bootstrap = 0;
  double level = 0.95;
  std::uint64_t seed = 0;
  std::string out;

  void add(CLI::App* app) {
    app->add_option("input", in, "sweep CSV")->required();
    app->add_option("--alg", alg, "restrict to one algorithm")->check(CLI::IsMember({"vls", "els"}));
    app->add_option("--bootstrap", bootstrap, "bootstrap replicates for a confidence interval");
    app->add_option("--level", level, "confidence level")->check(CLI::Range(0.0, 1.0));
    app->add_option("--seed", seed, "bootstrap seed");
    app->add_option("--out", out, "result file (default: stdout)");
  }

  int exec() const {
    const auto res = read_file(in, read_sweep_csv);
    std::ostringstream o;
    for (auto a : {Algorithm::ELS, Algorithm::VLS}) {
      if (!alg.empty() && parse_algorithm(alg) != a) continue;
      const auto cells = res.cells_for(a);
      if (cells.empty()) continue;
      const auto ci = bootstrap_threshold(cells, bootstrap, seed, level);
      o << to_string(a) << ' ' << (ci.estimate ? format_double(*ci.estimate) : std::string("no crossing"));
      if (bootstrap > 0)
        o << " ci " << format_double(ci.lo) << ' ' << format_double(ci.hi) << " crossing_rate "
          << format_double(ci.crossing_rate);
      o << '\n';
    }
    emit(out, write_text, o.str());
    return kExitOk;
  }
};

struct DiagnoseCmd {
  ScenarioFlags scenario;
  std::string alg = "vls";
  std::size_t max_iter = 500;
  double tol = 1e-6;
  double b_check = 0.0;
  std::string out;

  void add(CLI::App* app) {
    scenario.add(app);
    app->add_option("--alg", alg, "vls | els")->check(CLI::IsMember({"vls", "els"}));
    app->add_option("--max-iter", max_iter, "iteration cap");
    app->add_option("--tol", tol, "stop once RMS falls below this value")->check(CLI::PositiveNumber);
    app->add_option("--b-check", b_check, "entry bound used by the checks (default: instance b)");
    app->add_option("--out", out, "diagnostics CSV (default: stdout)");
  }

  int exec() const {
    if (scenario.rank != 1) throw std::invalid_argument("diagnose is defined for rank 1 only");
    const auto inst = scenario.build_instance();
    if (inst.rank != 1) throw std::invalid_argument("diagnose is defined for rank 1 only");
    DiagnosticConfig cfg;
    cfg.max_iterations = max_iter;
    cfg.rms_tolerance = tol;
    cfg.b = b_check;
    const auto init = scenario.init_spec(inst);
    DiagnosticReport rep;
    if (parse_algorithm(alg) == Algorithm::ELS) {
      check_els_structure(inst.graph, 1);
      rep = diagnose(inst, make_message_init(inst, init), cfg);
    } else {
      rep = diagnose(inst, make_factor_init(inst, init), cfg);
    }
    emit(out, write_diagnostics_csv, rep);
    std::cerr << (rep.converged ? "converged" : "not converged") << " after " << rep.rows.back().t
              << " iterations, rms " << format_double(rep.final_rms) << "\nviolations: row_sum "
              << rep.row_sum_violations << ", consistency " << rep.consistency_violations << ", box "
              << rep.box_violations << ", entry_bound " << rep.entry_bound_violations << ", envelope "
              << rep.envelope_violations << ", negative " << rep.negative_entries << '\n';
    return rep.total_violations() ? kExitViolations : kExitOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Alternating minimization for matrix completion on sparse bipartite graphs"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --config follow the subcommand name

  GenGraphCmd gen_graph;
  RunCmd run_cmd;
  CompareCmd compare_cmd;
  SweepCmd sweep_cmd;
  EstimateCmd estimate_cmd;
  DiagnoseCmd diagnose_cmd;

  auto* gen_app = app.add_subcommand("gen-graph", "generate a random regular (+ ER) bipartite graph");
  auto* run_app = app.add_subcommand("run", "run VLS or ELS once and write the RMS trace");
  auto* cmp_app = app.add_subcommand("compare", "run VLS and ELS from one start and compare convergence");
  auto* sweep_app = app.add_subcommand("sweep", "failure fraction vs ER density c");
  auto* est_app = app.add_subcommand("estimate-threshold", "critical c from a sweep CSV");
  auto* diag_app = app.add_subcommand("diagnose", "rank-1 transition-matrix diagnostics");
  gen_graph.add(gen_app);
  run_cmd.add(run_app);
  compare_cmd.add(cmp_app);
  sweep_cmd.add(sweep_app);
  estimate_cmd.add(est_app);
  diagnose_cmd.add(diag_app);
  // key = value file; keys go under a [subcommand] section (or carry a
  // "subcommand." prefix). Flags given on the command line take precedence.
  app.set_config("--config", "", "read flags from a key = value file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen_app) return gen_graph.exec();
    if (*run_app) return run_cmd.exec();
    if (*cmp_app) return compare_cmd.exec();
    if (*sweep_app) return sweep_cmd.exec();
    if (*est_app) return estimate_cmd.exec();
    if (*diag_app) return diagnose_cmd.exec();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
