#pragma once

// Plain-text formats. Floats are written in shortest round-trip form, so
// parse -> write reproduces a file byte for byte.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "altmin/errors.hpp"
#include "altmin/graph.hpp"
#include "altmin/instance.hpp"
#include "altmin/solver.hpp"
#include "altmin/state.hpp"

namespace altmin {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  if (!s.empty() && s.front() == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw ParseError("not a number: '" + std::string(s) + "'");
  return v;
}

template <typename Int>
Int parse_int(std::string_view s) {
  Int v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ParseError("not an integer: '" + std::string(s) + "'");
  return v;
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const auto start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!tokens(line).empty()) return true;
  }
  return false;
}

inline void expect_tokens(const std::vector<std::string_view>& t, std::size_t n, std::string_view what) {
  if (t.size() != n)
    throw ParseError(std::string(what) + ": expected " + std::to_string(n) + " fields, got " + std::to_string(t.size()));
}

inline void write_rows(std::ostream& out, const Factors& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) out << (k ? " " : "") << format_double(m(i, k));
    out << '\n';
  }
}

inline Factors read_rows(std::istream& in, Eigen::Index rows, Eigen::Index cols, std::string_view what) {
  Factors m(rows, cols);
  std::string line;
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!next_content_line(in, line)) throw ParseError(std::string(what) + ": truncated factor block");
    const auto t = tokens(line);
    expect_tokens(t, static_cast<std::size_t>(cols), what);
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = parse_double(t[static_cast<std::size_t>(k)]);
  }
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Graph edge list: header "n_rows n_cols n_edges", then one "i j" per line.

inline void write_graph(std::ostream& out, const BipartiteGraph& g) {
  out << g.n_rows() << ' ' << g.n_cols() << ' ' << g.n_edges() << '\n';
  for (const auto& e : g.edges()) out << e.row << ' ' << e.col << '\n';
}

inline BipartiteGraph read_graph(std::istream& in) {
  std::string line;
  if (!detail::next_content_line(in, line)) throw ParseError("graph: missing header");
  const auto h = detail::tokens(line);
  detail::expect_tokens(h, 3, "graph header");
  const auto n_rows = parse_int<std::size_t>(h[0]);
  const auto n_cols = parse_int<std::size_t>(h[1]);
  const auto n_edges = parse_int<std::size_t>(h[2]);
  std::vector<Edge> edges;
  edges.reserve(n_edges);
  for (std::size_t e = 0; e < n_edges; ++e) {
    if (!detail::next_content_line(in, line)) throw ParseError("graph: expected " + std::to_string(n_edges) + " edges");
    const auto t = detail::tokens(line);
    detail::expect_tokens(t, 2, "graph edge");
    edges.push_back({parse_int<std::size_t>(t[0]), parse_int<std::size_t>(t[1])});
  }
  try {
    BipartiteGraph g(n_rows, n_cols, std::move(edges));
    if (g.n_edges() != n_edges) throw ParseError("graph: duplicate edges in file");
    return g;
  } catch (const std::out_of_range& err) {
    throw ParseError(std::string("graph: ") + err.what());
  }
}

// ---------------------------------------------------------------------------
// Instance: header "n r b seed", n rows of alpha, n rows of beta, then one
// "i j value" line per observed edge.

inline void write_instance(std::ostream& out, const Instance& inst) {
  out << inst.n << ' ' << inst.rank << ' ' << format_double(inst.b) << ' ' << inst.seed << '\n';
  detail::write_rows(out, inst.alpha);
  detail::write_rows(out, inst.beta);
  const auto edges = inst.graph.edges();
  for (std::size_t e = 0; e < edges.size(); ++e)
    out << edges[e].row << ' ' << edges[e].col << ' ' << format_double(inst.observed[e]) << '\n';
}

inline Instance read_instance(std::istream& in) {
  std::string line;
  if (!detail::next_content_line(in, line)) throw ParseError("instance: missing header");
  const auto h = detail::tokens(line);
  detail::expect_tokens(h, 4, "instance header");
  const auto n = parse_int<std::size_t>(h[0]);
  const auto r = parse_int<Eigen::Index>(h[1]);
  const double b = parse_double(h[2]);
  const auto seed = parse_int<std::uint64_t>(h[3]);
  if (r < 1) throw ParseError("instance: rank must be at least 1");
  auto alpha = detail::read_rows(in, static_cast<Eigen::Index>(n), r, "instance alpha");
  auto beta = detail::read_rows(in, static_cast<Eigen::Index>(n), r, "instance beta");
  std::vector<Edge> edges;
  std::vector<double> values;
  while (detail::next_content_line(in, line)) {
    const auto t = detail::tokens(line);
    detail::expect_tokens(t, 3, "instance edge");
    edges.push_back({parse_int<std::size_t>(t[0]), parse_int<std::size_t>(t[1])});
    values.push_back(parse_double(t[2]));
  }
  const auto n_listed = edges.size();
  Instance inst;
  try {
    inst = make_instance(std::move(alpha), std::move(beta), BipartiteGraph(n, n, edges), b, seed);
  } catch (const std::out_of_range& err) {
    throw ParseError(std::string("instance: ") + err.what());
  }
  if (inst.graph.n_edges() != n_listed) throw ParseError("instance: duplicate edges in file");
  // Stored values must agree with the factors.
  for (std::size_t k = 0; k < n_listed; ++k) {
    const auto id = inst.graph.find_edge(edges[k].row, edges[k].col);
    if (inst.observed[id] != values[k])
      throw ParseError("instance: observed value on edge (" + std::to_string(edges[k].row) + ", " +
                       std::to_string(edges[k].col) + ") disagrees with alpha_i . beta_j");
  }
  return inst;
}

// Factor state in the instance's factor layout: header "n r", then x rows,
// then y rows.
inline void write_factor_state(std::ostream& out, const FactorState& s) {
  out << s.x.rows() << ' ' << s.x.cols() << '\n';
  detail::write_rows(out, s.x);
  detail::write_rows(out, s.y);
}

inline FactorState read_factor_state(std::istream& in) {
  std::string line;
  if (!detail::next_content_line(in, line)) throw ParseError("state: missing header");
  const auto h = detail::tokens(line);
  detail::expect_tokens(h, 2, "state header");
  const auto n = parse_int<Eigen::Index>(h[0]);
  const auto r = parse_int<Eigen::Index>(h[1]);
  FactorState s;
  s.x = detail::read_rows(in, n, r, "state x");
  s.y = detail::read_rows(in, n, r, "state y");
  return s;
}

// ---------------------------------------------------------------------------
// Trace CSV: "iteration,rms,objective,status". Intermediate rows carry
// "running"; the last row carries the final status.

inline constexpr std::string_view kTraceHeader = "iteration,rms,objective,status";

inline void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << kTraceHeader << '\n';
  for (std::size_t k = 0; k < trace.points.size(); ++k) {
    const auto& p = trace.points[k];
    const auto status = k + 1 == trace.points.size() ? trace.status : Status::Running;
    out << p.iteration << ',' << format_double(p.rms) << ',' << format_double(p.objective) << ',' << to_string(status)
        << '\n';
  }
}

inline Status parse_status(std::string_view s) {
  for (auto st : {Status::Running, Status::Converged, Status::Diverged, Status::IterationCap})
    if (to_string(st) == s) return st;
  throw ParseError("unknown status '" + std::string(s) + "'");
}

inline Trace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw ParseError("trace: bad header");
  Trace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    detail::expect_tokens(f, 4, "trace row");
    trace.points.push_back({parse_int<std::size_t>(f[0]), parse_double(f[1]), parse_double(f[2]), 0.0});
    trace.status = parse_status(f[3]);
  }
  if (!trace.points.empty()) trace.final_iteration = trace.points.back().iteration;
  return trace;
}

template <typename Writer, typename Value>
void write_file(const std::string& path, Writer&& writer, const Value& value) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  writer(out, value);
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

template <typename Reader>
auto read_file(const std::string& path, Reader&& reader) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return reader(in);
}

}  // namespace altmin
