#pragma once

// Junction geometry, the controlled system on each edge, switching costs, the
// problem file format and empirical checks of the standing assumptions.
//
// Edges are addressed by 0-based index in the C++ API and by 1-based label in
// every text format (problem files, CSV/JSON output, CLI arguments).

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "junction_hjb/errors.hpp"
#include "junction_hjb/expr.hpp"

namespace junction_hjb {

/// N half-lines glued at the vertex O. Each edge is parameterized by arclength s >= 0.
struct Junction {
  std::size_t edge_count = 2;
};

/// A point (edge, s). Every (i, 0) is the vertex O, and comparison/hashing honor that.
struct NetworkPoint {
  std::size_t edge = 0;
  double s = 0.0;

  bool is_vertex() const noexcept { return s == 0.0; }

  friend bool operator==(const NetworkPoint& p, const NetworkPoint& q) noexcept {
    if (p.is_vertex() || q.is_vertex()) return p.is_vertex() && q.is_vertex();
    return p.edge == q.edge && p.s == q.s;
  }
};

struct NetworkPointHash {
  std::size_t operator()(const NetworkPoint& p) const noexcept {
    if (p.is_vertex()) return 0x9e3779b97f4a7c15ULL;
    return std::hash<std::size_t>{}(p.edge) * 31u ^ std::hash<double>{}(p.s);
  }
};

/// Geodesic distance on the junction: |s - s'| on a common edge, s + s' across O.
inline double geodesic_distance(const NetworkPoint& x, const NetworkPoint& y) noexcept {
  if (x.edge == y.edge) return std::abs(x.s - y.s);
  return x.s + y.s;
}

/// Sampled control set, dynamics f(x, a) and running cost l(x, a) of one edge.
struct EdgeSpec {
  std::vector<double> controls;
  Expression f;
  Expression ell;

  double velocity(double x, double a) const { return f.evaluate(x, a); }
  double cost(double x, double a) const { return ell.evaluate(x, a); }
};

enum class RegimeKind { Entry, Exit };

/// Entry costs c_i or exit costs d_i, one per edge. Zero entries select the
/// mixed formulation in the solver.
struct CostRegime {
  RegimeKind kind = RegimeKind::Entry;
  std::vector<double> costs;

  static CostRegime entry(std::vector<double> c) { return {RegimeKind::Entry, std::move(c)}; }
  static CostRegime exit(std::vector<double> d) { return {RegimeKind::Exit, std::move(d)}; }

  bool is_entry() const noexcept { return kind == RegimeKind::Entry; }
  bool has_zero_cost() const noexcept {
    return std::any_of(costs.begin(), costs.end(), [](double c) { return c == 0.0; });
  }
  double total() const noexcept {
    double sum = 0.0;
    for (double c : costs) sum += c;
    return sum;
  }
  double max_cost() const noexcept {
    return costs.empty() ? 0.0 : *std::max_element(costs.begin(), costs.end());
  }
};

struct Problem {
  Junction junction;
  std::vector<EdgeSpec> edges;
  double lambda = 1.0;
  CostRegime regime;

  std::size_t edge_count() const noexcept { return edges.size(); }
};

inline void check_problem(const Problem& p) {
  if (p.edges.size() < 2) throw SpecError(0, "a junction needs at least 2 edges");
  if (p.junction.edge_count != p.edges.size()) throw SpecError(0, "junction edge count mismatch");
  if (!(p.lambda > 0.0) || !std::isfinite(p.lambda)) throw SpecError(0, "lambda must be positive");
  if (p.regime.costs.size() != p.edges.size()) {
    throw SpecError(0, "costs has " + std::to_string(p.regime.costs.size()) + " entries but there are " +
                           std::to_string(p.edges.size()) + " edges");
  }
  for (double c : p.regime.costs) {
    if (!std::isfinite(c) || c < 0.0) throw SpecError(0, "costs must be finite and nonnegative");
  }
  for (std::size_t i = 0; i < p.edges.size(); ++i) {
    const auto& u = p.edges[i].controls;
    const std::string label = "edge " + std::to_string(i + 1);
    if (u.empty()) throw SpecError(0, label + ": control list is empty");
    for (std::size_t k = 0; k < u.size(); ++k) {
      if (!std::isfinite(u[k])) throw SpecError(0, label + ": controls must be finite");
      if (k > 0 && !(u[k] > u[k - 1])) {
        throw SpecError(0, label + ": controls must be strictly increasing without duplicates");
      }
    }
  }
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline double parse_real(std::string_view text, std::size_t line, const std::string& key) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw SpecError(line, "invalid number '" + std::string(text) + "' for " + key);
  }
  return value;
}

inline std::vector<double> parse_list(std::string_view text, std::size_t line, const std::string& key) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    out.push_back(parse_real(text.substr(start, comma - start), line, key));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += shortest(values[i]);
  }
  return out;
}

}  // namespace detail

/// Parses the line-oriented problem format:
///
///     lambda = 1.0
///     regime = entry            # or: exit
///     costs = 10.0, 0.5
///     [edge]
///     controls = -1, 0, 1
///     f = a
///     ell = 1
///     [edge]
///     ...
inline Problem parse_problem(std::string_view text) {
  Problem p;
  std::optional<double> lambda;
  std::optional<RegimeKind> regime;
  std::optional<std::vector<double>> costs;
  std::size_t costs_line = 0;

  struct PendingEdge {
    std::size_t line = 0;
    std::optional<std::vector<double>> controls;
    std::optional<Expression> f, ell;
  };
  std::vector<PendingEdge> pending;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto line = detail::trim(raw);
    if (line.empty()) continue;
    if (line == "[edge]") {
      pending.emplace_back();
      pending.back().line = line_no;
      continue;
    }
    if (line.front() == '[') throw SpecError(line_no, "unknown section " + std::string(line));
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw SpecError(line_no, "expected 'key = value'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const auto value = detail::trim(line.substr(eq + 1));

    auto parse_expr_value = [&](std::string_view src) {
      try {
        return parse(src);
      } catch (const ParseError& e) {
        throw SpecError(line_no, key + ": " + e.what());
      }
    };

    if (pending.empty()) {
      if (key == "lambda") {
        if (lambda) throw SpecError(line_no, "duplicate key 'lambda'");
        lambda = detail::parse_real(value, line_no, key);
        if (!(*lambda > 0.0)) throw SpecError(line_no, "lambda must be positive");
      } else if (key == "regime") {
        if (regime) throw SpecError(line_no, "duplicate key 'regime'");
        if (value == "entry") {
          regime = RegimeKind::Entry;
        } else if (value == "exit") {
          regime = RegimeKind::Exit;
        } else {
          throw SpecError(line_no, "regime must be 'entry' or 'exit'");
        }
      } else if (key == "costs") {
        if (costs) throw SpecError(line_no, "duplicate key 'costs'");
        costs = detail::parse_list(value, line_no, key);
        costs_line = line_no;
        for (double c : *costs) {
          if (c < 0.0) throw SpecError(line_no, "costs must be nonnegative");
        }
      } else {
        throw SpecError(line_no, "unknown key '" + key + "'");
      }
      continue;
    }

    auto& edge = pending.back();
    if (key == "controls") {
      if (edge.controls) throw SpecError(line_no, "duplicate key 'controls'");
      auto list = detail::parse_list(value, line_no, key);
      if (list.empty()) throw SpecError(line_no, "control list is empty");
      for (std::size_t k = 1; k < list.size(); ++k) {
        if (!(list[k] > list[k - 1])) {
          throw SpecError(line_no, "controls must be strictly increasing without duplicates");
        }
      }
      edge.controls = std::move(list);
    } else if (key == "f") {
      if (edge.f) throw SpecError(line_no, "duplicate key 'f'");
      edge.f = parse_expr_value(value);
    } else if (key == "ell") {
      if (edge.ell) throw SpecError(line_no, "duplicate key 'ell'");
      edge.ell = parse_expr_value(value);
    } else {
      throw SpecError(line_no, "unknown key '" + key + "' in [edge]");
    }
  }

  if (!lambda) throw SpecError(0, "missing key 'lambda'");
  if (!regime) throw SpecError(0, "missing key 'regime'");
  if (!costs) throw SpecError(0, "missing key 'costs'");
  if (pending.size() < 2) throw SpecError(0, "a junction needs at least 2 [edge] blocks");
  if (costs->size() != pending.size()) {
    throw SpecError(costs_line, "costs has " + std::to_string(costs->size()) + " entries but there are " +
                                    std::to_string(pending.size()) + " [edge] blocks");
  }
  for (const auto& e : pending) {
    if (!e.controls) throw SpecError(e.line, "[edge] is missing 'controls'");
    if (!e.f) throw SpecError(e.line, "[edge] is missing 'f'");
    if (!e.ell) throw SpecError(e.line, "[edge] is missing 'ell'");
    p.edges.push_back(EdgeSpec{*e.controls, *e.f, *e.ell});
  }
  p.junction.edge_count = p.edges.size();
  p.lambda = *lambda;
  p.regime = CostRegime{*regime, *costs};
  return p;
}

inline Problem load_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open problem file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error("cannot read problem file '" + path + "'");
  return parse_problem(buf.str());
}

/// Canonical text of a problem; `parse_problem(format_problem(p))` reproduces p.
inline std::string format_problem(const Problem& p) {
  std::string out;
  out += "lambda = " + detail::shortest(p.lambda) + "\n";
  out += std::string("regime = ") + (p.regime.is_entry() ? "entry" : "exit") + "\n";
  out += "costs = " + detail::join(p.regime.costs) + "\n";
  for (const auto& e : p.edges) {
    out += "[edge]\n";
    out += "controls = " + detail::join(e.controls) + "\n";
    out += "f = " + format(e.f) + "\n";
    out += "ell = " + format(e.ell) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Assumption checks

struct HullPoint {
  double velocity = 0.0;
  double cost = 0.0;
};

/// Convex hull (counter-clockwise, monotone chain) of a planar point set.
inline std::vector<HullPoint> convex_hull(std::vector<HullPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const HullPoint& p, const HullPoint& q) {
    return p.velocity < q.velocity || (p.velocity == q.velocity && p.cost < q.cost);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const HullPoint& p, const HullPoint& q) {
                          return p.velocity == q.velocity && p.cost == q.cost;
                        }),
            pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const HullPoint& o, const HullPoint& a, const HullPoint& b) {
    return (a.velocity - o.velocity) * (b.cost - o.cost) - (a.cost - o.cost) * (b.velocity - o.velocity);
  };
  std::vector<HullPoint> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

struct ValidateOptions {
  double x_max = 4.0;
  /// Number of uniform intervals on [0, x_max]; doubling it refines the previous grid.
  std::size_t intervals = 64;
};

struct AssumptionReport {
  double M = 0.0;            ///< max |f| and |l| over the sampled domain
  double L = 0.0;            ///< max slope of f in x between neighbouring samples
  double omega_scale = 0.0;  ///< same for l
  double delta = 0.0;        ///< controllability margin at O (<= 0 means failure)
  std::vector<double> edge_delta;
  std::vector<std::vector<HullPoint>> convex_hull_vertices;
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }

  /// Radius of the ball around O in which points can be connected at speed >= delta/2.
  double reach_radius() const noexcept {
    if (!(delta > 0.0)) return 0.0;
    return L > 0.0 ? delta / (2.0 * L) : std::numeric_limits<double>::infinity();
  }
};

/// Samples f and l on a uniform grid of [0, x_max] times the control list and
/// estimates the constants of the standing assumptions. Evaluation failures are
/// recorded as violations.
inline AssumptionReport validate(const Problem& problem, const ValidateOptions& opts = {}) {
  AssumptionReport r;
  r.delta = std::numeric_limits<double>::infinity();
  const std::size_t n = std::max<std::size_t>(opts.intervals, 1);
  const double dx = opts.x_max / static_cast<double>(n);

  for (std::size_t i = 0; i < problem.edges.size(); ++i) {
    const auto& edge = problem.edges[i];
    const std::string label = "edge " + std::to_string(i + 1);
    bool finite = true;
    std::vector<HullPoint> at_vertex;

    for (double a : edge.controls) {
      double f_prev = 0.0, l_prev = 0.0;
      for (std::size_t k = 0; k <= n && finite; ++k) {
        const double x = dx * static_cast<double>(k);
        double fv = 0.0, lv = 0.0;
        try {
          fv = edge.velocity(x, a);
          lv = edge.cost(x, a);
        } catch (const EvalError& e) {
          r.violations.push_back("[H1]: " + label + ": evaluation failed at x=" + detail::shortest(x) +
                                 ", a=" + detail::shortest(a) + " (" + e.what() + ")");
          finite = false;
          break;
        }
        r.M = std::max({r.M, std::abs(fv), std::abs(lv)});
        if (k > 0) {
          r.L = std::max(r.L, std::abs(fv - f_prev) / dx);
          r.omega_scale = std::max(r.omega_scale, std::abs(lv - l_prev) / dx);
        } else {
          at_vertex.push_back({fv, lv});
        }
        f_prev = fv;
        l_prev = lv;
      }
    }
    if (!finite) {
      r.edge_delta.push_back(0.0);
      r.convex_hull_vertices.emplace_back();
      r.delta = std::min(r.delta, 0.0);
      continue;
    }

    double vmax = -std::numeric_limits<double>::infinity();
    double vmin = std::numeric_limits<double>::infinity();
    for (const auto& p : at_vertex) {
      vmax = std::max(vmax, p.velocity);
      vmin = std::min(vmin, p.velocity);
    }
    const double d = std::min(vmax, -vmin);
    r.edge_delta.push_back(d);
    r.delta = std::min(r.delta, d);
    r.convex_hull_vertices.push_back(convex_hull(at_vertex));
    if (!(d > 0.0)) r.violations.push_back("[H4]: delta <= 0 on " + label);
  }
  if (problem.edges.empty()) r.delta = 0.0;
  return r;
}

}  // namespace junction_hjb
