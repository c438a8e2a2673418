#pragma once

// Semi-Lagrangian value iteration for the junction systems with entry costs,
// exit costs, and the mixed case where some entry costs vanish.
//
// Interior node s of edge i:
//   u_i(s) <- min_a [ dt l_i(s,a) + e^{-lambda dt} u_i(s + dt f_i(s,a)) ]
// with linear interpolation at the foot and the foot clipped to [0, L_max], so an
// outward control at the far node holds the state there (outflow closure).
//
// Vertex node, edge i, with the three branches
//   B1  switch: min_{j != i} (u_j(O) + c_j)            (exit: min_{j != i} u_j(O) + d_i)
//   B2  stall:  -H_O^T / lambda                         (exit: -H_O^T / lambda + d_i)
//   B3  continue into edge i with f_i(O, a) >= 0.
// Switching is instantaneous, so B1 is resolved exactly inside each sweep: with
// W_j = min(B2, B3_j) computed from the previous iterate, the coupled vertex
// equations u_i = min(B1_i, W_i) have the unique solution
//   u_i = min(W_i, min_{j != i} (W_j + c_j))            (entry)
//   u_i = min(B3_i, d_i + min(B2, min_{j != i} B3_j))   (exit)
// for nonnegative costs, and every sweep is an e^{-lambda dt} contraction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "junction_hjb/errors.hpp"
#include "junction_hjb/hamiltonian.hpp"
#include "junction_hjb/model.hpp"
#include "junction_hjb/parallel.hpp"

namespace junction_hjb {

struct GridParams {
  double h = 0.01;
  double l_max = 4.0;
  double dt = 0.01;

  std::size_t intervals() const { return static_cast<std::size_t>(std::llround(l_max / h)); }
  std::size_t node_count() const { return intervals() + 1; }
};

inline void check_grid(const GridParams& g) {
  if (!(g.h > 0.0) || !std::isfinite(g.h)) throw SolverError("grid: h must be positive");
  if (!(g.dt > 0.0) || !std::isfinite(g.dt)) throw SolverError("grid: dt must be positive");
  if (!(g.l_max >= 10.0 * g.h * (1.0 - 1e-12))) throw SolverError("grid: L_max must be at least 10 h");
  const double ratio = g.l_max / g.h;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw SolverError("grid: L_max / h must be an integer");
  }
}

/// Per-edge nodal values on s = 0, h, ..., L_max. values[i][0] is the edge-wise
/// limit u_i(O); `vertex_reconstruction` is the single value at O itself.
struct ValueField {
  double h = 0.0;
  std::vector<std::vector<double>> values;
  double vertex_reconstruction = 0.0;

  std::size_t edge_count() const noexcept { return values.size(); }
  double s(std::size_t k) const noexcept { return h * static_cast<double>(k); }

  /// Linear interpolation of edge i at arclength s (clamped to the grid).
  double at(std::size_t edge, double s) const {
    const auto& u = values.at(edge);
    const double pos = std::clamp(s / h, 0.0, static_cast<double>(u.size() - 1));
    const auto k = std::min(static_cast<std::size_t>(pos), u.size() - 1);
    const double w = pos - static_cast<double>(k);
    return k + 1 < u.size() ? (1.0 - w) * u[k] + w * u[k + 1] : u[k];
  }

  double sup_norm() const {
    double m = 0.0;
    for (const auto& e : values)
      for (double v : e) m = std::max(m, std::abs(v));
    return m;
  }
};

/// Sup-norm of the difference over all nodes; throws on shape mismatch.
inline double sup_distance(const ValueField& a, const ValueField& b) {
  if (a.values.size() != b.values.size()) throw Error("field shape mismatch: edge counts differ");
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.values[i].size() != b.values[i].size()) throw Error("field shape mismatch: node counts differ");
    for (std::size_t k = 0; k < a.values[i].size(); ++k) m = std::max(m, std::abs(a.values[i][k] - b.values[i][k]));
  }
  return m;
}

/// One-step transition: value = (1 - weight) u[node] + weight u[node + 1] at the foot.
struct Transition {
  std::uint32_t node = 0;
  double weight = 0.0;
  double stage = 0.0;
  std::uint32_t control = 0;  ///< control index (vertex node: index into the plus set)
};

struct EdgeSystem {
  std::size_t nodes = 0;
  std::vector<std::uint32_t> offsets;  ///< transitions of node k are [offsets[k], offsets[k+1])
  std::vector<Transition> transitions;

  std::size_t begin(std::size_t k) const { return offsets[k]; }
  std::size_t end(std::size_t k) const { return offsets[k + 1]; }
};

enum class VertexMode { Entry, Mixed, Exit };

struct DiscreteSystem {
  GridParams grid;
  double lambda = 1.0;
  double discount = 1.0;  ///< e^{-lambda dt}
  CostRegime regime;
  VertexMode mode = VertexMode::Entry;
  VertexData vertex;
  double stall = 0.0;  ///< -H_O^T / lambda
  std::vector<EdgeSystem> edges;
  std::vector<std::size_t> zero_cost_edges;
  std::vector<std::size_t> positive_cost_edges;
  double max_speed = 0.0;
  double max_running_cost = 0.0;

  /// Loose a priori bound on |u|: M / lambda + sum of costs.
  double bound() const { return max_running_cost / lambda + regime.total(); }
};

namespace detail {

inline Transition make_transition(const GridParams& g, std::size_t last, double foot, double stage,
                                  std::uint32_t control) {
  foot = std::clamp(foot, 0.0, g.l_max);
  const double pos = foot / g.h;
  auto node = static_cast<std::size_t>(std::floor(pos));
  double w = pos - static_cast<double>(node);
  if (w < 1e-12) {
    w = 0.0;
  } else if (w > 1.0 - 1e-12) {
    w = 0.0;
    ++node;
  }
  if (node >= last) {
    node = last;
    w = 0.0;
  }
  return Transition{static_cast<std::uint32_t>(node), w, stage, control};
}

}  // namespace detail

/// Precomputes feet, interpolation weights and stage costs for every node and
/// control, and the vertex data. The vertex mode follows the cost regime: exit
/// costs use the exit system, entry costs with a zero entry the mixed system.
inline DiscreteSystem build_system(const Problem& problem, const GridParams& grid) {
  check_problem(problem);
  check_grid(grid);
  DiscreteSystem sys;
  sys.grid = grid;
  sys.lambda = problem.lambda;
  sys.discount = std::exp(-problem.lambda * grid.dt);
  sys.regime = problem.regime;
  sys.vertex = compute_vertex_data(problem);
  sys.stall = sys.vertex.stall_value(problem.lambda);
  for (std::size_t i = 0; i < problem.edges.size(); ++i) {
    (problem.regime.costs[i] == 0.0 ? sys.zero_cost_edges : sys.positive_cost_edges).push_back(i);
  }
  if (!problem.regime.is_entry()) {
    sys.mode = VertexMode::Exit;
  } else {
    sys.mode = sys.zero_cost_edges.empty() ? VertexMode::Entry : VertexMode::Mixed;
  }

  const std::size_t last = grid.intervals();
  const double dt = grid.dt;
  for (std::size_t i = 0; i < problem.edges.size(); ++i) {
    const auto& spec = problem.edges[i];
    EdgeSystem es;
    es.nodes = last + 1;
    es.offsets.reserve(es.nodes + 1);

    es.offsets.push_back(0);
    const auto& plus = sys.vertex.edges[i].plus;
    for (std::size_t q = 0; q < plus.size(); ++q) {
      const auto& p = plus[q];
      es.transitions.push_back(
          detail::make_transition(grid, last, dt * p.velocity, dt * p.cost, static_cast<std::uint32_t>(q)));
      sys.max_speed = std::max(sys.max_speed, std::abs(p.velocity));
      sys.max_running_cost = std::max(sys.max_running_cost, std::abs(p.cost));
    }
    es.offsets.push_back(static_cast<std::uint32_t>(es.transitions.size()));

    for (std::size_t k = 1; k <= last; ++k) {
      const double s = k == last ? grid.l_max : grid.h * static_cast<double>(k);
      for (std::size_t c = 0; c < spec.controls.size(); ++c) {
        const double a = spec.controls[c];
        const double v = spec.velocity(s, a);
        const double l = spec.cost(s, a);
        sys.max_speed = std::max(sys.max_speed, std::abs(v));
        sys.max_running_cost = std::max(sys.max_running_cost, std::abs(l));
        es.transitions.push_back(detail::make_transition(grid, last, s + dt * v, dt * l, static_cast<std::uint32_t>(c)));
      }
      es.offsets.push_back(static_cast<std::uint32_t>(es.transitions.size()));
    }
    sys.edges.push_back(std::move(es));
  }
  if (dt * sys.max_speed > grid.l_max / 4.0) {
    throw SolverError("grid: dt * max speed exceeds L_max / 4");
  }
  return sys;
}

inline ValueField constant_field(const DiscreteSystem& sys, double value) {
  ValueField f;
  f.h = sys.grid.h;
  for (const auto& e : sys.edges) f.values.emplace_back(e.nodes, value);
  f.vertex_reconstruction = value;
  return f;
}

/// The three vertex branches of edge i at a field. `switching` and `stall` carry
/// the switch/stall cost of the regime; `cont` is empty when A_i^+ is empty.
struct VertexBranches {
  std::optional<double> switching;
  double stall = 0.0;
  std::optional<double> cont;
  int binding = 0;  ///< 1, 2 or 3; ties go to the lowest index
  double value = 0.0;
};

namespace detail {

inline double transition_value(const EdgeSystem& es, const std::vector<double>& u, double discount,
                               std::size_t k) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = es.begin(k); t < es.end(k); ++t) {
    const auto& tr = es.transitions[t];
    const double at = tr.weight == 0.0 ? u[tr.node] : (1.0 - tr.weight) * u[tr.node] + tr.weight * u[tr.node + 1];
    const double v = tr.stage + discount * at;
    if (v < best) best = v;
  }
  return best;
}

inline std::optional<double> continue_branch(const DiscreteSystem& sys, const ValueField& field, std::size_t i) {
  const auto& es = sys.edges[i];
  if (es.begin(0) == es.end(0)) return std::nullopt;
  return transition_value(es, field.values[i], sys.discount, 0);
}

inline int pick(const std::optional<double>& b1, double b2, const std::optional<double>& b3, double& value) {
  int binding = 2;
  value = b2;
  if (b1 && *b1 <= value) {
    binding = 1;
    value = *b1;
  }
  if (b3 && *b3 < value) {
    binding = 3;
    value = *b3;
  }
  return binding;
}

/// Resolved vertex values for every edge, given continue branches from the previous iterate.
inline std::vector<VertexBranches> resolve_vertex(const DiscreteSystem& sys,
                                                  const std::vector<std::optional<double>>& cont) {
  const std::size_t n = cont.size();
  const auto& c = sys.regime.costs;
  std::vector<VertexBranches> out(n);
  const double inf = std::numeric_limits<double>::infinity();

  auto w = [&](std::size_t j) { return cont[j] ? std::min(sys.stall, *cont[j]) : sys.stall; };

  switch (sys.mode) {
    case VertexMode::Entry:
      for (std::size_t i = 0; i < n; ++i) {
        double sw = inf;
        for (std::size_t j = 0; j < n; ++j) {
          if (j != i) sw = std::min(sw, w(j) + c[j]);
        }
        out[i].switching = sw;
        out[i].stall = sys.stall;
        out[i].cont = cont[i];
      }
      break;

    case VertexMode::Mixed: {
      // Zero-cost edges share one vertex value U_c.
      double shared = sys.stall;
      for (std::size_t j : sys.positive_cost_edges) shared = std::min(shared, w(j) + c[j]);
      for (std::size_t j : sys.zero_cost_edges) {
        if (cont[j]) shared = std::min(shared, *cont[j]);
      }
      for (std::size_t i : sys.zero_cost_edges) {
        out[i].switching = shared;
        out[i].stall = sys.stall;
        out[i].cont = cont[i];
      }
      for (std::size_t i : sys.positive_cost_edges) {
        double sw = shared;
        for (std::size_t j : sys.positive_cost_edges) {
          if (j != i) sw = std::min(sw, w(j) + c[j]);
        }
        out[i].switching = sw;
        out[i].stall = sys.stall;
        out[i].cont = cont[i];
      }
      break;
    }

    case VertexMode::Exit:
      for (std::size_t i = 0; i < n; ++i) {
        double other = inf;
        for (std::size_t j = 0; j < n; ++j) {
          if (j != i && cont[j]) other = std::min(other, *cont[j]);
        }
        if (other < inf) out[i].switching = other + c[i];
        out[i].stall = sys.stall + c[i];
        out[i].cont = cont[i];
      }
      break;
  }
  for (auto& b : out) b.binding = pick(b.switching, b.stall, b.cont, b.value);
  return out;
}

inline double reconstruct_vertex(const DiscreteSystem& sys, const ValueField& field) {
  double v = sys.stall;
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    const double add = sys.mode == VertexMode::Exit ? 0.0 : sys.regime.costs[i];
    v = std::min(v, field.values[i][0] + add);
  }
  return v;
}

}  // namespace detail

/// Vertex branch values of every edge at `field` (the quantities one sweep would use).
inline std::vector<VertexBranches> vertex_branches(const DiscreteSystem& sys, const ValueField& field) {
  std::vector<std::optional<double>> cont;
  for (std::size_t i = 0; i < sys.edges.size(); ++i) cont.push_back(detail::continue_branch(sys, field, i));
  return detail::resolve_vertex(sys, cont);
}

/// v(O) = min{ min_i (u_i(O) + c_i), -H_O^T / lambda } for entry costs and
/// min{ min_i u_i(O), -H_O^T / lambda } for exit costs.
inline double vertex_reconstruction(const DiscreteSystem& sys, const ValueField& field) {
  return detail::reconstruct_vertex(sys, field);
}

/// One synchronous update of every node. Writes into `out` (resized as needed)
/// and returns the sup-norm change over all nodes.
inline double sweep(const DiscreteSystem& sys, const ValueField& in, ValueField& out, unsigned workers = 1) {
  if (in.values.size() != sys.edges.size()) throw SolverError("sweep: field has the wrong number of edges");
  out.h = sys.grid.h;
  out.values.resize(sys.edges.size());
  std::vector<double> edge_change(sys.edges.size(), 0.0);

  for (std::size_t i = 0; i < sys.edges.size(); ++i) {
    const auto& es = sys.edges[i];
    const auto& u = in.values[i];
    if (u.size() != es.nodes) throw SolverError("sweep: field has the wrong number of nodes");
    auto& next = out.values[i];
    next.resize(es.nodes);
    parallel_for(es.nodes - 1, workers, [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b + 1; k < e + 1; ++k) next[k] = detail::transition_value(es, u, sys.discount, k);
    });
  }

  std::vector<std::optional<double>> cont;
  for (std::size_t i = 0; i < sys.edges.size(); ++i) cont.push_back(detail::continue_branch(sys, in, i));
  const auto branches = detail::resolve_vertex(sys, cont);

  double change = 0.0;
  for (std::size_t i = 0; i < sys.edges.size(); ++i) {
    out.values[i][0] = branches[i].value;
    const auto& u = in.values[i];
    const auto& next = out.values[i];
    for (std::size_t k = 0; k < next.size(); ++k) change = std::max(change, std::abs(next[k] - u[k]));
  }
  out.vertex_reconstruction = detail::reconstruct_vertex(sys, out);
  return change;
}

struct ResidualReport {
  std::vector<std::vector<double>> per_node;
  double max = 0.0;
};

/// |u - T(u)| at every node, where T is one sweep.
inline ResidualReport residual(const DiscreteSystem& sys, const ValueField& field, unsigned workers = 1) {
  ValueField next;
  sweep(sys, field, next, workers);
  ResidualReport r;
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    auto& row = r.per_node.emplace_back(field.values[i].size());
    for (std::size_t k = 0; k < row.size(); ++k) {
      row[k] = std::abs(field.values[i][k] - next.values[i][k]);
      r.max = std::max(r.max, row[k]);
    }
  }
  return r;
}

struct SolveOptions {
  double tol = 1e-9;
  std::size_t max_iters = 0;  ///< 0 selects 2 ceil(ln(B / tol) / (lambda dt)), B = M/lambda + sum c
  std::optional<ValueField> init;
  unsigned workers = 1;
};

struct SolveReport {
  std::size_t iterations = 0;
  double final_change = 0.0;
  double error_bound = 0.0;  ///< a posteriori bound on the distance to the fixed point
  double max_residual = 0.0;
  bool converged = false;
  bool mixed = false;
  double shared_vertex_excess = 0.0;  ///< mixed case: max_{i in P} (u_i(O) - U_c(O))^+
};

struct SolveResult {
  ValueField field;
  SolveReport report;
};

inline std::size_t default_max_iters(const DiscreteSystem& sys, double tol) {
  const double ratio = std::max(sys.bound() / tol, std::exp(1.0));
  return 2 * static_cast<std::size_t>(std::ceil(std::log(ratio) / (sys.lambda * sys.grid.dt)));
}

/// Iterates `sweep` to the fixed point. Stops once the change is at most tol and
/// the contraction bound q/(1-q) * change on the remaining error is at most tol.
/// Non-convergence is reported, not thrown.
inline SolveResult solve(const DiscreteSystem& sys, const SolveOptions& opts = {}) {
  ValueField cur = opts.init ? *opts.init : constant_field(sys, sys.max_running_cost / sys.lambda);
  if (cur.values.size() != sys.edges.size()) throw SolverError("initial field has the wrong number of edges");
  cur.h = sys.grid.h;
  const std::size_t max_iters = opts.max_iters ? opts.max_iters : default_max_iters(sys, opts.tol);
  const double q = sys.discount;
  const double amplification = q / (1.0 - q);

  SolveResult result;
  ValueField next;
  double change = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  while (it < max_iters) {
    change = sweep(sys, cur, next, opts.workers);
    std::swap(cur, next);
    ++it;
    if (change <= opts.tol && change * amplification <= opts.tol) {
      result.report.converged = true;
      break;
    }
  }
  cur.vertex_reconstruction = detail::reconstruct_vertex(sys, cur);
  result.report.iterations = it;
  result.report.final_change = change;
  result.report.error_bound = change * amplification;
  result.report.max_residual = residual(sys, cur, opts.workers).max;
  result.report.mixed = sys.mode == VertexMode::Mixed;
  if (result.report.mixed) {
    const double shared = cur.values[sys.zero_cost_edges.front()][0];
    for (std::size_t i : sys.positive_cost_edges) {
      result.report.shared_vertex_excess = std::max(result.report.shared_vertex_excess, cur.values[i][0] - shared);
    }
  }
  result.field = std::move(cur);
  return result;
}

/// Solves a problem in which some switching costs are zero. Zero entry costs
/// share one vertex value across their edges; zero exit costs use the exit system
/// unchanged (an extrapolation of the entry case, not derived separately).
inline SolveResult solve_mixed(const Problem& problem, const GridParams& grid, const SolveOptions& opts = {}) {
  if (!problem.regime.has_zero_cost()) throw SolverError("solve_mixed requires at least one zero cost");
  return solve(build_system(problem, grid), opts);
}

/// Solves the problem; entry regimes with a zero cost go through solve_mixed.
inline SolveResult solve(const Problem& problem, const GridParams& grid, const SolveOptions& opts = {}) {
  if (problem.regime.is_entry() && problem.regime.has_zero_cost()) return solve_mixed(problem, grid, opts);
  return solve(build_system(problem, grid), opts);
}

}  // namespace junction_hjb
