#pragma once

// Edge Hamiltonians H_i(x, p) = max_a { -p f_i(x,a) - l_i(x,a) }, the one-sided
// vertex Hamiltonians H_i^+(O, p), the zero-velocity controls at O and the
// tangential Hamiltonian H_O^T = -min_i min_{a in A_i^O} l_i(O, a).
//
// All maxima are taken over the sampled controls plus the zero-velocity points
// of the convexified set {(f_i(O,a), l_i(O,a))}. Every objective here is linear
// in (f, l), so maximizing over the samples equals maximizing over their hull.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "junction_hjb/errors.hpp"
#include "junction_hjb/model.hpp"

namespace junction_hjb {

/// Sampled velocities with |f| at most this are treated as exactly zero.
inline constexpr double kZeroVelocity = 1e-12;

/// A point of the convexified control set at O: theta * (f, l)(first) + (1 - theta) * (f, l)(second).
/// Sampled controls have first == second and theta == 1.
struct ControlPoint {
  double velocity = 0.0;
  double cost = 0.0;
  std::size_t first = 0;
  std::size_t second = 0;
  double theta = 1.0;

  bool interpolated() const noexcept { return first != second; }
};

inline std::vector<ControlPoint> sampled_at_vertex(const Problem& problem, std::size_t edge) {
  const auto& spec = problem.edges.at(edge);
  std::vector<ControlPoint> out;
  out.reserve(spec.controls.size());
  for (std::size_t k = 0; k < spec.controls.size(); ++k) {
    const double a = spec.controls[k];
    double v = spec.velocity(0.0, a);
    if (std::abs(v) <= kZeroVelocity) v = 0.0;
    out.push_back({v, spec.cost(0.0, a), k, k, 1.0});
  }
  return out;
}

/// Zero-velocity points at O: sampled controls with f = 0, and for every pair with
/// f(a1) < 0 < f(a2) the combination theta = f2 / (f2 - f1) of zero velocity.
inline std::vector<ControlPoint> zero_velocity_controls(const Problem& problem, std::size_t edge) {
  const auto pts = sampled_at_vertex(problem, edge);
  std::vector<ControlPoint> out;
  for (const auto& p : pts) {
    if (p.velocity == 0.0) out.push_back(p);
  }
  for (const auto& lo : pts) {
    if (!(lo.velocity < 0.0)) continue;
    for (const auto& hi : pts) {
      if (!(hi.velocity > 0.0)) continue;
      const double theta = hi.velocity / (hi.velocity - lo.velocity);
      out.push_back({0.0, theta * lo.cost + (1.0 - theta) * hi.cost, lo.first, hi.first, theta});
    }
  }
  return out;
}

inline std::vector<double> zero_velocity_costs(const Problem& problem, std::size_t edge) {
  std::vector<double> out;
  for (const auto& p : zero_velocity_controls(problem, edge)) out.push_back(p.cost);
  return out;
}

/// A_i^+ on the hull: sampled controls with f_i(O, a) >= 0 and the zero-velocity points.
inline std::vector<ControlPoint> plus_set(const Problem& problem, std::size_t edge) {
  std::vector<ControlPoint> out;
  for (const auto& p : sampled_at_vertex(problem, edge)) {
    if (p.velocity > 0.0) out.push_back(p);
  }
  for (const auto& p : zero_velocity_controls(problem, edge)) out.push_back(p);
  return out;
}

inline double hamiltonian(const Problem& problem, std::size_t edge, double x, double p) {
  const auto& spec = problem.edges.at(edge);
  double best = -std::numeric_limits<double>::infinity();
  for (double a : spec.controls) best = std::max(best, -p * spec.velocity(x, a) - spec.cost(x, a));
  return best;
}

/// H_i^+(O, p); std::nullopt when A_i^+ is empty.
inline std::optional<double> hamiltonian_plus(const Problem& problem, std::size_t edge, double p) {
  const auto pts = plus_set(problem, edge);
  if (pts.empty()) return std::nullopt;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& q : pts) best = std::max(best, -p * q.velocity - q.cost);
  return best;
}

struct EdgeVertexData {
  std::vector<ControlPoint> plus;
  std::vector<ControlPoint> zero;
  std::optional<std::size_t> cheapest_zero;  ///< index into `zero`

  std::optional<double> min_zero_cost() const {
    if (!cheapest_zero) return std::nullopt;
    return zero[*cheapest_zero].cost;
  }
};

struct VertexData {
  std::vector<EdgeVertexData> edges;
  double tangential = 0.0;     ///< H_O^T
  std::size_t stall_edge = 0;  ///< edge whose zero-velocity point attains H_O^T
  ControlPoint stall_point;

  /// -H_O^T / lambda: the cost of staying at O forever.
  double stall_value(double lambda) const { return -tangential / lambda; }
};

/// Precomputes A_i^+, A_i^O and H_O^T. Throws when no edge has a zero-velocity point.
inline VertexData compute_vertex_data(const Problem& problem) {
  VertexData data;
  bool found = false;
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < problem.edges.size(); ++i) {
    EdgeVertexData ev;
    ev.plus = plus_set(problem, i);
    ev.zero = zero_velocity_controls(problem, i);
    for (std::size_t k = 0; k < ev.zero.size(); ++k) {
      if (!ev.cheapest_zero || ev.zero[k].cost < ev.zero[*ev.cheapest_zero].cost) ev.cheapest_zero = k;
    }
    if (ev.cheapest_zero && ev.zero[*ev.cheapest_zero].cost < lowest) {
      lowest = ev.zero[*ev.cheapest_zero].cost;
      data.stall_edge = i;
      data.stall_point = ev.zero[*ev.cheapest_zero];
      found = true;
    }
    data.edges.push_back(std::move(ev));
  }
  if (!found) throw Error("[H4] violated: no stationary control at O");
  data.tangential = -lowest;
  return data;
}

inline double tangential_hamiltonian(const Problem& problem) { return compute_vertex_data(problem).tangential; }

}  // namespace junction_hjb
