#pragma once

// Ground truth for the solver: discounted cost of explicit control schedules
// with switch detection, a brute-force Markov decision process on the grid,
// the local reachability construction near O, and greedy feedback simulation.

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
#include "junction_hjb/solver.hpp"

namespace junction_hjb {

/// Relaxed control: theta * (f, l)(control) + (1 - theta) * (f, l)(partner).
struct Relaxation {
  double partner = 0.0;
  double theta = 1.0;
};

struct Segment {
  double duration = 0.0;
  std::size_t edge = 0;
  double control = 0.0;
  std::optional<Relaxation> mix;
};

/// Piecewise-constant control schedule.
struct ControlSchedule {
  std::vector<Segment> segments;

  double horizon() const {
    double t = 0.0;
    for (const auto& s : segments) t += s.duration;
    return t;
  }
};

enum class SwitchKind { Entry, Exit };

struct SwitchEvent {
  SwitchKind kind = SwitchKind::Entry;
  std::size_t edge = 0;
  double time = 0.0;
  double charged = 0.0;  ///< discounted cost added at this event (0 if the regime does not charge it)
};

struct TrajectorySample {
  double t = 0.0;
  NetworkPoint point;
  double accumulated_cost = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  std::vector<SwitchEvent> switches;
  double cost = 0.0;
  double tail_bound = 0.0;  ///< e^{-lambda T} (M / lambda + max cost) bounds the truncated tail
};

namespace detail {

inline void check_segment(const Problem& problem, const Segment& seg) {
  if (seg.edge >= problem.edges.size()) throw OracleError("schedule names an edge that does not exist");
  if (!(seg.duration > 0.0) || !std::isfinite(seg.duration)) throw OracleError("segment durations must be positive");
  const auto& u = problem.edges[seg.edge].controls;
  auto known = [&](double a) { return std::find(u.begin(), u.end(), a) != u.end(); };
  if (!known(seg.control) || (seg.mix && !known(seg.mix->partner))) {
    throw OracleError("schedule uses a control outside the edge's control list");
  }
  if (seg.mix && !(seg.mix->theta >= 0.0 && seg.mix->theta <= 1.0)) throw OracleError("relaxation weight outside [0, 1]");
}

/// Explicit Euler integration on the junction with switch bookkeeping. Arriving
/// at O from an edge is an exit from that edge; leaving O into an edge is an
/// entry, charged at the first sample with s > 0. A control pointing out of the
/// network at O holds the state at O.
class Integrator {
 public:
  Integrator(const Problem& problem, NetworkPoint x0, double h_snap)
      : problem_(problem), edge_(x0.edge), s_(x0.s), h_snap_(h_snap) {
    if (x0.edge >= problem.edges.size() || !(x0.s >= 0.0)) throw OracleError("invalid starting point");
    traj_.samples.push_back({0.0, x0, 0.0});
  }

  double time() const noexcept { return t_; }
  double position() const noexcept { return s_; }
  std::size_t edge() const noexcept { return edge_; }
  bool at_vertex() const noexcept { return s_ == 0.0; }

  /// Moves onto `edge` before a segment; only allowed from O (within h_snap).
  void select_edge(std::size_t edge) {
    if (edge == edge_) return;
    if (s_ > h_snap_) throw OracleError("switch away from O: segment starts on another edge while s > h_snap");
    if (s_ > 0.0) arrive(t_);
    edge_ = edge;
  }

  void step(std::size_t edge, double control, const std::optional<Relaxation>& mix, double dt) {
    select_edge(edge);
    const auto& spec = problem_.edges[edge];
    double v = spec.velocity(s_, control);
    double l = spec.cost(s_, control);
    if (mix) {
      v = mix->theta * v + (1.0 - mix->theta) * spec.velocity(s_, mix->partner);
      l = mix->theta * l + (1.0 - mix->theta) * spec.cost(s_, mix->partner);
    }
    if (!std::isfinite(v) || !std::isfinite(l)) throw OracleError("non-finite dynamics");
    if (std::abs(v) <= kZeroVelocity) v = 0.0;

    const double lambda = problem_.lambda;
    cost_ += std::exp(-lambda * t_) * l * dt;
    const double start = s_;
    double next = s_ + dt * v;
    if (start > 0.0 && next <= 0.0) {
      arrive(t_ + start / -v);
      next = 0.0;
    } else if (start == 0.0 && next <= 0.0) {
      next = 0.0;
    }
    t_ += dt;
    s_ = next;
    if (start == 0.0 && next > 0.0) {
      const double c = problem_.regime.is_entry() ? problem_.regime.costs[edge_] : 0.0;
      const double charged = c * std::exp(-lambda * t_);
      cost_ += charged;
      traj_.switches.push_back({SwitchKind::Entry, edge_, t_, charged});
    }
    traj_.samples.push_back({t_, NetworkPoint{edge_, s_}, cost_});
  }

  Trajectory finish(double bound_M) {
    traj_.cost = cost_;
    traj_.tail_bound = std::exp(-problem_.lambda * t_) * (bound_M / problem_.lambda + problem_.regime.max_cost());
    return std::move(traj_);
  }

 private:
  void arrive(double when) {
    const double d = problem_.regime.is_entry() ? 0.0 : problem_.regime.costs[edge_];
    const double charged = d * std::exp(-problem_.lambda * when);
    cost_ += charged;
    traj_.switches.push_back({SwitchKind::Exit, edge_, when, charged});
    s_ = 0.0;
  }

  const Problem& problem_;
  std::size_t edge_;
  double s_;
  double h_snap_;
  double t_ = 0.0;
  double cost_ = 0.0;
  Trajectory traj_;
};

}  // namespace detail

struct EvaluateOptions {
  std::size_t substeps = 100;  ///< Euler steps per segment
  double h_snap = 0.005;
};

/// Discounted cost of following `schedule` from x0: the running cost by the
/// rectangle rule plus c_i e^{-lambda t} at each entry (or d_i e^{-lambda eta} at
/// each exit).
inline Trajectory evaluate_cost(const Problem& problem, NetworkPoint x0, const ControlSchedule& schedule,
                                const EvaluateOptions& opts = {}) {
  check_problem(problem);
  const auto report = validate(problem);
  detail::Integrator run(problem, x0, opts.h_snap);
  const std::size_t n = std::max<std::size_t>(opts.substeps, 1);
  for (const auto& seg : schedule.segments) {
    detail::check_segment(problem, seg);
    run.select_edge(seg.edge);
    const double dt = seg.duration / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) run.step(seg.edge, seg.control, seg.mix, dt);
  }
  return run.finish(report.M);
}

// ---------------------------------------------------------------------------
// Brute-force MDP

struct OracleResult {
  ValueField field;  ///< field.values[i][0] is the value at O reached along edge i
  std::size_t iterations = 0;
  double final_change = 0.0;
  bool converged = false;
};

namespace detail {

struct MdpAction {
  std::uint32_t target = 0;  ///< node on the same edge (or on `edge` for actions leaving O)
  std::uint32_t edge = 0;
  double stage = 0.0;
  double discount = 0.0;
};

/// Cheapest cost of holding still at O using edge i: sampled controls with zero
/// velocity and two-control mixtures whose velocities cancel.
inline std::optional<double> cheapest_hold(const EdgeSpec& spec) {
  std::optional<double> best;
  auto take = [&](double c) { best = best ? std::min(*best, c) : c; };
  std::vector<std::pair<double, double>> vl;
  for (double a : spec.controls) vl.emplace_back(spec.velocity(0.0, a), spec.cost(0.0, a));
  for (auto [v, l] : vl) {
    if (std::abs(v) <= kZeroVelocity) take(l);
  }
  for (auto [v1, l1] : vl) {
    if (v1 >= -kZeroVelocity) continue;
    for (auto [v2, l2] : vl) {
      if (v2 <= kZeroVelocity) continue;
      const double w = v2 / (v2 - v1);
      take(w * l1 + (1.0 - w) * l2);
    }
  }
  return best;
}

}  // namespace detail

/// Value iteration on a finite deterministic MDP over the grid nodes of every
/// edge plus a free vertex state. Every move is an Euler step whose duration
/// tau = h / |f| lands exactly on the neighbouring node; stage cost is
/// l (1 - e^{-lambda tau}) / lambda and the discount e^{-lambda tau}. Holding
/// still, or pushing outward at the far node, lasts dt. At O, leaving the
/// arrival edge (or staying at O) pays the exit cost; entering an edge from the
/// free vertex state pays its entry cost.
inline OracleResult oracle_solve(const Problem& problem, const GridParams& grid, double tol = 1e-9,
                                 std::size_t max_iters = 0) {
  check_problem(problem);
  check_grid(grid);
  const std::size_t n_edges = problem.edges.size();
  const std::size_t last = grid.intervals();
  const double lambda = problem.lambda;
  const bool entry = problem.regime.is_entry();
  const auto& costs = problem.regime.costs;

  double q_max = std::exp(-lambda * grid.dt);
  auto make = [&](std::uint32_t edge, std::uint32_t target, double l, double tau) {
    const double disc = std::exp(-lambda * tau);
    q_max = std::max(q_max, disc);
    return detail::MdpAction{target, edge, l * (1.0 - disc) / lambda, disc};
  };

  std::vector<std::vector<std::vector<detail::MdpAction>>> actions(n_edges);
  std::vector<detail::MdpAction> free_actions;
  std::optional<double> hold;
  double bound = 0.0;

  for (std::size_t i = 0; i < n_edges; ++i) {
    const auto& spec = problem.edges[i];
    const auto e = static_cast<std::uint32_t>(i);
    actions[i].resize(last + 1);
    for (std::size_t k = 0; k <= last; ++k) {
      const double s = k == last ? grid.l_max : grid.h * static_cast<double>(k);
      for (double a : spec.controls) {
        const double v = spec.velocity(s, a);
        const double l = spec.cost(s, a);
        bound = std::max(bound, std::abs(l));
        const auto node = static_cast<std::uint32_t>(k);
        if (std::abs(v) <= kZeroVelocity) {
          actions[i][k].push_back(make(e, node, l, grid.dt));
        } else if (v > 0.0) {
          if (k == last) {
            actions[i][k].push_back(make(e, node, l, grid.dt));
            continue;
          }
          const double tau = grid.h / v;
          actions[i][k].push_back(make(e, node + 1, l, tau));
          if (k == 0) {
            auto enter = make(e, 1, l, tau);
            if (entry) enter.stage += costs[i];
            free_actions.push_back(enter);
          }
        } else if (k > 0) {
          actions[i][k].push_back(make(e, node - 1, l, grid.h / -v));
        }
      }
    }
    if (auto c = detail::cheapest_hold(spec)) {
      actions[i][0].push_back(make(e, 0, *c, grid.dt));
      hold = hold ? std::min(*hold, *c) : *c;
    }
  }
  if (!hold) throw OracleError("no way to hold still at O");
  const double hold_stage = *hold * (1.0 - std::exp(-lambda * grid.dt)) / lambda;
  const double hold_disc = std::exp(-lambda * grid.dt);

  if (max_iters == 0) {
    const double ratio = std::max((bound / lambda + problem.regime.total()) / tol, std::exp(1.0));
    max_iters = 4 * static_cast<std::size_t>(std::ceil(std::log(ratio) / -std::log(q_max))) + 100;
  }

  std::vector<std::vector<double>> V(n_edges, std::vector<double>(last + 1, 0.0));
  auto W = V;
  double vertex = 0.0;
  OracleResult out;
  const double amplification = q_max / (1.0 - q_max);
  double change = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  while (it < max_iters) {
    double free_value = hold_stage + hold_disc * vertex;
    for (const auto& act : free_actions) free_value = std::min(free_value, act.stage + act.discount * V[act.edge][act.target]);

    change = std::abs(free_value - vertex);
    for (std::size_t i = 0; i < n_edges; ++i) {
      for (std::size_t k = 0; k <= last; ++k) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& act : actions[i][k]) best = std::min(best, act.stage + act.discount * V[i][act.target]);
        if (k == 0) best = std::min(best, free_value + (entry ? 0.0 : costs[i]));
        W[i][k] = best;
        change = std::max(change, std::abs(best - V[i][k]));
      }
    }
    std::swap(V, W);
    vertex = free_value;
    ++it;
    if (change <= tol && change * amplification <= tol) {
      out.converged = true;
      break;
    }
  }
  out.iterations = it;
  out.final_change = change;
  out.field.h = grid.h;
  out.field.values = std::move(V);
  out.field.vertex_reconstruction = vertex;
  return out;
}

// ---------------------------------------------------------------------------
// Reachability near O

struct ConnectResult {
  ControlSchedule schedule;
  double tau = 0.0;
};

namespace detail {

/// Time to travel from s0 to s1 on one edge under a fixed control: the integral
/// of ds / f(s, a), by composite Simpson.
inline double travel_time(const EdgeSpec& spec, double a, double s0, double s1) {
  if (s0 == s1) return 0.0;
  constexpr int n = 128;
  const double width = (s1 - s0) / n;
  double sum = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double s = s0 + width * k;
    const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    sum += w / spec.velocity(s, a);
  }
  return sum * width / 3.0;
}

}  // namespace detail

/// Drives x1 to x2 (through O when the edges differ) with the fastest sampled
/// control in each direction. Both points must lie within delta / (2 L) of O, where
/// every such control keeps speed at least delta / 2, so tau <= 2 d(x1, x2) / delta.
inline ConnectResult connect(const Problem& problem, const AssumptionReport& report, NetworkPoint x1,
                             NetworkPoint x2) {
  if (!(report.delta > 0.0)) throw OracleError("connect requires delta > 0");
  const double radius = report.reach_radius();
  if (x1.s > radius || x2.s > radius) throw OracleError("points lie outside the controllability ball");
  ConnectResult out;
  if (x1 == x2) return out;

  auto leg = [&](std::size_t edge, double from, double to) {
    const auto& spec = problem.edges.at(edge);
    double best = spec.controls.front();
    double best_v = spec.velocity(0.0, best);
    for (double a : spec.controls) {
      const double v = spec.velocity(0.0, a);
      if (to > from ? v > best_v : v < best_v) {
        best = a;
        best_v = v;
      }
    }
    const double tau = detail::travel_time(spec, best, from, to);
    if (!(tau > 0.0) || !std::isfinite(tau)) throw OracleError("no control reaches the target");
    out.schedule.segments.push_back({tau, edge, best, std::nullopt});
    out.tau += tau;
  };

  if (x1.is_vertex()) {
    leg(x2.edge, 0.0, x2.s);
  } else if (x2.is_vertex()) {
    leg(x1.edge, x1.s, 0.0);
  } else if (x1.edge == x2.edge) {
    leg(x1.edge, x1.s, x2.s);
  } else {
    leg(x1.edge, x1.s, 0.0);
    leg(x2.edge, 0.0, x2.s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Greedy feedback

struct SimulateOptions {
  double horizon = 20.0;
  double dt = 0.01;
  double h_snap = 0.005;
};

struct SimulationResult {
  Trajectory trajectory;
  ControlSchedule schedule;  ///< one segment per step; replays through evaluate_cost with substeps = 1
};

/// Follows the control minimizing the one-step Bellman right-hand side of `field`.
/// At O it compares holding still (cheapest zero-velocity point, continuation
/// v(O)) with entering each edge (entry cost plus one step into that edge).
inline SimulationResult simulate(const Problem& problem, const ValueField& field, NetworkPoint x0,
                                 const SimulateOptions& opts = {}) {
  check_problem(problem);
  if (field.values.size() != problem.edges.size()) throw OracleError("field does not match the problem");
  const auto vertex = compute_vertex_data(problem);
  const auto report = validate(problem);
  const double q = std::exp(-problem.lambda * opts.dt);
  const auto steps = static_cast<std::size_t>(std::llround(opts.horizon / opts.dt));
  const double l_max = field.h * static_cast<double>(field.values.front().size() - 1);

  const auto& stall_spec = problem.edges[vertex.stall_edge];
  Segment hold{opts.dt, vertex.stall_edge, stall_spec.controls[vertex.stall_point.first], std::nullopt};
  if (vertex.stall_point.interpolated()) {
    hold.mix = Relaxation{stall_spec.controls[vertex.stall_point.second], vertex.stall_point.theta};
  }

  SimulationResult out;
  detail::Integrator run(problem, x0, opts.h_snap);
  for (std::size_t n = 0; n < steps; ++n) {
    Segment seg;
    if (!run.at_vertex()) {
      const std::size_t i = run.edge();
      const auto& spec = problem.edges[i];
      const double s = run.position();
      double best = std::numeric_limits<double>::infinity();
      for (double a : spec.controls) {
        const double foot = std::clamp(s + opts.dt * spec.velocity(s, a), 0.0, l_max);
        const double score = opts.dt * spec.cost(s, a) + q * field.at(i, foot);
        if (score < best) {
          best = score;
          seg = Segment{opts.dt, i, a, std::nullopt};
        }
      }
    } else {
      double best = opts.dt * vertex.stall_point.cost + q * field.vertex_reconstruction;
      seg = hold;
      for (std::size_t j = 0; j < problem.edges.size(); ++j) {
        const auto& spec = problem.edges[j];
        const double c = problem.regime.is_entry() ? problem.regime.costs[j] : 0.0;
        for (double a : spec.controls) {
          const double v = spec.velocity(0.0, a);
          if (!(v > kZeroVelocity)) continue;
          const double score = c + opts.dt * spec.cost(0.0, a) + q * field.at(j, opts.dt * v);
          if (score < best) {
            best = score;
            seg = Segment{opts.dt, j, a, std::nullopt};
          }
        }
      }
    }
    run.step(seg.edge, seg.control, seg.mix, seg.duration);
    out.schedule.segments.push_back(seg);
  }
  out.trajectory = run.finish(report.M);
  return out;
}

}  // namespace junction_hjb
