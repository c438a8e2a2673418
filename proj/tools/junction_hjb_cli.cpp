// Command-line front end: validate, solve, oracle, residual, compare, simulate, example.
//
// Exit codes: 0 success, 1 usage/I/O/parse error or field shape mismatch,
// 2 assumption violations or a comparison above --bound, 3 non-convergence.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "junction_hjb/junction_hjb.hpp"

namespace jh = junction_hjb;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kRejected = 2;
constexpr int kNotConverged = 3;

struct RunConfig {
  std::string spec;
  std::string field;
  std::string field_b;
  double h = 0.01;
  double l_max = 4.0;
  std::optional<double> dt;
  double tol = 1e-9;
  std::size_t max_iters = 0;
  std::string out;
  std::string format = "csv";
  std::uint64_t seed = 0;
  double bound = 0.0;
  bool force_strict = false;
  std::string x0 = "1:1";
  double horizon = 20.0;
  std::string report_format = "text";
  std::string example;
  std::optional<double> lambda;
  std::optional<double> c1;
  std::optional<double> c2;

  jh::GridParams grid() const { return {h, l_max, dt.value_or(h)}; }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Writes via `emit` to --out, or to stdout when no path is given.
template <class Emit>
void write_output(const std::string& path, Emit&& emit) {
  if (path.empty()) {
    emit(std::cout);
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw jh::Error("cannot write '" + path + "'");
  emit(os);
  if (!os) throw jh::Error("write failed for '" + path + "'");
}

jh::NetworkPoint parse_point(const std::string& text, std::size_t edges) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw jh::Error("--x0 must be EDGE:S, e.g. 1:0.5");
  const double label = jh::detail::parse_real(text.substr(0, colon), 0, "--x0 edge");
  const double s = jh::detail::parse_real(text.substr(colon + 1), 0, "--x0 arclength");
  if (label < 1 || label > static_cast<double>(edges) || label != std::floor(label) || s < 0.0) {
    throw jh::Error("--x0 is not a point of the junction");
  }
  return {static_cast<std::size_t>(label) - 1, s};
}

int cmd_validate(const RunConfig& cfg) {
  const auto problem = jh::load_problem(cfg.spec);
  const auto report = jh::validate(problem);
  write_output(cfg.out, [&](std::ostream& os) {
    if (cfg.report_format == "json") {
      os << jh::to_json(report).dump(2) << '\n';
    } else {
      jh::write_report_text(os, report);
    }
  });
  return report.ok() ? kOk : kRejected;
}

void write_field(const RunConfig& cfg, const jh::ValueField& field, const nlohmann::json& report) {
  write_output(cfg.out, [&](std::ostream& os) {
    if (cfg.format == "json") {
      jh::write_field_json(os, field, report);
    } else {
      jh::write_field_csv(os, field);
    }
  });
}

int cmd_solve(const RunConfig& cfg) {
  const auto problem = jh::load_problem(cfg.spec);
  const auto check = jh::validate(problem);
  if (!check.ok()) {
    for (const auto& v : check.violations) std::cerr << "violation: " << v << '\n';
    return kRejected;
  }
  if (cfg.force_strict && problem.regime.has_zero_cost()) {
    std::cerr << "error: --force-strict rejects zero switching costs\n";
    return kFailure;
  }
  jh::SolveOptions opts;
  opts.tol = cfg.tol;
  opts.max_iters = cfg.max_iters;
  opts.workers = jh::threads_from_env();
  const auto result = jh::solve(problem, cfg.grid(), opts);

  auto report = jh::to_json(result.report);
  report["seed"] = cfg.seed;
  if (!cfg.out.empty()) write_field(cfg, result.field, report);

  std::ostream& log = cfg.out.empty() ? std::cerr : std::cout;
  if (cfg.out.empty()) write_field(cfg, result.field, report);
  log << (result.report.converged ? "converged" : "NOT converged") << " after " << result.report.iterations
      << " iterations (final change " << num(result.report.final_change) << ", max residual "
      << num(result.report.max_residual) << ")\n";
  log << "v(O) = " << num(result.field.vertex_reconstruction) << '\n';
  for (std::size_t i = 0; i < result.field.values.size(); ++i) {
    log << "u_" << (i + 1) << "(O) = " << num(result.field.values[i][0]) << '\n';
  }
  return result.report.converged ? kOk : kNotConverged;
}

int cmd_oracle(const RunConfig& cfg) {
  const auto problem = jh::load_problem(cfg.spec);
  const auto result = jh::oracle_solve(problem, cfg.grid(), cfg.tol, cfg.max_iters);
  nlohmann::json report{{"iterations", result.iterations},
                        {"final_change", result.final_change},
                        {"converged", result.converged},
                        {"seed", cfg.seed}};
  write_field(cfg, result.field, report);
  std::ostream& log = cfg.out.empty() ? std::cerr : std::cout;
  log << (result.converged ? "converged" : "NOT converged") << " after " << result.iterations << " iterations\n";
  log << "v(O) = " << num(result.field.vertex_reconstruction) << '\n';
  return result.converged ? kOk : kNotConverged;
}

int cmd_residual(const RunConfig& cfg) {
  const auto problem = jh::load_problem(cfg.spec);
  const auto field = jh::read_field(cfg.field);
  if (!(field.h > 0.0) || field.values.empty()) throw jh::Error("field has no grid");
  const double l_max = field.h * static_cast<double>(field.values.front().size() - 1);
  const jh::GridParams grid{field.h, l_max, cfg.dt.value_or(field.h)};
  const auto sys = jh::build_system(problem, grid);
  if (field.values.size() != sys.edges.size()) {
    std::cerr << "error: field shape does not match the problem\n";
    return kFailure;
  }
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    if (field.values[i].size() != sys.edges[i].nodes) {
      std::cerr << "error: field shape does not match the problem\n";
      return kFailure;
    }
  }
  const auto r = jh::residual(sys, field, jh::threads_from_env());
  if (!cfg.out.empty()) {
    write_output(cfg.out, [&](std::ostream& os) {
      os << "edge,s,residual\n";
      for (std::size_t i = 0; i < r.per_node.size(); ++i) {
        for (std::size_t k = 0; k < r.per_node[i].size(); ++k) {
          os << (i + 1) << ',' << num(field.s(k)) << ',' << num(r.per_node[i][k]) << '\n';
        }
      }
    });
  }
  std::cout << "max residual = " << num(r.max) << '\n';
  return kOk;
}

int cmd_compare(const RunConfig& cfg) {
  const auto a = jh::read_field(cfg.field);
  const auto b = jh::read_field(cfg.field_b);
  double total = 0.0;
  try {
    total = jh::sup_distance(a, b);
  } catch (const jh::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  std::cout << "sup-norm difference = " << num(total) << '\n';
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.values[i].size(); ++k) m = std::max(m, std::abs(a.values[i][k] - b.values[i][k]));
    std::cout << "edge " << (i + 1) << " max difference = " << num(m) << '\n';
  }
  std::cout << "vertex difference = " << num(std::abs(a.vertex_reconstruction - b.vertex_reconstruction)) << '\n';
  return total <= cfg.bound ? kOk : kRejected;
}

int cmd_simulate(const RunConfig& cfg) {
  const auto problem = jh::load_problem(cfg.spec);
  const auto field = jh::read_field(cfg.field);
  const auto x0 = parse_point(cfg.x0, problem.edges.size());
  jh::SimulateOptions opts;
  opts.horizon = cfg.horizon;
  opts.dt = cfg.dt.value_or(field.h > 0.0 ? field.h : 0.01);
  opts.h_snap = (field.h > 0.0 ? field.h : opts.dt) / 2.0;
  const auto sim = jh::simulate(problem, field, x0, opts);
  write_output(cfg.out, [&](std::ostream& os) { jh::write_trajectory_csv(os, sim.trajectory); });
  if (!cfg.out.empty()) {
    write_output(cfg.out + ".switches.csv", [&](std::ostream& os) { jh::write_switches_csv(os, sim.trajectory); });
  }
  std::ostream& log = cfg.out.empty() ? std::cerr : std::cout;
  log << "realized cost = " << num(sim.trajectory.cost) << " (tail bound " << num(sim.trajectory.tail_bound)
      << ")\n";
  log << "value at x0 = " << num(x0.is_vertex() ? field.vertex_reconstruction : field.at(x0.edge, x0.s)) << '\n';
  return kOk;
}

int cmd_example(const RunConfig& cfg) {
  auto ex = jh::find_example(cfg.example);
  if (!ex) {
    std::cerr << "error: unknown example '" << cfg.example << "'; available:";
    for (const auto& e : jh::named_examples()) std::cerr << ' ' << e.name;
    std::cerr << '\n';
    return kFailure;
  }
  if (cfg.lambda) ex->lambda = *cfg.lambda;
  if (cfg.c1) ex->regime.costs[0] = *cfg.c1;
  if (cfg.c2) ex->regime.costs[1] = *cfg.c2;
  const auto text = jh::two_edge_example_text(ex->lambda, ex->regime);
  jh::parse_problem(text);
  write_output(cfg.out, [&](std::ostream& os) { os << text; });
  return kOk;
}

void add_grid_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->set_help_flag("--help", "Print this help message and exit");
  cmd->add_option("--h", cfg.h, "Mesh size")->check(CLI::PositiveNumber);
  cmd->add_option("--lmax", cfg.l_max, "Truncation length of every edge")->check(CLI::PositiveNumber);
  cmd->add_option("--dt", cfg.dt, "Time step (default: h)")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", cfg.tol, "Fixed-point tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iters", cfg.max_iters, "Iteration cap (0 = automatic)");
}

void add_output_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--out", cfg.out, "Output file (default: stdout)");
  cmd->add_option("--format", cfg.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--seed", cfg.seed, "Seed recorded with the results");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal control on a junction with entry or exit costs"};
  app.set_help_flag("-h,--help", "Print this help message and exit");
  app.require_subcommand(1);
  RunConfig cfg;

  auto* validate = app.add_subcommand("validate", "Check the standing assumptions of a problem file");
  validate->add_option("spec", cfg.spec, "Problem file")->required();
  validate->add_option("--format", cfg.report_format, "Report format")->check(CLI::IsMember({"text", "json"}));
  validate->add_option("--out", cfg.out, "Output file (default: stdout)");

  auto* solve = app.add_subcommand("solve", "Solve the junction system by value iteration");
  solve->add_option("spec", cfg.spec, "Problem file")->required();
  add_grid_flags(solve, cfg);
  add_output_flags(solve, cfg);
  solve->add_flag("--force-strict", cfg.force_strict, "Reject problems with zero switching costs");

  auto* oracle = app.add_subcommand("oracle", "Solve the brute-force grid MDP");
  oracle->add_option("spec", cfg.spec, "Problem file")->required();
  add_grid_flags(oracle, cfg);
  add_output_flags(oracle, cfg);

  auto* residual = app.add_subcommand("residual", "Fixed-point residual of a field");
  residual->add_option("spec", cfg.spec, "Problem file")->required();
  residual->add_option("field", cfg.field, "Field file (.csv or .json)")->required();
  residual->add_option("--dt", cfg.dt, "Time step (default: h of the field)")->check(CLI::PositiveNumber);
  residual->add_option("--out", cfg.out, "Per-node residual CSV");

  auto* compare = app.add_subcommand("compare", "Sup-norm difference of two fields");
  compare->add_option("a", cfg.field, "First field")->required();
  compare->add_option("b", cfg.field_b, "Second field")->required();
  compare->add_option("--bound", cfg.bound, "Exit 0 iff the difference is at most this");

  auto* simulate = app.add_subcommand("simulate", "Greedy feedback trajectory from a solved field");
  simulate->add_option("spec", cfg.spec, "Problem file")->required();
  simulate->add_option("field", cfg.field, "Field file (.csv or .json)")->required();
  simulate->add_option("--x0", cfg.x0, "Start point EDGE:S (1-based edge)");
  simulate->add_option("--horizon", cfg.horizon, "Simulated time")->check(CLI::PositiveNumber);
  simulate->add_option("--dt", cfg.dt, "Time step (default: h of the field)")->check(CLI::PositiveNumber);
  simulate->add_option("--out", cfg.out, "Trajectory CSV; switches go to <out>.switches.csv");

  auto* example = app.add_subcommand("example", "Write a built-in two-edge problem file");
  example->add_option("name", cfg.example, "entry-basic, entry-constant, entry-zero, entry-all-zero, exit-basic")
      ->required();
  example->add_option("--lambda", cfg.lambda, "Discount rate")->check(CLI::PositiveNumber);
  example->add_option("--c1", cfg.c1, "Switching cost of edge 1")->check(CLI::NonNegativeNumber);
  example->add_option("--c2", cfg.c2, "Switching cost of edge 2")->check(CLI::NonNegativeNumber);
  example->add_option("--out", cfg.out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kFailure;
  }

  try {
    if (*validate) return cmd_validate(cfg);
    if (*solve) return cmd_solve(cfg);
    if (*oracle) return cmd_oracle(cfg);
    if (*residual) return cmd_residual(cfg);
    if (*compare) return cmd_compare(cfg);
    if (*simulate) return cmd_simulate(cfg);
    if (*example) return cmd_example(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
