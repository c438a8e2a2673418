#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "junction_hjb/builtin.hpp"
#include "junction_hjb/solver.hpp"
#include "support/random_problems.hpp"

using namespace junction_hjb;
using Catch::Approx;

namespace {

const GridParams kGrid{0.01, 4.0, 0.01};
const GridParams kCoarse{0.05, 4.0, 0.05};

Problem basic(double c2 = 0.5) { return two_edge_example(1.0, CostRegime::entry({10.0, c2})); }

ValueField random_field(const DiscreteSystem& sys, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> val(-amp, amp);
  auto f = constant_field(sys, 0.0);
  for (auto& e : f.values)
    for (auto& v : e) v = val(rng);
  return f;
}

}  // namespace

TEST_CASE("grid checks") {
  CHECK_THROWS_AS(check_grid({0.0, 4.0, 0.01}), SolverError);
  CHECK_THROWS_AS(check_grid({0.01, 4.0, -1.0}), SolverError);
  CHECK_THROWS_AS(check_grid({0.03, 4.0, 0.01}), SolverError);
  CHECK_THROWS_AS(check_grid({0.5, 4.0, 0.5}), SolverError);
  CHECK_NOTHROW(check_grid(kGrid));
  CHECK_THROWS_AS(build_system(basic(), {0.01, 4.0, 2.0}), SolverError);
}

TEST_CASE("system shape and foot points") {
  const auto sys = build_system(basic(), kGrid);
  REQUIRE(sys.edges.size() == 2);
  CHECK(sys.edges[0].nodes == 401);
  CHECK(sys.discount == Approx(std::exp(-0.01)));
  for (std::size_t k = 1; k < 401; ++k) CHECK(sys.edges[0].end(k) - sys.edges[0].begin(k) == 3);

  // node 1, a = -1 lands on O; a = +1 lands on node 2
  const auto& es = sys.edges[0];
  const auto& down = es.transitions[es.begin(1)];
  CHECK(down.node == 0);
  CHECK(down.weight == 0.0);
  const auto& up = es.transitions[es.begin(1) + 2];
  CHECK(up.node == 2);
  CHECK(up.weight == 0.0);

  // vertex: plus set of a = 1 plus zero-velocity points
  bool has_unit = false;
  for (std::size_t t = es.begin(0); t < es.end(0); ++t) {
    if (es.transitions[t].node == 1 && es.transitions[t].weight == 0.0) has_unit = true;
    if (es.transitions[t].node == 0) CHECK(es.transitions[t].weight == 0.0);
  }
  CHECK(has_unit);
  CHECK(sys.stall == Approx(1.0));
}

TEST_CASE("sweep hand computations") {
  const auto sys = build_system(basic(), kGrid);
  ValueField out;
  sweep(sys, constant_field(sys, 0.0), out);
  CHECK(out.values[1][200] == 0.0);
  CHECK(out.values[0][0] == Approx(0.01));
  CHECK(out.values[0][200] == Approx(0.01));
  const auto b = vertex_branches(sys, constant_field(sys, 0.0));
  CHECK(*b[0].switching == Approx(0.5));
  CHECK(b[0].stall == 1.0);
  CHECK(*b[0].cont == Approx(0.01));
  CHECK(b[0].binding == 3);
  std::mt19937_64 rng(1);
  for (const auto& br : vertex_branches(sys, random_field(sys, rng, 3.0))) {
    CHECK(br.stall == 1.0);
  }
}

TEST_CASE("residual hand computation") {
  const auto sys = build_system(basic(), kGrid);
  const auto r = residual(sys, constant_field(sys, 0.0));
  CHECK(r.per_node[0][200] == Approx(0.01));
  CHECK(r.per_node[1][200] == 0.0);
}

TEST_CASE("solve the closed-form example") {
  const auto r = solve(basic(), kGrid);
  REQUIRE(r.report.converged);
  CHECK(r.report.max_residual <= 2e-9);
  for (std::size_t k = 0; r.field.s(k) <= 3.0; ++k) {
    const double s = r.field.s(k);
    CHECK(std::abs(r.field.values[0][k] - two_edge_entry_value(1.0, 0.5, s)) <= 0.02);
    CHECK(std::abs(r.field.values[1][k]) <= 0.02);
  }
  CHECK(r.field.vertex_reconstruction == Approx(0.5).margin(0.02));

  const auto c = solve(basic(2.0), kGrid);
  for (std::size_t k = 0; c.field.s(k) <= 3.0; ++k) CHECK(std::abs(c.field.values[0][k] - 1.0) <= 0.02);
  CHECK(c.field.vertex_reconstruction == Approx(1.0).margin(0.02));
}

TEST_CASE("zero running cost gives the zero field") {
  auto p = basic();
  for (auto& e : p.edges) e.ell = parse("0");
  const auto r = solve(p, kCoarse);
  CHECK(r.field.sup_norm() <= 1e-9);
  CHECK(r.field.vertex_reconstruction == 0.0);
}

TEST_CASE("mixed zero costs") {
  const auto zero = solve(basic(0.0), kCoarse);
  CHECK(zero.report.mixed);
  CHECK(zero.field.vertex_reconstruction <= 1e-8);
  for (std::size_t k = 0; zero.field.s(k) <= 3.0; ++k) {
    CHECK(std::abs(zero.field.values[0][k] - (1.0 - std::exp(-zero.field.s(k)))) <= 0.05);
  }
  CHECK(zero.report.shared_vertex_excess <= 1e-8);

  auto all = two_edge_example(1.0, CostRegime::entry({0.0, 0.0}));
  all.edges[0].ell = parse("2 + a");
  const auto r = solve(all, kCoarse);
  CHECK(std::abs(r.field.values[0][0] - r.field.values[1][0]) <= 2e-9);

  CHECK_THROWS_AS(solve_mixed(basic(), kCoarse), SolverError);
}

TEST_CASE("contraction and monotonicity of one sweep") {
  std::mt19937_64 rng(11);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto sys = build_system(testsupport::random_problem(seed), kCoarse);
    for (int n = 0; n < 20; ++n) {
      const auto u = random_field(sys, rng, 4.0);
      const auto w = random_field(sys, rng, 4.0);
      ValueField su, sw;
      sweep(sys, u, su);
      sweep(sys, w, sw);
      CHECK(sup_distance(su, sw) <= sys.discount * sup_distance(u, w) + 1e-12);

      auto hi = u;
      for (std::size_t i = 0; i < hi.values.size(); ++i)
        for (std::size_t k = 0; k < hi.values[i].size(); ++k) hi.values[i][k] = std::max(u.values[i][k], w.values[i][k]);
      ValueField sh;
      sweep(sys, hi, sh);
      for (std::size_t i = 0; i < sh.values.size(); ++i)
        for (std::size_t k = 0; k < sh.values[i].size(); ++k) CHECK(sh.values[i][k] >= su.values[i][k] - 1e-15);
    }
  }
}

TEST_CASE("sandwich and stall bound at O") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = testsupport::random_problem(seed);
    const auto sys = build_system(p, kCoarse);
    const auto r = solve(sys);
    REQUIRE(r.report.converged);
    const double v = r.field.vertex_reconstruction;
    CHECK(v <= sys.stall + 1e-8);
    for (std::size_t i = 0; i < p.edges.size(); ++i) {
      CHECK(r.field.values[i][0] <= v + 1e-8);
      CHECK(v <= r.field.values[i][0] + p.regime.costs[i] + 1e-8);
    }
  }

  auto exit = two_edge_example(1.0, CostRegime::exit({0.3, 0.5}));
  exit.edges[1].ell = parse("1.5 - a");
  const auto sys = build_system(exit, kCoarse);
  const auto r = solve(sys);
  const double v = r.field.vertex_reconstruction;
  CHECK(v <= sys.stall + 1e-8);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(r.field.values[i][0] - exit.regime.costs[i] <= v + 1e-8);
    CHECK(v <= r.field.values[i][0] + 1e-8);
  }
}

TEST_CASE("non-convergence is reported") {
  SolveOptions opts;
  opts.max_iters = 3;
  const auto r = solve(basic(), kCoarse, opts);
  CHECK_FALSE(r.report.converged);
  CHECK(r.report.iterations == 3);
}

TEST_CASE("threads do not change the result") {
  const auto sys = build_system(testsupport::random_problem(4), kGrid);
  SolveOptions one, many;
  many.workers = 4;
  const auto a = solve(sys, one), b = solve(sys, many);
  CHECK(sup_distance(a.field, b.field) == 0.0);
  CHECK(a.report.iterations == b.report.iterations);
}

TEST_CASE("interpolation on a field") {
  const auto sys = build_system(basic(), kCoarse);
  auto f = constant_field(sys, 0.0);
  for (std::size_t k = 0; k < f.values[0].size(); ++k) f.values[0][k] = f.s(k);
  CHECK(f.at(0, 1.234) == Approx(1.234));
  CHECK(f.at(0, 99.0) == Approx(4.0));
  auto g = f;
  g.values[1].pop_back();
  CHECK_THROWS_AS(sup_distance(f, g), Error);
}
