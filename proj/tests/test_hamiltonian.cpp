#include <catch_amalgamated.hpp>

#include <random>

#include "junction_hjb/builtin.hpp"
#include "junction_hjb/hamiltonian.hpp"
#include "support/random_problems.hpp"

using namespace junction_hjb;
using Catch::Approx;

namespace {

Problem two_edges(std::vector<double> controls, const char* f, const char* ell) {
  Problem p = two_edge_example(1.0, CostRegime::entry({1.0, 1.0}));
  p.edges[0] = EdgeSpec{std::move(controls), parse(f), parse(ell)};
  return p;
}

std::vector<double> dense(int n) {
  std::vector<double> out;
  for (int k = 0; k <= n; ++k) out.push_back(-1.0 + 2.0 * k / n);
  return out;
}

}  // namespace

TEST_CASE("hamiltonian examples") {
  CHECK(hamiltonian(two_edges(dense(200), "a", "1"), 0, 0.0, 2.0) == Approx(1.0));
  const auto base = two_edge_example(1.0, CostRegime::entry({10.0, 0.5}));
  CHECK(hamiltonian(base, 1, 0.0, 0.0) == 0.0);
  const auto single = two_edges({0.3}, "a*x + 1", "a^2 + x");
  CHECK(hamiltonian(single, 0, 2.0, 1.5) == Approx(-1.5 * (0.3 * 2 + 1) - (0.09 + 2)));
}

TEST_CASE("hamiltonian_plus examples") {
  const auto p = two_edges({-1, 0, 1}, "a", "1");
  CHECK(*hamiltonian_plus(p, 0, 3.0) == Approx(-1.0));
  CHECK(*hamiltonian_plus(p, 0, -3.0) == Approx(2.0));
  const auto q = two_edges({-1, 1}, "a", "1 - a");
  CHECK(*hamiltonian_plus(q, 0, 0.0) == Approx(0.0));
  const auto none = two_edges({-1, -0.5}, "a", "1");
  CHECK_FALSE(hamiltonian_plus(none, 0, 1.0).has_value());
}

TEST_CASE("zero velocity controls") {
  const auto costs = zero_velocity_costs(two_edges({-1, 0, 1}, "a", "1"), 0);
  CHECK(costs.size() == 2);
  for (double c : costs) CHECK(c == Approx(1.0));

  const auto pts = zero_velocity_controls(two_edges({-1, 1}, "a", "1 - a"), 0);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].cost == Approx(1.0));
  CHECK(pts[0].theta == Approx(0.5));
  CHECK(pts[0].interpolated());

  CHECK(zero_velocity_costs(two_edges({0, 1}, "1 + a", "1"), 0).empty());
}

TEST_CASE("tangential hamiltonian") {
  const auto base = two_edge_example(1.0, CostRegime::entry({10.0, 0.5}));
  CHECK(tangential_hamiltonian(base) == Approx(-1.0));
  const auto data = compute_vertex_data(base);
  CHECK(data.stall_value(1.0) == Approx(1.0));

  auto constant = base;
  constant.edges[1].ell = parse("3.5");
  constant.edges[0].ell = parse("3.5");
  CHECK(tangential_hamiltonian(constant) == Approx(-3.5));

  auto mins = base;
  mins.edges[0].ell = parse("3");
  mins.edges[1].ell = parse("2");
  CHECK(tangential_hamiltonian(mins) == Approx(-2.0));

  auto stuck = base;
  for (auto& e : stuck.edges) e.controls = {0.5, 1.0};
  CHECK_THROWS_AS(compute_vertex_data(stuck), Error);
}

TEST_CASE("hull exactness against random convex combinations") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pgen(-5.0, 5.0), u(0.0, 1.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = testsupport::random_problem(seed);
    for (std::size_t i = 0; i < p.edges.size(); ++i) {
      const auto& spec = p.edges[i];
      for (int n = 0; n < 50; ++n) {
        const double x = u(rng) * 2.0, pv = pgen(rng);
        const double h = hamiltonian(p, i, x, pv);
        double mixed = -std::numeric_limits<double>::infinity();
        for (int m = 0; m < 20; ++m) {
          const double a1 = spec.controls[rng() % spec.controls.size()];
          const double a2 = spec.controls[rng() % spec.controls.size()];
          const double t = u(rng);
          const double f = t * spec.velocity(x, a1) + (1 - t) * spec.velocity(x, a2);
          const double l = t * spec.cost(x, a1) + (1 - t) * spec.cost(x, a2);
          mixed = std::max(mixed, -pv * f - l);
        }
        CHECK(mixed <= h + 1e-12);
      }
    }
  }
}

TEST_CASE("H_i^+ never exceeds H_i at O") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = testsupport::random_problem(seed);
    for (std::size_t i = 0; i < p.edges.size(); ++i) {
      for (double pv = -4.0; pv <= 4.0; pv += 0.25) {
        const auto plus = hamiltonian_plus(p, i, pv);
        REQUIRE(plus.has_value());
        CHECK(*plus <= hamiltonian(p, i, 0.0, pv) + 1e-12);
      }
    }
  }
}
