#include <catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <sstream>

#include "junction_hjb/junction_hjb.hpp"

using namespace junction_hjb;
using Catch::Approx;

namespace {

ValueField sample_field() {
  ValueField f;
  f.h = 0.25;
  f.values = {{0.1, 1.0 / 3.0, 2.0}, {0.0, -1e-7, 12345.678901234}};
  f.vertex_reconstruction = 0.1;
  return f;
}

}  // namespace

TEST_CASE("field CSV layout") {
  std::ostringstream os;
  write_field_csv(os, sample_field());
  CHECK(os.str() ==
        "edge,s,value\n"
        "1,0,0.1\n1,0.25,0.333333333\n1,0.5,2\n"
        "2,0,0\n2,0.25,-1e-07\n2,0.5,12345.6789\n"
        "0,0,0.1\n");
}

TEST_CASE("field CSV round-trips to 9 digits") {
  std::ostringstream os;
  const auto f = sample_field();
  write_field_csv(os, f);
  std::istringstream is(os.str());
  const auto g = read_field_csv(is);
  CHECK(g.h == f.h);
  CHECK(g.vertex_reconstruction == f.vertex_reconstruction);
  REQUIRE(g.values.size() == 2);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 3; ++k) CHECK(g.values[i][k] == Approx(f.values[i][k]).epsilon(1e-8));
}

TEST_CASE("field JSON round-trips exactly") {
  std::ostringstream os;
  const auto f = sample_field();
  SolveReport r;
  r.iterations = 12;
  r.converged = true;
  write_field_json(os, f, to_json(r));
  const auto j = nlohmann::json::parse(os.str());
  CHECK(j.at("report").at("iterations") == 12);
  CHECK(j.at("edges").at(1).at("edge") == 2);
  const auto g = field_from_json(j);
  CHECK(g.values == f.values);
  CHECK(g.h == f.h);
  CHECK(g.vertex_reconstruction == f.vertex_reconstruction);
}

TEST_CASE("malformed field files") {
  std::istringstream bad("edge,s,value\n1,0\n");
  CHECK_THROWS_AS(read_field_csv(bad), Error);
  std::istringstream gap("edge,s,value\n2,0,1\n2,0.1,1\n");
  CHECK_THROWS_AS(read_field_csv(gap), Error);
  CHECK_THROWS_AS(field_from_json(nlohmann::json{{"h", 1}}), Error);
  CHECK_THROWS_AS(read_field("/nonexistent/field.csv"), Error);
}

TEST_CASE("trajectory and switch CSV") {
  Trajectory t;
  t.samples = {{0.0, {0, 0.5}, 0.0}, {0.5, {0, 0.0}, 0.25}};
  t.switches = {{SwitchKind::Exit, 0, 0.5, 0.125}, {SwitchKind::Entry, 1, 0.51, 0.0}};
  std::ostringstream a, b;
  write_trajectory_csv(a, t);
  write_switches_csv(b, t);
  CHECK(a.str() == "t,edge,s,accumulated_cost\n0,1,0.5,0\n0.5,1,0,0.25\n");
  CHECK(b.str() == "kind,edge,time,charged_cost\nexit,1,0.5,0.125\nentry,2,0.51,0\n");
}

TEST_CASE("assumption report rendering") {
  const auto r = validate(two_edge_example(1.0, CostRegime::entry({10.0, 0.5})));
  const auto j = to_json(r);
  CHECK(j.at("delta") == 1.0);
  CHECK(j.at("violations").empty());
  std::ostringstream os;
  write_report_text(os, r);
  CHECK_THAT(os.str(), Catch::Matchers::ContainsSubstring("delta = 1\n"));
  CHECK_THAT(os.str(), Catch::Matchers::ContainsSubstring("no violations"));
}

TEST_CASE("parallel_for covers every index once") {
  for (unsigned workers : {1u, 2u, 3u, 8u}) {
    std::vector<std::atomic<int>> hits(1003);
    parallel_for(
        hits.size(), workers,
        [&](std::size_t b, std::size_t e) {
          for (std::size_t k = b; k < e; ++k) hits[k]++;
        },
        1);
    for (auto& h : hits) CHECK(h.load() == 1);
  }
}

TEST_CASE("thread count from the environment") {
  ::setenv("JUNCTION_HJB_THREADS", "3", 1);
  CHECK(threads_from_env() == 3);
  ::setenv("JUNCTION_HJB_THREADS", "0", 1);
  CHECK(threads_from_env() >= 1);
  ::unsetenv("JUNCTION_HJB_THREADS");
  CHECK(threads_from_env() >= 1);
}
