#pragma once

// Built-in two-edge test problem with a closed-form value function.
//
// Edge 1: f = a, l = 1. Edge 2: f = a, l = 1 - a. Controls {-1, 0, 1}.
// With entry costs (c_1, c_2) and c_2 < 1/lambda:
//   edge 1: v(s) = (1 - e^{-lambda s}) / lambda + c_2 e^{-lambda s}
//   edge 2: v = 0 away from O, v(O) = c_2
// and with c_2 >= 1/lambda edge 1 is constant 1/lambda, as is v(O).

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "junction_hjb/model.hpp"

namespace junction_hjb {

inline std::string two_edge_example_text(double lambda, const CostRegime& regime) {
  Problem p;
  p.lambda = lambda;
  p.regime = regime;
  p.edges.push_back(EdgeSpec{{-1.0, 0.0, 1.0}, parse("a"), parse("1")});
  p.edges.push_back(EdgeSpec{{-1.0, 0.0, 1.0}, parse("a"), parse("1 - a")});
  p.junction.edge_count = 2;
  return format_problem(p);
}

inline Problem two_edge_example(double lambda, const CostRegime& regime) {
  return parse_problem(two_edge_example_text(lambda, regime));
}

/// Closed-form value on edge 1 of the entry-cost example.
inline double two_edge_entry_value(double lambda, double c2, double s) {
  if (c2 >= 1.0 / lambda) return 1.0 / lambda;
  const double decay = std::exp(-lambda * s);
  return (1.0 - decay) / lambda + c2 * decay;
}

struct NamedExample {
  std::string name;
  double lambda;
  CostRegime regime;
};

inline const std::vector<NamedExample>& named_examples() {
  static const std::vector<NamedExample> all{
      {"entry-basic", 1.0, CostRegime::entry({10.0, 0.5})},
      {"entry-constant", 1.0, CostRegime::entry({10.0, 2.0})},
      {"entry-zero", 1.0, CostRegime::entry({10.0, 0.0})},
      {"entry-all-zero", 1.0, CostRegime::entry({0.0, 0.0})},
      {"exit-basic", 1.0, CostRegime::exit({0.0, 0.5})},
  };
  return all;
}

inline std::optional<NamedExample> find_example(const std::string& name) {
  for (const auto& e : named_examples()) {
    if (e.name == name) return e;
  }
  return std::nullopt;
}

}  // namespace junction_hjb
