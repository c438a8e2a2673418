#pragma once

// Seeded generator of small validated junction problems:
//   f = a (k1 + q x) + k2 a^2,  l = e0 + e1 a + e2 a^2 + e3 x
// with k1 in [0.5, 1.5], q in [0, 0.2], |k2| < k1 / 2, controls in [-1, 1]
// always containing -1 and 1, so f(O, 1) > 0 > f(O, -1).

#include <algorithm>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "junction_hjb/model.hpp"

namespace testsupport {

struct RandomProblemOptions {
  std::size_t edges = 3;
  std::size_t min_controls = 3;
  std::size_t max_controls = 5;
  double min_cost = 0.1;
  double max_cost = 2.0;
};

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string random_problem_text(std::uint64_t seed, const RandomProblemOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  std::ostringstream os;
  os << "lambda = " << num(uni(0.8, 1.5)) << "\nregime = entry\ncosts = ";
  for (std::size_t i = 0; i < opt.edges; ++i) os << (i ? ", " : "") << num(uni(opt.min_cost, opt.max_cost));
  os << '\n';
  for (std::size_t i = 0; i < opt.edges; ++i) {
    const auto n = std::uniform_int_distribution<std::size_t>(opt.min_controls, opt.max_controls)(rng);
    std::vector<double> controls{-1.0, 1.0};
    while (controls.size() < n) {
      const double a = std::round(uni(-0.95, 0.95) * 100.0) / 100.0;
      if (std::find(controls.begin(), controls.end(), a) == controls.end()) controls.push_back(a);
    }
    std::sort(controls.begin(), controls.end());
    const double k1 = uni(0.5, 1.5), q = uni(0.0, 0.2), k2 = uni(-0.5, 0.5) * k1;
    const double e0 = uni(0.2, 1.5), e1 = uni(-0.5, 0.5), e2 = uni(0.0, 0.5), e3 = uni(0.0, 0.1);
    os << "[edge]\ncontrols = ";
    for (std::size_t k = 0; k < controls.size(); ++k) os << (k ? ", " : "") << num(controls[k]);
    os << "\nf = a * (" << num(k1) << " + " << num(q) << " * x) + " << num(k2) << " * a^2\n";
    os << "ell = " << num(e0) << " + " << num(e1) << " * a + " << num(e2) << " * a^2 + " << num(e3) << " * x\n";
  }
  return os.str();
}

inline junction_hjb::Problem random_problem(std::uint64_t seed, const RandomProblemOptions& opt = {}) {
  return junction_hjb::parse_problem(random_problem_text(seed, opt));
}

}  // namespace testsupport
