#pragma once

// CSV and JSON export/import of value fields, trajectories and reports.
// CSV numbers carry 9 significant digits; JSON numbers round-trip exactly.
// Edge columns hold 1-based labels.

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "junction_hjb/errors.hpp"
#include "junction_hjb/model.hpp"
#include "junction_hjb/oracle.hpp"
#include "junction_hjb/solver.hpp"

namespace junction_hjb {

inline std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Rows `edge,s,value` in edge then s order, then `0,0,v(O)`.
inline void write_field_csv(std::ostream& os, const ValueField& field) {
  os << "edge,s,value\n";
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    for (std::size_t k = 0; k < field.values[i].size(); ++k) {
      os << (i + 1) << ',' << csv_number(field.s(k)) << ',' << csv_number(field.values[i][k]) << '\n';
    }
  }
  os << "0,0," << csv_number(field.vertex_reconstruction) << '\n';
}

inline nlohmann::json to_json(const SolveReport& r) {
  return {{"iterations", r.iterations},     {"final_change", r.final_change}, {"error_bound", r.error_bound},
          {"max_residual", r.max_residual}, {"converged", r.converged},       {"mixed", r.mixed},
          {"shared_vertex_excess", r.shared_vertex_excess}};
}

inline nlohmann::json to_json(const ValueField& field) {
  nlohmann::json edges = nlohmann::json::array();
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    std::vector<double> s(field.values[i].size());
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = field.s(k);
    edges.push_back({{"edge", i + 1}, {"s", s}, {"values", field.values[i]}});
  }
  return {{"h", field.h}, {"edges", edges}, {"vertex_reconstruction", field.vertex_reconstruction}};
}

inline void write_field_json(std::ostream& os, const ValueField& field, const nlohmann::json& report = nullptr) {
  auto j = to_json(field);
  if (!report.is_null()) j["report"] = report;
  os << j.dump(2) << '\n';
}

inline ValueField field_from_json(const nlohmann::json& j) {
  ValueField f;
  try {
    f.h = j.at("h").get<double>();
    f.vertex_reconstruction = j.at("vertex_reconstruction").get<double>();
    for (const auto& e : j.at("edges")) f.values.push_back(e.at("values").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed field JSON: ") + e.what());
  }
  return f;
}

inline ValueField read_field_csv(std::istream& is) {
  std::map<std::size_t, std::vector<std::pair<double, double>>> rows;
  std::optional<double> vertex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "edge,s,value") continue;
    std::istringstream ls(line);
    std::string a, b, c;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c)) {
      throw SpecError(line_no, "expected 'edge,s,value'");
    }
    const auto edge = static_cast<std::size_t>(detail::parse_real(a, line_no, "edge"));
    const double s = detail::parse_real(b, line_no, "s");
    const double v = detail::parse_real(c, line_no, "value");
    if (edge == 0) {
      vertex = v;
    } else {
      rows[edge].emplace_back(s, v);
    }
  }
  if (rows.empty()) throw Error("field CSV has no rows");
  ValueField f;
  std::size_t expected = 1;
  for (auto& [edge, pts] : rows) {
    if (edge != expected++) throw Error("field CSV edges must be labelled 1..N");
    std::vector<double> values;
    for (auto& [s, v] : pts) values.push_back(v);
    if (f.h == 0.0 && pts.size() > 1) f.h = pts[1].first - pts[0].first;
    f.values.push_back(std::move(values));
  }
  f.vertex_reconstruction = vertex.value_or(0.0);
  return f;
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Reads a field written by write_field_csv or write_field_json (chosen by extension).
inline ValueField read_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open field file '" + path + "'");
  if (ends_with(path, ".json")) {
    try {
      return field_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(std::string("malformed field JSON: ") + e.what());
    }
  }
  return read_field_csv(in);
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,edge,s,accumulated_cost\n";
  for (const auto& p : traj.samples) {
    os << csv_number(p.t) << ',' << (p.point.edge + 1) << ',' << csv_number(p.point.s) << ','
       << csv_number(p.accumulated_cost) << '\n';
  }
}

inline void write_switches_csv(std::ostream& os, const Trajectory& traj) {
  os << "kind,edge,time,charged_cost\n";
  for (const auto& e : traj.switches) {
    os << (e.kind == SwitchKind::Entry ? "entry" : "exit") << ',' << (e.edge + 1) << ',' << csv_number(e.time)
       << ',' << csv_number(e.charged) << '\n';
  }
}

inline nlohmann::json to_json(const AssumptionReport& r) {
  nlohmann::json hulls = nlohmann::json::array();
  for (const auto& hull : r.convex_hull_vertices) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : hull) pts.push_back({p.velocity, p.cost});
    hulls.push_back(pts);
  }
  return {{"M", r.M},
          {"L", r.L},
          {"omega_scale", r.omega_scale},
          {"delta", r.delta},
          {"edge_delta", r.edge_delta},
          {"convex_hull_vertices", hulls},
          {"violations", r.violations}};
}

inline void write_report_text(std::ostream& os, const AssumptionReport& r) {
  os << "M = " << detail::shortest(r.M) << '\n';
  os << "L = " << detail::shortest(r.L) << '\n';
  os << "omega_scale = " << detail::shortest(r.omega_scale) << '\n';
  os << "delta = " << detail::shortest(r.delta) << '\n';
  for (std::size_t i = 0; i < r.convex_hull_vertices.size(); ++i) {
    os << "edge " << (i + 1) << " hull at O:";
    for (const auto& p : r.convex_hull_vertices[i]) {
      os << " (" << detail::shortest(p.velocity) << ", " << detail::shortest(p.cost) << ')';
    }
    os << '\n';
  }
  if (r.violations.empty()) os << "no violations\n";
  for (const auto& v : r.violations) os << "violation: " << v << '\n';
}

}  // namespace junction_hjb
