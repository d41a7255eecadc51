#pragma once

// JSON and CSV formats (all carry "schema": 1).
//
//   matrix      nested row-major array of [re, im] pairs
//   relation    {"n": n, "m": m, "projection": matrix}
//   grid        {"start": r, "end": r, "points": k, "offset": r | null}
//   family      {"schema": 1, "generator": name, "params": {...}, "seed": s, "grid": grid}
//            or {"schema": 1, "explicit": [matrix | relation, ...], "grid": grid}
//   frame       {"schema": 1, "x": [...], "base": matrix, "unitaries": [matrix, ...]}
//
// CSV files start with a "# schema 1" line; missing values are empty fields.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgl/error.hpp"
#include "rgl/families.hpp"
#include "rgl/gallery.hpp"
#include "rgl/linalg.hpp"
#include "rgl/operator.hpp"
#include "rgl/phi.hpp"

namespace rgl::io {

using nlohmann::json;

inline constexpr int kSchema = 1;

inline void check_schema(const json& j) {
  if (j.contains("schema") && (!j["schema"].is_number_integer() || j["schema"].get<int>() != kSchema))
    throw Error(ErrorKind::Precondition, "unsupported schema version");
}

// ---------------------------------------------------------------------------
// Matrices and relations

inline json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back({m(i, k).real(), m(i, k).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Accepts [re, im] pairs or plain real numbers as entries.
inline Mat matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw Error(ErrorKind::Shape, "matrix must be a non-empty array of rows");
  const Index rows = static_cast<Index>(j.size());
  if (!j[0].is_array() || j[0].empty()) throw Error(ErrorKind::Shape, "matrix rows must be non-empty arrays");
  const Index cols = static_cast<Index>(j[0].size());
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw Error(ErrorKind::Shape, "matrix rows have different lengths");
    for (Index k = 0; k < cols; ++k) {
      const json& e = row[static_cast<std::size_t>(k)];
      if (e.is_number()) {
        m(i, k) = Complex(e.get<double>(), 0.0);
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        m(i, k) = Complex(e[0].get<double>(), e[1].get<double>());
      } else {
        throw Error(ErrorKind::Shape, "matrix entries must be numbers or [re, im] pairs");
      }
    }
  }
  return m;
}

inline json relation_to_json(const ClosedRelation& r) {
  return {{"n", r.domain_dim()}, {"m", r.codomain_dim()}, {"projection", matrix_to_json(r.projection())}};
}

inline ClosedRelation relation_from_json(const json& j, const Tolerances& tol = {}) {
  if (!j.is_object() || !j.contains("n") || !j.contains("m") || !j.contains("projection"))
    throw Error(ErrorKind::Shape, "relation needs n, m and projection");
  return ClosedRelation(matrix_from_json(j["projection"]), j["n"].get<Index>(), j["m"].get<Index>(), tol);
}

inline json value_to_json(const FamilyValue& v) {
  if (const auto* op = std::get_if<MatrixOperator>(&v)) return matrix_to_json(op->matrix());
  return relation_to_json(std::get<ClosedRelation>(v));
}

inline FamilyValue value_from_json(const json& j, const Tolerances& tol = {}) {
  if (j.is_object()) return relation_from_json(j, tol);
  return MatrixOperator(matrix_from_json(j));
}

// ---------------------------------------------------------------------------
// Grids and family specs

inline json grid_to_json(const ParamGrid& g) {
  json j{{"start", g.start}, {"end", g.end}, {"points", g.points}};
  j["offset"] = g.offset ? json(*g.offset) : json(nullptr);
  return j;
}

inline ParamGrid grid_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Precondition, "grid must be an object");
  ParamGrid g;
  try {
    g.start = j.at("start").get<double>();
    g.end = j.at("end").get<double>();
    g.points = j.at("points").get<std::size_t>();
    if (j.contains("offset") && !j["offset"].is_null()) g.offset = j["offset"].get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Precondition, std::string("bad grid: ") + e.what());
  }
  g.validate();
  return g;
}

struct FamilySpec {
  std::optional<GeneratorSpec> generator;
  std::vector<FamilyValue> values;  // explicit families
  ParamGrid grid;

  OperatorFamily build() const {
    if (generator) return generate(*generator, grid);
    return OperatorFamily::explicit_values(values, grid);
  }
};

inline json spec_to_json(const FamilySpec& s) {
  json j{{"schema", kSchema}};
  if (s.generator) {
    j["generator"] = s.generator->name;
    j["params"] = s.generator->params.is_null() ? json::object() : s.generator->params;
    j["seed"] = s.generator->seed;
  } else {
    json vals = json::array();
    for (const auto& v : s.values) vals.push_back(value_to_json(v));
    j["explicit"] = std::move(vals);
  }
  j["grid"] = grid_to_json(s.grid);
  return j;
}

inline FamilySpec spec_from_json(const json& j, const Tolerances& tol = {}) {
  if (!j.is_object()) throw Error(ErrorKind::Precondition, "family spec must be a JSON object");
  check_schema(j);
  FamilySpec s;
  if (j.contains("generator") == j.contains("explicit"))
    throw Error(ErrorKind::Precondition, "family spec needs exactly one of 'generator' or 'explicit'");
  if (j.contains("generator")) {
    GeneratorSpec g;
    g.name = j["generator"].get<std::string>();
    if (j.contains("params")) g.params = j["params"];
    if (j.contains("seed")) g.seed = j["seed"].get<std::uint64_t>();
    s.generator = std::move(g);
    s.grid = j.contains("grid") ? grid_from_json(j["grid"]) : default_grid(s.generator->name);
  } else {
    if (!j["explicit"].is_array() || j["explicit"].empty())
      throw Error(ErrorKind::Precondition, "'explicit' must be a non-empty array");
    for (const auto& v : j["explicit"]) s.values.push_back(value_from_json(v, tol));
    if (!j.contains("grid")) throw Error(ErrorKind::Precondition, "explicit families need a grid");
    s.grid = grid_from_json(j["grid"]);
  }
  return s;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Precondition, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Precondition, path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Precondition, "cannot write " + path);
  out << text;
}

inline void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

inline json frame_to_json(const Frame& f) {
  json us = json::array();
  for (const auto& u : f.unitaries) us.push_back(matrix_to_json(u));
  return {{"schema", kSchema}, {"x", f.x}, {"base", matrix_to_json(f.base)}, {"unitaries", std::move(us)}};
}

// ---------------------------------------------------------------------------
// CSV

/// Shortest round-trip text for finite values; empty for NaN; "inf"/"-inf" otherwise.
inline std::string csv_number(double x) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {
    out_ << "# schema " << kSchema << "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
    out_ << "\n";
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size()) throw Error(ErrorKind::Shape, "CSV row has the wrong number of cells");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

  std::string str() const { return out_.str(); }

 private:
  std::vector<std::string> columns_;
  std::ostringstream out_;
};

inline std::string continuity_csv(const StepTable& t) {
  CsvWriter w({"x", "d_graph_step", "d_riesz_step", "is_graph", "ker_dim"});
  for (std::size_t i = 0; i < t.x.size(); ++i) {
    const bool last = i + 1 == t.x.size();
    w.row({csv_number(t.x[i]), last ? "" : csv_number(t.d_graph[i]), last ? "" : csv_number(t.d_riesz[i]),
           t.is_graph[i] ? "1" : "0", t.ker_dim[i] < 0 ? "" : std::to_string(t.ker_dim[i])});
  }
  return w.str();
}

inline std::string moduli_csv(const std::vector<LevelModuli>& history) {
  CsvWriter w({"points", "step", "graph_modulus", "riesz_modulus"});
  for (const auto& h : history)
    w.row({std::to_string(h.points), csv_number(h.step), csv_number(h.graph),
           h.riesz_computed ? csv_number(h.riesz) : ""});
  return w.str();
}

inline json moduli_to_json(const LevelModuli& m) {
  json j{{"points", m.points}, {"step", m.step}, {"graph", m.graph}};
  if (m.riesz_computed) j["riesz"] = std::isinf(m.riesz) ? json("inf") : json(m.riesz);
  return j;
}

}  // namespace rgl::io
