#pragma once

// Subcommand bodies for the rgl tool. Each run_* writes its artifacts into an
// output directory and returns the report JSON (without timestamp and hash).

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgl/rgl.hpp"

namespace rgl::cli {

using nlohmann::json;

struct RunOptions {
  Metric metric = Metric::Both;
  int refine = -1;  // per-command default when negative
  Tolerances tol;
  std::optional<std::uint64_t> seed;
  double target = 1e-2;
  double min_gap = kDefaultMinGap;
  std::vector<double> lambdas;
};

inline json options_to_json(const RunOptions& o) {
  json j{{"metric", to_string(o.metric)}, {"refine", o.refine}, {"tol", o.tol.algebraic}, {"target", o.target},
         {"min_gap", o.min_gap}, {"lambdas", o.lambdas}};
  j["seed"] = o.seed ? json(*o.seed) : json(nullptr);
  return j;
}

inline RunOptions options_from_json(const json& j) {
  RunOptions o;
  o.metric = parse_metric(j.at("metric").get<std::string>());
  o.refine = j.at("refine").get<int>();
  o.tol.algebraic = j.at("tol").get<double>();
  o.target = j.at("target").get<double>();
  o.min_gap = j.at("min_gap").get<double>();
  o.lambdas = j.at("lambdas").get<std::vector<double>>();
  if (!j.at("seed").is_null()) o.seed = j["seed"].get<std::uint64_t>();
  o.tol.validate();
  return o;
}

inline io::FamilySpec apply_seed(io::FamilySpec spec, const RunOptions& o) {
  if (o.seed && spec.generator) spec.generator->seed = *o.seed;
  return spec;
}

inline json report_header(const std::string& command, const io::FamilySpec& spec, const RunOptions& o) {
  return {{"schema", io::kSchema}, {"command", command}, {"spec", io::spec_to_json(spec)}, {"options", options_to_json(o)}};
}

inline std::string join(const std::filesystem::path& dir, const std::string& name) { return (dir / name).string(); }

// ---------------------------------------------------------------------------

inline json run_analyze(const io::FamilySpec& raw, const RunOptions& o, const std::filesystem::path& out) {
  const io::FamilySpec spec = apply_seed(raw, o);
  const OperatorFamily family = spec.build();
  RefineOptions ro;
  ro.target = o.target;
  ro.max_depth = o.refine < 0 ? 8 : o.refine;
  const ContinuityReport rep = refine_until(family, o.metric, ro, o.tol);

  io::write_text_file(join(out, "continuity.csv"), io::continuity_csv(rep.last_steps));
  io::write_text_file(join(out, "moduli.csv"), io::moduli_csv(rep.history));
  json j = report_header("analyze", spec, o);
  json history = json::array();
  for (const auto& h : rep.history) history.push_back(io::moduli_to_json(h));
  j["results"] = {{"verdict", to_string(rep.verdict)}, {"depth", rep.depth}, {"history", history}};
  j["artifacts"] = {"continuity.csv", "moduli.csv", "verdict.json"};
  return j;
}

inline json run_phi(const io::FamilySpec& raw, const RunOptions& o, const std::filesystem::path& out) {
  const io::FamilySpec spec = apply_seed(raw, o);
  const OperatorFamily family = spec.build();
  int levels = o.refine < 0 ? 4 : std::max(1, o.refine);
  if (!family.refinable()) levels = 1;

  io::CsvWriter moduli({"points", "step", "raw_graph_modulus", "raw_riesz_modulus", "phi_riesz_modulus",
                        "max_identity_residual", "max_frame_defect", "kernels_preserved"});
  json history = json::array();
  ParamGrid grid = family.grid();
  std::optional<PhiResult> last;
  for (int k = 0; k < levels; ++k) {
    if (k > 0) grid = grid.refined();
    last.emplace(phi_family(family, grid, o.tol));
    const PhiLevel& l = last->level;
    moduli.row({std::to_string(l.points), io::csv_number(l.step), io::csv_number(l.raw_graph),
                io::csv_number(l.raw_riesz), io::csv_number(l.phi_riesz), io::csv_number(l.max_identity_residual),
                io::csv_number(l.max_frame_defect), l.kernels_preserved ? "1" : "0"});
    json lj{{"points", l.points}, {"step", l.step}, {"raw_graph", l.raw_graph}, {"phi_riesz", l.phi_riesz},
            {"max_identity_residual", l.max_identity_residual}, {"max_frame_defect", l.max_frame_defect},
            {"kernels_preserved", l.kernels_preserved}};
    lj["raw_riesz"] = std::isinf(l.raw_riesz) ? json("inf") : json(l.raw_riesz);
    history.push_back(std::move(lj));
  }

  io::CsvWriter paired({"x", "d_graph_step", "d_riesz_step", "d_phi_riesz_step"});
  const StepTable& raw_steps = last->raw_steps;
  for (std::size_t i = 0; i < raw_steps.x.size(); ++i) {
    const bool end = i + 1 == raw_steps.x.size();
    paired.row({io::csv_number(raw_steps.x[i]), end ? "" : io::csv_number(raw_steps.d_graph[i]),
                end ? "" : io::csv_number(raw_steps.d_riesz[i]), end ? "" : io::csv_number(last->phi_steps[i])});
  }
  io::write_text_file(join(out, "phi_moduli.csv"), moduli.str());
  io::write_text_file(join(out, "phi_steps.csv"), paired.str());
  io::write_json_file(join(out, "frame.json"), io::frame_to_json(last->frame));

  json j = report_header("phi", spec, o);
  j["results"] = {{"levels", history}, {"refinable", family.refinable()}};
  j["artifacts"] = {"phi_moduli.csv", "phi_steps.csv", "frame.json", "report.json"};
  return j;
}

inline json run_trivialize(const io::FamilySpec& raw, const RunOptions& o, const std::filesystem::path& out) {
  const io::FamilySpec spec = apply_seed(raw, o);
  const OperatorFamily family = spec.build();
  int levels = o.refine < 0 ? 1 : std::max(1, o.refine);
  if (!family.refinable()) levels = 1;
  SaOptions sa;
  sa.min_gap = o.min_gap;
  if (!o.lambdas.empty()) sa.candidates = o.lambdas;

  io::CsvWriter moduli({"points", "step", "graph_before", "riesz_before", "riesz_after", "max_defect",
                        "max_spectrum_deviation"});
  json history = json::array();
  ParamGrid grid = family.grid();
  std::optional<SaResult> last;
  for (int k = 0; k < levels; ++k) {
    if (k > 0) grid = grid.refined();
    last.emplace(make_riesz_continuous_sa(family, grid, sa, o.tol));
    moduli.row({std::to_string(grid.points), io::csv_number(grid.step()), io::csv_number(last->input.graph),
                io::csv_number(last->input.riesz), io::csv_number(last->result.riesz),
                io::csv_number(last->max_defect), io::csv_number(last->max_spectrum_deviation)});
    history.push_back({{"points", grid.points}, {"step", grid.step()}, {"before", io::moduli_to_json(last->input)},
                       {"after", io::moduli_to_json(last->result)}, {"max_defect", last->max_defect},
                       {"max_spectrum_deviation", last->max_spectrum_deviation}});
  }

  const SaResult& r = *last;
  const StepTable before = step_table(family, grid, Metric::Riesz, o.tol);
  const StepTable after = step_table(r.output, grid, Metric::Riesz, o.tol);
  io::CsvWriter nodes({"x", "chart_lambda", "gap", "defect", "d_riesz_before", "d_riesz_after"});
  for (std::size_t i = 0; i < grid.points; ++i) {
    const bool end = i + 1 == grid.points;
    const bool has_chart = r.trivialized;
    nodes.row({io::csv_number(grid.node(i)), has_chart ? io::csv_number(r.cover.charts[r.cover.assignment[i]].lambda) : "",
               has_chart ? io::csv_number(r.gaps[i]) : "", io::csv_number(r.defects[i]),
               end ? "" : io::csv_number(before.d_riesz[i]), end ? "" : io::csv_number(after.d_riesz[i])});
  }
  json charts = json::array();
  for (const auto& c : r.cover.charts)
    charts.push_back({{"lambda", c.lambda}, {"first", c.first}, {"last", c.last}, {"gaps", c.gaps}});
  json unitaries = json::array();
  for (const auto& u : r.unitaries) unitaries.push_back(io::matrix_to_json(u));
  io::write_json_file(join(out, "frame.json"), {{"schema", io::kSchema}, {"x", grid.nodes()}, {"unitaries", unitaries},
                                                {"charts", charts}, {"assignment", r.cover.assignment}});
  io::write_text_file(join(out, "trivialize.csv"), nodes.str());
  io::write_text_file(join(out, "moduli.csv"), moduli.str());

  json j = report_header("trivialize", spec, o);
  j["results"] = {{"levels", history}, {"trivialized", r.trivialized}, {"note", r.note}, {"charts", charts.size()}};
  j["results"]["essential_sign"] = r.sign ? json(to_string(*r.sign)) : json(nullptr);
  j["artifacts"] = {"frame.json", "trivialize.csv", "moduli.csv", "report.json"};
  return j;
}

inline json run_gallery(const io::FamilySpec& raw, const RunOptions& o, const std::filesystem::path& out) {
  const io::FamilySpec spec = apply_seed(raw, o);
  if (!spec.generator) throw Error(ErrorKind::Precondition, "gallery needs a generator spec");
  const OperatorFamily family = spec.build();
  io::FamilySpec values;
  values.grid = spec.grid;
  for (std::size_t i = 0; i < spec.grid.points; ++i) values.values.push_back(family.evaluate(i));
  io::write_json_file(join(out, "family.json"), io::spec_to_json(spec));
  io::write_json_file(join(out, "values.json"), io::spec_to_json(values));

  json j = report_header("gallery", spec, o);
  j["artifacts"] = {"family.json", "values.json", "report.json"};
  j["results"] = {{"generator", spec.generator->name}, {"points", spec.grid.points},
                  {"provenance", family.provenance().params}};
  if (spec.generator->name == "dixmier_douady") {
    const auto& p = family.provenance().params;
    DdSpec dd{p["c"].get<std::vector<double>>(), p["from"].get<std::vector<double>>(), p["to"].get<std::vector<double>>()};
    const DdReport rep = dd_constancy_check(dd, spec.grid, spec.generator->seed);
    json conj = json::array();
    for (const auto& c : rep.conjugated) conj.push_back({{"name", c.name}, {"spread", c.spread}, {"modulus", c.modulus}});
    j["results"]["dd_check"] = {{"deviation", rep.deviation}, {"raw_modulus", rep.raw_modulus},
                                {"raw_spread", rep.raw_spread}, {"endpoint_oracle", rep.endpoint_oracle},
                                {"conjugated", conj}};
  }
  return j;
}

/// Dispatch used by both the CLI and report replay.
inline json run_command(const std::string& command, const io::FamilySpec& spec, const RunOptions& o,
                        const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  if (command == "analyze") return run_analyze(spec, o, out);
  if (command == "phi") return run_phi(spec, o, out);
  if (command == "trivialize") return run_trivialize(spec, o, out);
  if (command == "gallery") return run_gallery(spec, o, out);
  throw Error(ErrorKind::Precondition, "unknown command '" + command + "'");
}

/// Exit status for a finished report: 3 for inconclusive verdicts.
inline int status_of(const json& report) {
  if (report.contains("results") && report["results"].contains("verdict") &&
      report["results"]["verdict"] == to_string(Verdict::Inconclusive))
    return 3;
  return 0;
}

}  // namespace rgl::cli
