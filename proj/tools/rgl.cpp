// rgl: continuity analysis, Phi, trivialization and gallery runs from the shell.
//
// exit codes: 0 ok, 2 bad input / precondition / refinement failure, 3 inconclusive

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "commands.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rgl;

namespace {

constexpr int kExitError = 2;

std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

// hash over everything except the timestamp and the hash itself
std::string content_hash(json report) {
  report.erase("timestamp");
  report.erase("content_hash");
  return sha256_hex(report.dump());
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string report_name(const std::string& command) { return command == "analyze" ? "verdict.json" : "report.json"; }

json finish(json report, const fs::path& out) {
  report["content_hash"] = content_hash(report);
  report["timestamp"] = utc_now();
  io::write_json_file((out / report_name(report["command"].get<std::string>())).string(), report);
  return report;
}

fs::path find_report(const fs::path& dir) {
  for (const char* name : {"report.json", "verdict.json"})
    if (fs::exists(dir / name)) return dir / name;
  throw Error(ErrorKind::Precondition, "no report.json or verdict.json in " + dir.string());
}

void print_summary(const json& r, std::ostream& os) {
  os << r["command"].get<std::string>() << ": ";
  const json& res = r["results"];
  if (res.contains("verdict")) os << "verdict " << res["verdict"].get<std::string>() << ", depth " << res["depth"];
  if (res.contains("levels") && !res["levels"].empty()) {
    const json& last = res["levels"].back();
    os << res["levels"].size() << " level(s), last " << last["points"] << " points";
    if (last.contains("phi_riesz")) os << ", phi riesz modulus " << last["phi_riesz"];
    if (last.contains("after")) os << ", riesz after " << last["after"].value("riesz", json(nullptr));
  }
  if (res.contains("generator")) os << res["generator"].get<std::string>() << " on " << res["points"] << " points";
  if (res.contains("note")) os << " (" << res["note"].get<std::string>() << ")";
  os << "\n";
}

// "key=value" with value parsed as JSON when possible, else kept as a string
json parse_params(const std::vector<std::string>& items) {
  json params = json::object();
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Error(ErrorKind::Precondition, "parameter '" + item + "' is not key=value");
    const std::string value = item.substr(eq + 1);
    try {
      params[item.substr(0, eq)] = json::parse(value);
    } catch (const json::parse_error&) {
      params[item.substr(0, eq)] = value;
    }
  }
  return params;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riesz and graph continuity of operator families"};
  app.require_subcommand(1);

  std::string family_path;
  std::string metric = "both";
  int refine = -1;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::string out = "report";
  double target = 1e-2;
  double min_gap = kDefaultMinGap;
  std::vector<double> lambdas;

  auto common = [&](CLI::App* sub, bool needs_family) {
    auto* fam = sub->add_option("--family", family_path, "family spec JSON");
    if (needs_family) fam->required()->check(CLI::ExistingFile);
    sub->add_option("--refine", refine, "refinement depth or number of levels");
    sub->add_option("--tol", tol, "algebraic tolerance (default: RGL_TOL or 1e-9)");
    sub->add_option("--seed", seed, "seed override for randomized generators");
    sub->add_option("--out", out, "output directory")->capture_default_str();
  };

  auto* analyze = app.add_subcommand("analyze", "graph/Riesz moduli under refinement with a verdict");
  common(analyze, true);
  analyze->add_option("--metric", metric, "graph | riesz | both")->capture_default_str()
      ->check(CLI::IsMember({"graph", "riesz", "both"}));
  analyze->add_option("--target", target, "modulus counted as resolved")->capture_default_str();

  auto* phi = app.add_subcommand("phi", "apply Phi(A) = A V(A) and compare raw and Phi moduli");
  common(phi, true);

  auto* triv = app.add_subcommand("trivialize", "conjugate a self-adjoint family to a Riesz-continuous one");
  common(triv, true);
  triv->add_option("--min-gap", min_gap, "minimal distance between a level and the spectrum")->capture_default_str();
  triv->add_option("--lambda", lambdas, "spectral levels to use (default: widest gaps)");

  std::string name;
  std::vector<std::string> params;
  std::optional<std::size_t> points;
  auto* gallery = app.add_subcommand("gallery", "write a gallery family spec and its node values");
  common(gallery, false);
  gallery->add_option("name", name, "generator name (omit to list)");
  gallery->add_option("--param", params, "generator parameter key=value (repeatable)");
  gallery->add_option("--points", points, "grid points");

  std::string report_dir;
  bool replay = false;
  auto* report = app.add_subcommand("report", "check a report's hash, print a summary, optionally replay it");
  report->add_option("--in", report_dir, "report directory")->required()->check(CLI::ExistingDirectory);
  report->add_flag("--replay", replay, "re-run the embedded spec and compare hashes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    cli::RunOptions opts;
    opts.metric = parse_metric(metric);
    opts.refine = refine;
    opts.tol = Tolerances::from_env();
    if (tol) opts.tol.algebraic = *tol;
    opts.tol.validate();
    opts.seed = seed;
    opts.target = target;
    opts.min_gap = min_gap;
    opts.lambdas = lambdas;

    if (*report) {
      const fs::path path = find_report(report_dir);
      const json r = io::read_json_file(path.string());
      io::check_schema(r);
      const std::string stored = r.value("content_hash", "");
      if (content_hash(r) != stored) {
        std::cerr << "content hash mismatch in " << path << "\n";
        return kExitError;
      }
      print_summary(r, std::cout);
      if (replay) {
        const fs::path again = fs::path(report_dir) / "replay";
        const json fresh = finish(cli::run_command(r["command"], io::spec_from_json(r["spec"]),
                                                   cli::options_from_json(r["options"]), again), again);
        const bool same = fresh["content_hash"] == r["content_hash"];
        std::cout << "replay " << (same ? "identical" : "DIFFERS") << " (" << again.string() << ")\n";
        if (!same) return kExitError;
      }
      return cli::status_of(r);
    }

    std::string command;
    io::FamilySpec spec;
    if (*gallery) {
      command = "gallery";
      if (name.empty()) {
        for (const auto& n : generator_names()) std::cout << n << "\n";
        return 0;
      }
      if (!family_path.empty()) {
        spec = io::spec_from_json(io::read_json_file(family_path), opts.tol);
      } else {
        spec.generator = GeneratorSpec{name, parse_params(params), 0};
        spec.grid = default_grid(name);
        if (points) spec.grid.points = *points;
        spec.grid.validate();
      }
    } else {
      command = analyze->parsed() ? "analyze" : phi->parsed() ? "phi" : "trivialize";
      spec = io::spec_from_json(io::read_json_file(family_path), opts.tol);
    }
    const json r = finish(cli::run_command(command, spec, opts, out), out);
    print_summary(r, std::cout);
    return cli::status_of(r);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what();
    if (e.index()) std::cerr << " [index " << *e.index() << "]";
    std::cerr << "\n";
    return e.kind() == ErrorKind::Inconclusive ? 3 : kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
