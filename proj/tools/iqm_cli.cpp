// Command-line front end: validate and run experiment plans, run named
// scenarios, decode time-of-flight measurements.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "iqm/execute.hpp"
#include "iqm/experiments.hpp"
#include "iqm/plan.hpp"

namespace fs = std::filesystem;
using namespace iqm;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string backend;
  std::string out;
  std::string format = "json";
  bool strict = true;
  unsigned threads = 0;
};

void add_common(CLI::App* app, Common& c, bool with_plan_flags) {
  app->add_option("--seed", c.seed, "Master seed (overrides the plan)");
  app->add_option("--backend", c.backend, "Oracle backend")->check(CLI::IsMember({"quantum", "classical"}));
  app->add_option("--out", c.out, "Output directory");
  app->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app->add_option("--threads", c.threads, "Worker threads for trial execution")->check(CLI::Range(1u, 256u));
  if (with_plan_flags) app->add_flag("--strict,!--no-strict", c.strict, "Reject unknown keys (default on)");
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

/// Frequency-table-shaped objects anywhere inside a JSON value.
void collect_tables(const Json& j, const std::string& where, std::vector<std::pair<std::string, FrequencyTable>>& out) {
  if (j.is_object()) {
    if (j.contains("grid") && j.contains("codes") && j.contains("counts") && j.contains("total")) {
      FrequencyTable t;
      t.grid = j["grid"].get<std::string>();
      t.codes = j["codes"].get<std::vector<double>>();
      t.counts = j["counts"].get<std::vector<std::uint64_t>>();
      t.total = j["total"].get<std::uint64_t>();
      out.emplace_back(where + t.grid, std::move(t));
      return;
    }
    for (const auto& [k, v] : j.items()) collect_tables(v, where + k + "_", out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) collect_tables(j[i], where + std::to_string(i) + "_", out);
  }
}

void emit(const Common& c, const Json& report, const std::vector<std::pair<std::string, std::string>>& tables,
          const std::string& default_report, const std::string& plan_csv_dir = {}) {
  if (c.format == "json") {
    const auto text = dump_report(report);
    if (!c.out.empty()) write_file(fs::path(c.out) / "report.json", text);
    else if (!default_report.empty()) write_file(default_report, text);
    else std::cout << text;
    if (!plan_csv_dir.empty() && c.out.empty())
      for (const auto& [name, csv] : tables) write_file(fs::path(plan_csv_dir) / (name + ".csv"), csv);
    return;
  }
  if (!c.out.empty() || !plan_csv_dir.empty()) {
    const fs::path dir = c.out.empty() ? fs::path(plan_csv_dir) : fs::path(c.out);
    for (const auto& [name, csv] : tables) write_file(dir / (name + ".csv"), csv);
    return;
  }
  bool first = true;
  for (const auto& [name, csv] : tables) {
    std::cout << (first ? "" : "\n") << "# " << name << "\n" << csv;
    first = false;
  }
}

ParseOptions parse_options(const Common& c) {
  ParseOptions o;
  o.strict = c.strict;
  o.seed_override = c.seed;
  if (!c.backend.empty()) o.backend_override = backend_kind_from_string(c.backend);
  return o;
}

int print_diagnostics(const ParseResult& r, const std::string& file) {
  for (const auto& d : r.diagnostics) std::cerr << format_diagnostic(d, file) << "\n";
  return r.has_errors() ? kExitParse : kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation engine for generation, measurement and probability trees of microstates"};
  app.require_subcommand(1);

  Common validate_opts, run_opts, scenario_opts;
  std::string validate_plan, run_plan, scenario_name, params_json;
  std::vector<std::string> param_overrides;

  auto* validate = app.add_subcommand("validate", "Parse and check a plan without running it");
  validate->add_option("plan", validate_plan, "Plan JSON file")->required();
  validate->add_flag("--strict,!--no-strict", validate_opts.strict, "Reject unknown keys (default on)");
  validate->add_option("--backend", validate_opts.backend, "Oracle backend")->check(CLI::IsMember({"quantum", "classical"}));

  auto* run = app.add_subcommand("run", "Execute a plan and write its report");
  run->add_option("plan", run_plan, "Plan JSON file")->required();
  add_common(run, run_opts, true);

  auto* scenario = app.add_subcommand("scenario", "Run a named scenario");
  scenario->add_option("name", scenario_name, "Scenario name")->required();
  scenario->add_option("--params", params_json, "Parameter overrides as a JSON object");
  scenario->add_option("--set", param_overrides, "Parameter override key=value (value parsed as JSON)");
  add_common(scenario, scenario_opts, false);

  Point3 impact{}, origin{};
  double t = 0, t0 = 0, mass = 0;
  auto* tof = app.add_subcommand("tof", "Decode a momentum from a time-of-flight impact");
  tof->add_option("--impact", impact, "Impact position x y z")->required();
  tof->add_option("--t", t, "Impact time")->required();
  tof->add_option("--t0", t0, "Emission time")->required();
  tof->add_option("--mass", mass, "Particle mass")->required();
  tof->add_option("--origin", origin, "Emission point x y z");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitParse;
  }

  try {
    if (*validate) {
      const auto text = read_file(validate_plan);
      if (!text) {
        std::cerr << validate_plan << ": cannot read file\n";
        return kExitParse;
      }
      const auto result = parse_experiment_spec(*text, parse_options(validate_opts));
      const int code = print_diagnostics(result, validate_plan);
      if (code == kExitPass)
        std::cout << validate_plan << ": valid plan with " << result.plan->actions.size() << " action(s)\n";
      return code;
    }

    if (*run) {
      const auto text = read_file(run_plan);
      if (!text) {
        std::cerr << run_plan << ": cannot read file\n";
        return kExitParse;
      }
      auto result = parse_experiment_spec(*text, parse_options(run_opts));
      if (print_diagnostics(result, run_plan) != kExitPass) return kExitParse;
      auto plan = *result.plan;
      if (run_opts.threads != 0) plan.threads = run_opts.threads;
      const auto exec = execute_plan(plan);
      emit(run_opts, exec.report, exec.csv_tables, plan.outputs.report, plan.outputs.csv_dir);
      for (const auto& a : exec.report["actions"])
        if (a.value("status", "") != "ok")
          std::cerr << "action " << a.value("index", 0) << " (" << a.value("type", "") << "): " << a.value("status", "")
                    << (a.contains("error") ? ": " + a["error"]["message"].get<std::string>() : std::string()) << "\n";
        else if (!a.value("passed", true))
          for (const auto& v : a["validations"])
            if (!v["passed"].get<bool>())
              std::cerr << "action " << a["index"] << ": validation failed: " << v["name"].get<std::string>() << " "
                        << v["detail"].get<std::string>() << "\n";
      return exec.exit_code;
    }

    if (*scenario) {
      Json params = Json::object();
      try {
        if (!params_json.empty()) params = Json::parse(params_json);
        for (const auto& kv : param_overrides) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
          params[kv.substr(0, eq)] = Json::parse(kv.substr(eq + 1));
        }
      } catch (const std::exception& e) {
        std::cerr << "invalid parameters: " << e.what() << "\n";
        return kExitParse;
      }
      const auto backend = scenario_opts.backend.empty() ? BackendKind::Quantum : backend_kind_from_string(scenario_opts.backend);
      ScenarioReport report;
      try {
        report = run_scenario(scenario_name, params, scenario_opts.seed.value_or(1), backend,
                              SuccessionOptions{scenario_opts.threads == 0 ? 1u : scenario_opts.threads});
      } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        const bool input = e.code() == ErrorCode::UnknownScenario || e.code() == ErrorCode::SchemaViolation;
        return input ? kExitParse : kExitRuntime;
      }
      const auto json = report.to_json();
      std::vector<std::pair<std::string, FrequencyTable>> found;
      collect_tables(json["results"], "", found);
      std::vector<std::pair<std::string, std::string>> tables;
      for (const auto& [name, table] : found) tables.emplace_back(scenario_name + "_" + name, to_csv(table));
      emit(scenario_opts, json, tables, {});
      for (const auto& e : report.expectations)
        if (!e.passed) std::cerr << "expectation failed: " << e.name << " " << e.detail << "\n";
      return report.passed() ? kExitPass : kExitValidation;
    }

    if (*tof) {
      try {
        const auto r = tof_decode(impact, t, t0, mass, origin);
        std::cout << to_json(r).dump() << "\n";
      } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return kExitParse;
      }
      return kExitPass;
    }
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitPass;
}
