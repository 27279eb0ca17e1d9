#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cldnav/errors.hpp"
#include "cldnav/plots.hpp"
#include "cldnav/simulate.hpp"

namespace {

using cldnav::SchemeId;

std::vector<SchemeId> parse_schemes(const std::string& csv) {
  std::vector<SchemeId> schemes;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) schemes.push_back(cldnav::scheme_from_string(item));
  }
  return schemes;
}

int run_command(const std::string& scenario_path, const std::string& scheme_name,
                std::uint64_t seed, const std::string& out_dir) {
  const cldnav::Scenario scenario = cldnav::load_scenario(scenario_path);
  const SchemeId scheme = cldnav::scheme_from_string(scheme_name);
  cldnav::RunMetrics metrics = cldnav::run(scenario, scheme, seed);

  cldnav::ComparisonReport report{scenario.name, {metrics}};
  std::cout << cldnav::format_comparison_table(report);
  std::fprintf(stderr, "wall time %.2f s (max step %.3f s)\n", metrics.wall_time_seconds,
               metrics.max_step_seconds);
  if (!out_dir.empty()) {
    cldnav::write_metrics(report, out_dir);
    cldnav::emit_plots(report, scenario, out_dir);
    std::cout << "metrics and plots written to " << out_dir << "\n";
  }
  return 0;
}

int compare_command(const std::string& scenario_path, const std::string& schemes_csv,
                    std::uint64_t seed, const std::string& out_dir) {
  const cldnav::Scenario scenario = cldnav::load_scenario(scenario_path);
  const std::vector<SchemeId> schemes = parse_schemes(schemes_csv);
  cldnav::ComparisonReport report = cldnav::compare(scenario, schemes, seed);
  std::cout << cldnav::format_comparison_table(report);
  if (!out_dir.empty()) {
    cldnav::write_metrics(report, out_dir);
    cldnav::emit_plots(report, scenario, out_dir);
    std::cout << "metrics and plots written to " << out_dir << "\n";
  }
  return 0;
}

int validate_command(const std::string& scenario_path, int samples) {
  const cldnav::Scenario scenario = cldnav::load_scenario(scenario_path);

  nlohmann::ordered_json doc;
  doc["scenario"] = scenario.name;
  doc["scenario_valid"] = true;
  doc["surrogate_checks"] = nlohmann::ordered_json::array();
  bool all_ok = true;

  // Expansions along the reference path against every sensor.
  const auto& wp = scenario.reference.waypoints;
  std::vector<cldnav::RobotState> anchors;
  for (std::size_t i = 0; i + 1 < wp.size(); ++i) {
    anchors.push_back(wp[i]);
    cldnav::RobotState mid = wp[i];
    mid.x = 0.5 * (wp[i].x + wp[i + 1].x);
    mid.y = 0.5 * (wp[i].y + wp[i + 1].y);
    anchors.push_back(mid);
  }
  anchors.push_back(wp.back());

  for (const auto& anchor : anchors) {
    const cldnav::SurrogateExpansion exp =
        cldnav::make_expansion(anchor, scenario.sensors, scenario.map);
    for (const auto& sensor : scenario.sensors) {
      const cldnav::ValidationReport rep =
          cldnav::validate_surrogate(exp, sensor, scenario.map, samples);
      nlohmann::ordered_json entry;
      entry["expansion"] = {anchor.x, anchor.y};
      entry["sensor"] = sensor.id;
      entry["max_lower_bound_violation"] = rep.max_lower_bound_violation;
      entry["value_mismatch"] = rep.value_mismatch;
      entry["gradient_rel_mismatch"] = rep.gradient_rel_mismatch;
      entry["max_concavity_violation"] = rep.max_concavity_violation;
      entry["samples_used"] = rep.samples_used;
      entry["concavity_pairs"] = rep.concavity_pairs;
      entry["passed"] = rep.passed();
      doc["surrogate_checks"].push_back(entry);
      all_ok = all_ok && rep.passed();
    }
  }
  doc["passed"] = all_ok;
  std::cout << doc.dump(2) << "\n";
  return all_ok ? 0 : 2;
}

int fit_command(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw cldnav::IoError("cannot open '" + csv_path + "'");
  std::vector<std::pair<double, double>> points;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& c : line) {
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    }
    std::istringstream ss(line);
    double n, err;
    if (ss >> n >> err) points.emplace_back(n, err);
  }
  const cldnav::PowerLawFit fit = cldnav::fit_error_curve(points);
  nlohmann::ordered_json doc;
  doc["a"] = fit.a;
  doc["b"] = fit.b;
  doc["points"] = points.size();
  if (!fit.decaying) doc["warning"] = "fitted decay exponent b is not positive";
  std::cout << doc.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory optimization and receding-horizon simulation for "
               "robot-assisted data collection"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string scheme = "cld";
  std::string schemes_csv = "cld,rda_commu,rda";
  std::string out_dir;
  std::string csv_path;
  std::uint64_t seed = 0;
  int samples = 500;

  auto* run_cmd = app.add_subcommand("run", "Run one scheme closed-loop");
  run_cmd->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  run_cmd->add_option("--scheme", scheme, "cld | rda | rda_commu | pmm_commu");
  run_cmd->add_option("--seed", seed, "Seed for optional start perturbation");
  run_cmd->add_option("--out", out_dir, "Output directory for metrics and plots");

  auto* cmp_cmd = app.add_subcommand("compare", "Run several schemes and tabulate");
  cmp_cmd->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  cmp_cmd->add_option("--schemes", schemes_csv, "Comma-separated scheme list");
  cmp_cmd->add_option("--seed", seed, "Seed for optional start perturbation");
  cmp_cmd->add_option("--out", out_dir, "Output directory for metrics and plots");

  auto* val_cmd = app.add_subcommand("validate", "Scenario checks plus surrogate validation");
  val_cmd->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  val_cmd->add_option("--samples", samples, "Sample count per surrogate check");

  auto* fit_cmd = app.add_subcommand("fit", "Fit an error curve from a CSV of (samples, error)");
  fit_cmd->add_option("--csv", csv_path, "Two-column CSV file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return run_command(scenario_path, scheme, seed, out_dir);
    if (cmp_cmd->parsed()) return compare_command(scenario_path, schemes_csv, seed, out_dir);
    if (val_cmd->parsed()) return validate_command(scenario_path, samples);
    if (fit_cmd->parsed()) return fit_command(csv_path);
  } catch (const cldnav::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const cldnav::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
