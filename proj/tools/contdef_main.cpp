#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "contdef/runner.hpp"

namespace {

using namespace contdef;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;    // certificate or constraint failure
constexpr int kExitConfig = 2;  // unusable scenario or arguments

std::filesystem::path resolve_out_dir(const std::string& cli_out, const Scenario& sc) {
  if (!cli_out.empty()) return cli_out;
  if (const char* env = std::getenv("CONTDEF_OUT"); env && *env) return env;
  return sc.output_directory;
}

void print_warnings(const Scenario& sc) {
  for (const auto& w : sc.warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_certify(const std::string& path) {
  Scenario sc = load_scenario(path);
  print_warnings(sc);
  LeaderPlan plan = make_plan(sc);
  CertificateReport report =
      certify_plan(sc.spec, plan_to_transforms(sc.spec, plan, sc.sim.certify_rate_hz));
  std::cout << render_certificate(report);
  double edge = 0.0;
  Triangle tri = sc.spec.leader_triangle();
  for (int i = 0; i < 3; ++i) {
    edge = std::max(edge, (tri[i] - tri[(i + 1) % 3]).norm());
  }
  std::cout << "  contracted edge at floor: "
            << detail::format_double(report.margins.lambda_min * edge) << " m\n";
  return report.pass ? kExitPass : kExitFail;
}

int cmd_run(const std::string& path, const std::string& cli_out, bool force) {
  Scenario sc = load_scenario(path);
  print_warnings(sc);

  LeaderPlan plan = make_plan(sc);
  CertificateReport pre =
      certify_plan(sc.spec, plan_to_transforms(sc.spec, plan, sc.sim.certify_rate_hz));
  if (!pre.pass && !force) {
    std::cout << render_certificate(pre);
    std::cerr << "plan fails certification; rerun with --force to simulate anyway\n";
    return kExitFail;
  }

  std::filesystem::path dir = resolve_out_dir(cli_out, sc);
  RunOutputs out = run_and_write(sc, dir);

  const ConstraintSeries& s = out.series;
  auto flag = [](bool ok) { return ok ? "pass" : "FAIL"; };
  std::cout << "containment      " << flag(s.containment_pass) << "  (min boundary "
            << detail::format_double(s.min_boundary.value) << " m, eps "
            << detail::format_double(s.epsilon) << " m)\n"
            << "bounding         " << flag(s.bounding_pass) << "\n"
            << "collision        " << flag(s.collision_pass) << "  (min separation "
            << detail::format_double(s.min_separation.value) << " m, 2 eps "
            << detail::format_double(2 * s.epsilon) << " m)\n"
            << "local deviation  " << flag(s.local_pass) << "  (max "
            << detail::format_double(s.max_local_deviation.value) << " m, delta "
            << detail::format_double(s.delta) << " m)\n"
            << "global deviation " << flag(s.global_pass) << "  (max "
            << detail::format_double(s.max_global_deviation.value) << " m)\n";
  for (const auto& a : out.anomalies) {
    std::cout << "anomaly: agent " << a.agent << " controller idle ["
              << detail::format_double(a.t_begin) << ", " << detail::format_double(a.t_end)
              << ") s, excluded from statistics\n";
  }
  std::cout << "\n" << render_statistics(out.local_stats, out.global_stats);
  std::cout << "\noutputs in " << dir.string() << "\n";

  bool pass = out.result.certificate.pass && s.all_pass();
  return pass ? kExitPass : kExitFail;
}

int cmd_sweep(const std::string& path, const std::string& param,
              const std::string& values_csv, const std::string& cli_out) {
  std::vector<double> values;
  std::stringstream ss(values_csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      values.push_back(std::stod(tok));
    } catch (const std::exception&) {
      std::cerr << "cannot parse sweep value '" << tok << "'\n";
      return kExitConfig;
    }
  }
  if (values.empty()) {
    std::cerr << "sweep needs at least one value\n";
    return kExitConfig;
  }

  Scenario base = load_scenario(path);
  print_warnings(base);

  std::string header;
  if (param == "v_max") {
    header = "v_max_mps";
  } else if (param == "drop_probability") {
    header = "drop_probability";
  } else if (param == "delta") {
    header = "delta_m";
  } else {
    std::cerr << "unknown sweep parameter '" << param
              << "' (expected v_max, drop_probability, or delta)\n";
    return kExitConfig;
  }

  std::printf("%16s %9s %9s %9s %9s\n", header.c_str(), "mean_cm", "std_cm", "max_cm",
              "all_pass");
  std::string csv = header + ",mean_cm,std_cm,max_cm,all_pass\n";
  for (double v : values) {
    Scenario sc = base;
    if (param == "v_max") {
      sc.plan.variant = PlanVariant::SquareVmax;
      sc.plan.v_max_mps = v;
    } else if (param == "drop_probability") {
      if (v < 0.0 || v > 1.0) {
        std::cerr << "drop probability " << v << " outside [0, 1]\n";
        return kExitConfig;
      }
      sc.link.drop_probability = v;
    } else {
      if (v <= 0.0) {
        std::cerr << "delta must be positive\n";
        return kExitConfig;
      }
      sc.spec.delta_m = v;
    }

    RunResult run = run_simulation(sc);
    ConstraintSeries series = evaluate_constraints(run.trace, sc.spec, run.transforms);
    auto stalls = anomaly_screen(run.trace, sc.sim.stall_threshold_s);
    std::vector<std::pair<double, double>> exclude;
    for (const auto& s : stalls) exclude.emplace_back(s.t_begin, s.t_end);
    StatisticsReport stats = error_statistics(series, DeviationReference::Global,
                                              sc.sim.warmup_exclude_s, exclude);

    std::printf("%16s %9.2f %9.2f %9.2f %9s\n", detail::format_double(v).c_str(),
                stats.pooled.mean * 100.0, stats.pooled.std_dev * 100.0,
                stats.pooled.max * 100.0, series.all_pass() ? "yes" : "no");
    csv += detail::format_double(v) + "," + detail::format_double(stats.pooled.mean * 100) +
           "," + detail::format_double(stats.pooled.std_dev * 100) + "," +
           detail::format_double(stats.pooled.max * 100) + "," +
           (series.all_pass() ? "1" : "0") + "\n";
  }

  std::filesystem::path dir = resolve_out_dir(cli_out, base);
  std::filesystem::create_directories(dir);
  std::ofstream f(dir / "sweep.csv", std::ios::binary);
  f << csv;
  std::cout << "sweep table written to " << (dir / "sweep.csv").string() << "\n";
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continuum-deformation formation control toolkit"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, param, values;
  bool force = false;

  CLI::App* certify = app.add_subcommand("certify", "check the deformation safety margins");
  certify->add_option("scenario", scenario_path, "scenario file")->required();

  CLI::App* run = app.add_subcommand("run", "simulate a scenario and write reports");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("--out", out_dir, "output directory (overrides CONTDEF_OUT and scenario)");
  run->add_flag("--force", force, "simulate even if certification fails");

  CLI::App* sweep = app.add_subcommand("sweep", "rerun a scenario across parameter values");
  sweep->add_option("scenario", scenario_path, "scenario file")->required();
  sweep->add_option("--param", param, "v_max | drop_probability | delta")->required();
  sweep->add_option("--values", values, "comma-separated list")->required();
  sweep->add_option("--out", out_dir, "output directory for sweep.csv");

  try {
    app.parse(argc, argv);
    if (certify->parsed()) return cmd_certify(scenario_path);
    if (run->parsed()) return cmd_run(scenario_path, out_dir, force);
    return cmd_sweep(scenario_path, param, values, out_dir);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  } catch (const contdef::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
