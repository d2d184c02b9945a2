#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "contdef/csv.hpp"
#include "contdef/monitor.hpp"
#include "contdef/safety.hpp"
#include "contdef/scenario.hpp"
#include "contdef/sim.hpp"

namespace contdef {

struct RunOutputs {
  RunResult result;
  ConstraintSeries series;
  StatisticsReport local_stats;
  StatisticsReport global_stats;
  std::vector<StallInterval> anomalies;
  std::filesystem::path directory;
};

namespace detail {

inline nlohmann::json stats_json(const StatisticsReport& report) {
  nlohmann::json j;
  for (const auto& [id, s] : report.per_agent) {
    j["per_agent"][std::to_string(id)] = {
        {"mean_m", s.mean}, {"std_m", s.std_dev}, {"max_m", s.max}, {"count", s.count}};
  }
  j["pooled"] = {{"mean_m", report.pooled.mean},
                 {"std_m", report.pooled.std_dev},
                 {"max_m", report.pooled.max},
                 {"count", report.pooled.count}};
  return j;
}

inline nlohmann::json worst_json(const WorstCase& w) {
  return {{"value_m", w.value}, {"t_s", w.t}, {"agent", w.agent}};
}

}  // namespace detail

inline nlohmann::json summarize(const Scenario& sc, const RunOutputs& out) {
  const CertificateReport& cert = out.result.certificate;
  nlohmann::json j;
  j["scenario"] = {
      {"mode", sc.mode == FollowerMode::GlobalReference ? "global_reference"
                                                        : "local_communication"},
      {"master_seed", sc.sim.master_seed},
      {"dt_s", sc.sim.dt_s},
      {"agents", sc.spec.agents().size()},
      {"duration_s", out.result.plan.end_time() - out.result.plan.start_time()},
  };
  j["certificate"] = {
      {"pass", cert.pass},
      {"d_s_m", cert.margins.d_s},
      {"d_b_m", cert.margins.d_b},
      {"d_l_m", cert.margins.d_l},
      {"delta_max_m", cert.margins.delta_max},
      {"lambda_min", cert.margins.lambda_min},
      {"worst_singular_value", cert.worst_lambda},
      {"worst_t_s", cert.worst_t},
  };
  j["constraints"] = {
      {"containment_pass", out.series.containment_pass},
      {"bounding_pass", out.series.bounding_pass},
      {"collision_pass", out.series.collision_pass},
      {"local_pass", out.series.local_pass},
      {"global_pass", out.series.global_pass},
      {"all_pass", out.series.all_pass()},
      {"min_boundary", detail::worst_json(out.series.min_boundary)},
      {"min_separation", detail::worst_json(out.series.min_separation)},
      {"max_local_deviation", detail::worst_json(out.series.max_local_deviation)},
      {"max_global_deviation", detail::worst_json(out.series.max_global_deviation)},
  };
  j["statistics"] = {{"local", detail::stats_json(out.local_stats)},
                     {"global", detail::stats_json(out.global_stats)}};
  j["anomalies"] = nlohmann::json::array();
  for (const auto& s : out.anomalies) {
    j["anomalies"].push_back(
        {{"agent", s.agent}, {"t_begin_s", s.t_begin}, {"t_end_s", s.t_end}});
  }
  return j;
}

/// Full scenario-to-files pipeline shared by the command-line front end and
/// the acceptance harness: simulate, evaluate constraints, compute
/// statistics (flagged stall intervals excluded), and write every artifact
/// into `directory`.
inline RunOutputs run_and_write(const Scenario& sc, const std::filesystem::path& directory) {
  RunOutputs out;
  out.directory = directory;
  out.result = run_simulation(sc);
  out.series = evaluate_constraints(out.result.trace, sc.spec, out.result.transforms);
  out.anomalies = anomaly_screen(out.result.trace, sc.sim.stall_threshold_s);

  std::vector<std::pair<double, double>> exclude;
  for (const auto& s : out.anomalies) exclude.emplace_back(s.t_begin, s.t_end);
  out.local_stats = error_statistics(out.series, DeviationReference::Local,
                                     sc.sim.warmup_exclude_s, exclude);
  out.global_stats = error_statistics(out.series, DeviationReference::Global,
                                      sc.sim.warmup_exclude_s, exclude);

  std::filesystem::create_directories(directory);
  auto open = [&](const char* name) {
    std::ofstream f(directory / name, std::ios::binary);
    if (!f) throw Error(std::string("cannot write ") + name);
    return f;
  };

  {
    auto f = open("trace.csv");
    write_trace_csv(f, out.result.trace);
  }
  {
    auto f = open("constraints.csv");
    write_constraints_csv(f, out.series, sc.sim.dt_s, sc.link.rate);
  }
  {
    auto f = open("deliveries.csv");
    write_deliveries_csv(f, out.result.deliveries);
  }
  {
    auto f = open("certificate.txt");
    f << render_certificate(out.result.certificate);
  }
  {
    auto f = open("statistics.txt");
    f << render_statistics(out.local_stats, out.global_stats);
    if (!out.anomalies.empty()) {
      f << "\nexcluded stall intervals:\n";
      for (const auto& s : out.anomalies) {
        f << "  agent " << s.agent << ": [" << detail::format_double(s.t_begin) << ", "
          << detail::format_double(s.t_end) << ") s\n";
      }
    }
  }
  {
    auto f = open("summary.json");
    f << summarize(sc, out).dump(2) << "\n";
  }
  {
    auto f = open("scenario_resolved.scenario");
    f << serialize_scenario(sc);
  }
  return out;
}

}  // namespace contdef
