#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "contdef/format.hpp"
#include "contdef/monitor.hpp"
#include "contdef/netsim.hpp"
#include "contdef/trace.hpp"

namespace contdef {

/// Wide trace table: one row per control tick, nine columns per agent.
/// Column order per agent id (ascending): desired_x/y, setpoint_x/y,
/// position_x/y, velocity_x/y, controller_ran.
inline void write_trace_csv(std::ostream& os, const Trace& trace) {
  os << "t";
  if (!trace.samples.empty()) {
    for (const auto& [id, as] : trace.samples.front().agents) {
      os << ",desired_x_" << id << ",desired_y_" << id << ",setpoint_x_" << id
         << ",setpoint_y_" << id << ",position_x_" << id << ",position_y_" << id
         << ",velocity_x_" << id << ",velocity_y_" << id << ",controller_ran_" << id;
    }
  }
  os << "\n";
  for (const auto& ts : trace.samples) {
    os << detail::format_double(ts.t);
    for (const auto& [id, as] : ts.agents) {
      os << "," << detail::format_double(as.desired.x) << ","
         << detail::format_double(as.desired.y) << ","
         << detail::format_double(as.setpoint.x) << ","
         << detail::format_double(as.setpoint.y) << ","
         << detail::format_double(as.position.x) << ","
         << detail::format_double(as.position.y) << ","
         << detail::format_double(as.velocity.x) << ","
         << detail::format_double(as.velocity.y) << "," << (as.controller_ran ? 1 : 0);
    }
    os << "\n";
  }
}

/// Four constraint panels in one table, decimated to `report_rate` for plot
/// parity. Panel A: boundary_<follower> against eps_m and neg_delta_m.
/// Panel B: nearest_<agent> against two_eps_m. Panel C: local_dev_<agent>
/// and panel D: global_dev_<agent>, both against delta_m.
inline void write_constraints_csv(std::ostream& os, const ConstraintSeries& series,
                                  double sim_dt, double report_rate) {
  os << "t";
  if (!series.samples.empty()) {
    const ConstraintSample& first = series.samples.front();
    for (const auto& [id, v] : first.boundary_distance) os << ",boundary_" << id;
    os << ",eps_m,neg_delta_m";
    for (const auto& [id, v] : first.nearest_neighbor) os << ",nearest_" << id;
    os << ",two_eps_m";
    for (const auto& [id, v] : first.local_deviation) os << ",local_dev_" << id;
    for (const auto& [id, v] : first.global_deviation) os << ",global_dev_" << id;
    os << ",delta_m";
  }
  os << "\n";
  std::size_t count = series.samples.size();
  for (long j = 0;; ++j) {
    auto k = static_cast<std::size_t>(std::lround(static_cast<double>(j) /
                                                  (report_rate * sim_dt)));
    if (k >= count) break;
    const ConstraintSample& cs = series.samples[k];
    os << detail::format_double(cs.t);
    for (const auto& [id, v] : cs.boundary_distance) {
      os << "," << detail::format_double(v);
    }
    os << "," << detail::format_double(series.epsilon) << ","
       << detail::format_double(-series.delta);
    for (const auto& [id, v] : cs.nearest_neighbor) os << "," << detail::format_double(v);
    os << "," << detail::format_double(2.0 * series.epsilon);
    for (const auto& [id, v] : cs.local_deviation) os << "," << detail::format_double(v);
    for (const auto& [id, v] : cs.global_deviation) os << "," << detail::format_double(v);
    os << "," << detail::format_double(series.delta);
    os << "\n";
  }
}

inline void write_deliveries_csv(std::ostream& os,
                                 const std::vector<DeliveryRecord>& log) {
  os << "send_time,deliver_time,destination,dropped\n";
  for (const auto& rec : log) {
    os << detail::format_double(rec.send_time) << ","
       << detail::format_double(rec.deliver_time) << "," << rec.destination << ","
       << (rec.dropped ? 1 : 0) << "\n";
  }
}

namespace detail {

inline std::string stats_row(const std::string& label, const ErrorStatistics& s) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "  %-8s %9.2f %9.2f %9.2f %9ld\n", label.c_str(),
                s.mean * 100.0, s.std_dev * 100.0, s.max * 100.0, s.count);
  return buf;
}

}  // namespace detail

/// Per-agent and pooled error tables in centimeters, one block per
/// deviation reference.
inline std::string render_statistics(const StatisticsReport& local,
                                     const StatisticsReport& global_ref) {
  std::string out;
  const char* header = "  agent    mean_cm    std_cm    max_cm   samples\n";
  out += "local deviation (vs weighted in-neighbor positions)\n";
  out += header;
  for (const auto& [id, s] : local.per_agent) {
    out += detail::stats_row(std::to_string(id), s);
  }
  out += detail::stats_row("pooled", local.pooled);
  out += "\nglobal deviation (vs homogeneous-transform positions)\n";
  out += header;
  for (const auto& [id, s] : global_ref.per_agent) {
    out += detail::stats_row(std::to_string(id), s);
  }
  out += detail::stats_row("pooled", global_ref.pooled);
  return out;
}

}  // namespace contdef
