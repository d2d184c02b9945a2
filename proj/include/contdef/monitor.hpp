#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "contdef/errors.hpp"
#include "contdef/formation.hpp"
#include "contdef/geometry.hpp"
#include "contdef/trace.hpp"

namespace contdef {

struct ConstraintSample {
  double t = 0.0;
  std::map<int, double> boundary_distance;  // followers, signed, positive inside
  std::map<int, double> nearest_neighbor;   // all agents
  std::map<int, double> local_deviation;    // all agents
  std::map<int, double> global_deviation;   // all agents
};

struct WorstCase {
  double value = 0.0;
  double t = 0.0;
  int agent = 0;
};

/// The four flight constraints plus the bounding-triangle margin, evaluated
/// on every trace sample. Containment and bounding both read the followers'
/// signed distance to the actual leading triangle: containment needs it to
/// stay above epsilon, bounding above -delta.
struct ConstraintSeries {
  std::vector<ConstraintSample> samples;
  double epsilon = 0.0;
  double delta = 0.0;
  bool containment_pass = false;
  bool bounding_pass = false;
  bool collision_pass = false;
  bool local_pass = false;
  bool global_pass = false;
  WorstCase min_boundary;         // lowest follower boundary distance
  WorstCase min_separation;       // lowest nearest-neighbor distance
  WorstCase max_local_deviation;
  WorstCase max_global_deviation;

  bool all_pass() const {
    return containment_pass && bounding_pass && collision_pass && local_pass && global_pass;
  }
};

inline ConstraintSeries evaluate_constraints(const Trace& trace, const FormationSpec& spec,
                                             const std::vector<TimedTransform>& transforms) {
  ConstraintSeries out;
  out.epsilon = spec.epsilon_m;
  out.delta = spec.delta_m;
  out.min_boundary = {std::numeric_limits<double>::infinity(), 0.0, 0};
  out.min_separation = {std::numeric_limits<double>::infinity(), 0.0, 0};
  out.max_local_deviation = {0.0, 0.0, 0};
  out.max_global_deviation = {0.0, 0.0, 0};

  auto ids = spec.agents();
  std::size_t ti = 0;
  out.samples.reserve(trace.samples.size());
  for (const auto& ts : trace.samples) {
    while (ti < transforms.size() && transforms[ti].t < ts.t - 1e-9) ++ti;
    if (ti >= transforms.size() || std::abs(transforms[ti].t - ts.t) > 1e-9) {
      throw MisalignedTrace("no transform sample at trace time " + std::to_string(ts.t));
    }
    const HomogeneousTransform& ht = transforms[ti].ht;

    ConstraintSample cs;
    cs.t = ts.t;
    Triangle actual_lt;
    for (int i = 0; i < 3; ++i) actual_lt[i] = ts.agents.at(spec.leaders[i]).position;

    for (int f : spec.followers) {
      double d = signed_boundary_distance(ts.agents.at(f).position, actual_lt);
      cs.boundary_distance[f] = d;
      if (d < out.min_boundary.value) out.min_boundary = {d, ts.t, f};
    }

    for (int a : ids) {
      double nn = std::numeric_limits<double>::infinity();
      for (int b : ids) {
        if (a == b) continue;
        nn = std::min(nn, distance(ts.agents.at(a).position, ts.agents.at(b).position));
      }
      cs.nearest_neighbor[a] = nn;
      if (nn < out.min_separation.value) out.min_separation = {nn, ts.t, a};
    }

    for (int a : ids) {
      const AgentSample& s = ts.agents.at(a);
      Vec2 r_ht = apply_transform(ht, spec.initial_positions.at(a));
      double gdev = distance(s.position, r_ht);
      cs.global_deviation[a] = gdev;
      if (gdev > out.max_global_deviation.value) out.max_global_deviation = {gdev, ts.t, a};

      Vec2 local_ref = r_ht;
      if (trace.mode == FollowerMode::LocalCommunication &&
          std::find(spec.followers.begin(), spec.followers.end(), a) !=
              spec.followers.end()) {
        const auto& nbrs = spec.topology.at(a);
        const auto& w = spec.weights.at(a);
        local_ref = {};
        for (int j = 0; j < 3; ++j) local_ref += w[j] * ts.agents.at(nbrs[j]).position;
      }
      double ldev = distance(s.position, local_ref);
      cs.local_deviation[a] = ldev;
      if (ldev > out.max_local_deviation.value) out.max_local_deviation = {ldev, ts.t, a};
    }
    out.samples.push_back(std::move(cs));
  }

  const double tol = 1e-12;
  out.containment_pass = out.min_boundary.value >= spec.epsilon_m - tol;
  out.bounding_pass = out.min_boundary.value >= -spec.delta_m - tol;
  out.collision_pass = out.min_separation.value >= 2.0 * spec.epsilon_m - tol;
  out.local_pass = out.max_local_deviation.value <= spec.delta_m + tol;
  out.global_pass = out.max_global_deviation.value <= spec.delta_m + tol;
  return out;
}

/// The certificate's promise, checked against a finished run: whenever every
/// agent's global deviation stayed within delta and the planned deformation
/// was certified, the containment, bounding, and collision monitors must
/// agree. Vacuously true otherwise.
inline bool certificate_implication_holds(const ConstraintSeries& series, bool certificate_pass) {
  if (!certificate_pass || !series.global_pass) return true;
  return series.containment_pass && series.bounding_pass && series.collision_pass;
}

enum class DeviationReference { Local, Global };

struct ErrorStatistics {
  double mean = 0.0;
  double std_dev = 0.0;
  double max = 0.0;
  long count = 0;
};

struct StatisticsReport {
  std::map<int, ErrorStatistics> per_agent;
  ErrorStatistics pooled;
};

namespace detail {

inline ErrorStatistics finalize_stats(const std::vector<double>& xs) {
  ErrorStatistics st;
  st.count = static_cast<long>(xs.size());
  if (xs.empty()) return st;
  double sum = 0.0;
  for (double x : xs) {
    sum += x;
    st.max = std::max(st.max, x);
  }
  st.mean = sum / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - st.mean) * (x - st.mean);
  st.std_dev = std::sqrt(var / static_cast<double>(xs.size()));
  return st;
}

inline bool excluded(double t, const std::vector<std::pair<double, double>>& intervals) {
  for (const auto& [a, b] : intervals) {
    if (t >= a - 1e-12 && t <= b + 1e-12) return true;
  }
  return false;
}

}  // namespace detail

/// Deviation statistics over the constraint series, skipping the warm-up
/// prefix and any explicit exclusion intervals (population standard
/// deviation).
inline StatisticsReport error_statistics(
    const ConstraintSeries& series, DeviationReference ref, double warmup_exclude_s = 1.0,
    const std::vector<std::pair<double, double>>& exclude = {}) {
  if (series.samples.empty()) throw EmptyTrace("constraint series has no samples");
  double t0 = std::numeric_limits<double>::infinity();
  for (const auto& cs : series.samples) t0 = std::min(t0, cs.t);
  std::map<int, std::vector<double>> per_agent;
  std::vector<double> pooled;
  for (const auto& cs : series.samples) {
    if (cs.t - t0 < warmup_exclude_s - 1e-12) continue;
    if (detail::excluded(cs.t, exclude)) continue;
    const auto& devs =
        ref == DeviationReference::Local ? cs.local_deviation : cs.global_deviation;
    for (const auto& [id, d] : devs) {
      per_agent[id].push_back(d);
      pooled.push_back(d);
    }
  }
  if (pooled.empty()) throw EmptyTrace("no samples remain after exclusions");
  StatisticsReport report;
  for (const auto& [id, xs] : per_agent) report.per_agent[id] = detail::finalize_stats(xs);
  report.pooled = detail::finalize_stats(pooled);
  return report;
}

struct StallInterval {
  int agent = 0;
  double t_begin = 0.0;
  double t_end = 0.0;
  double duration() const { return t_end - t_begin; }
};

/// Intervals where an agent's controller kept skipping for at least
/// `stall_threshold` seconds. The initial estimator warm-up is shorter than
/// the default threshold, so clean traces report nothing.
inline std::vector<StallInterval> anomaly_screen(const Trace& trace,
                                                 double stall_threshold = 0.3) {
  std::vector<StallInterval> out;
  if (trace.samples.empty()) return out;
  std::map<int, double> run_start;  // agent -> first stalled t, while stalled
  auto flush = [&](int id, double start, double end) {
    if (end - start >= stall_threshold - 1e-12) out.push_back({id, start, end});
  };
  for (const auto& ts : trace.samples) {
    for (const auto& [id, s] : ts.agents) {
      auto it = run_start.find(id);
      if (!s.controller_ran) {
        if (it == run_start.end()) run_start[id] = ts.t;
      } else if (it != run_start.end()) {
        flush(id, it->second, ts.t);
        run_start.erase(it);
      }
    }
  }
  double t_end = trace.samples.back().t;
  for (const auto& [id, start] : run_start) flush(id, start, t_end);
  std::sort(out.begin(), out.end(), [](const StallInterval& a, const StallInterval& b) {
    return std::tie(a.t_begin, a.agent) < std::tie(b.t_begin, b.agent);
  });
  return out;
}

}  // namespace contdef
