#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "contdef/errors.hpp"
#include "contdef/formation.hpp"
#include "contdef/vec2.hpp"

namespace contdef {

/// One quintic piece r(s) = a + b s + c s^2 + d s^3 + e s^4 + f s^5 over
/// s = t - t0. Coefficients are chosen per segment constructor below.
struct SplineSegment {
  Vec2 a, b, c, d, e, f;
  double t0 = 0.0;
  double tf = 0.0;

  Vec2 position(double t) const {
    double s = t - t0;
    return a + s * (b + s * (c + s * (d + s * (e + s * f))));
  }
  Vec2 velocity(double t) const {
    double s = t - t0;
    return b + s * (2.0 * c + s * (3.0 * d + s * (4.0 * e + s * (5.0 * f))));
  }
  Vec2 acceleration(double t) const {
    double s = t - t0;
    return 2.0 * c + s * (6.0 * d + s * (12.0 * e + s * (20.0 * f)));
  }
};

struct PoseSample {
  Vec2 position, velocity, acceleration;
};

/// Rest-to-rest quintic: start and end at rest, end at rf. In normalized
/// time tau the classic 10 tau^3 - 15 tau^4 + 6 tau^5 blend; peak speed is
/// (15/8) |rf - r0| / (tf - t0) at the midpoint.
inline SplineSegment rest_to_rest_segment(Vec2 r0, Vec2 rf, double t0, double tf) {
  if (!(tf > t0)) throw DegenerateDuration("segment requires tf > t0");
  double T = tf - t0;
  Vec2 delta = rf - r0;
  SplineSegment s;
  s.a = r0;
  s.b = {};
  s.c = {};
  s.d = 10.0 / (T * T * T) * delta;
  s.e = -15.0 / (T * T * T * T) * delta;
  s.f = 6.0 / (T * T * T * T * T) * delta;
  s.t0 = t0;
  s.tf = tf;
  return s;
}

/// Quintic that starts at rest, ends at rest, and reaches speed v_max along
/// `direction` exactly at the segment midpoint; final position is free and
/// works out to r0 + (8/15) v_max T direction. The speed profile
/// 16 v (s/T)^2 (1 - s/T)^2 never exceeds v_max.
inline SplineSegment midpoint_velocity_segment(Vec2 r0, Vec2 direction, double v_max,
                                               double t0, double tf) {
  if (!(tf > t0)) throw DegenerateDuration("segment requires tf > t0");
  double T = tf - t0;
  Vec2 v = v_max * direction;
  SplineSegment s;
  s.a = r0;
  s.b = {};
  s.c = {};
  s.d = 16.0 / (3.0 * T * T) * v;
  s.e = -8.0 / (T * T * T) * v;
  s.f = 16.0 / (5.0 * T * T * T * T) * v;
  s.t0 = t0;
  s.tf = tf;
  return s;
}

/// Per-leader piecewise-quintic mission. Segments are time-contiguous and
/// meet at rest, so position is continuous and joint velocity/acceleration
/// vanish.
struct LeaderPlan {
  std::map<int, std::vector<SplineSegment>> segments;
  std::map<int, std::vector<Vec2>> waypoints;

  double start_time() const {
    double t = std::numeric_limits<double>::infinity();
    for (const auto& [id, segs] : segments)
      if (!segs.empty()) t = std::min(t, segs.front().t0);
    return t;
  }
  double end_time() const {
    double t = -std::numeric_limits<double>::infinity();
    for (const auto& [id, segs] : segments)
      if (!segs.empty()) t = std::max(t, segs.back().tf);
    return t;
  }
};

inline PoseSample evaluate(const LeaderPlan& plan, int leader, double t) {
  auto it = plan.segments.find(leader);
  if (it == plan.segments.end() || it->second.empty()) {
    throw TimeOutOfRange("no plan for leader " + std::to_string(leader));
  }
  const auto& segs = it->second;
  if (t < segs.front().t0 - 1e-9 || t > segs.back().tf + 1e-9) {
    throw TimeOutOfRange("t outside plan horizon");
  }
  const SplineSegment* seg = &segs.back();
  for (const auto& s : segs) {
    if (t <= s.tf) {
      seg = &s;
      break;
    }
  }
  return {seg->position(t), seg->velocity(t), seg->acceleration(t)};
}

namespace detail {

inline void append_rest_leg(LeaderPlan& plan, const std::vector<int>& leaders,
                            const std::map<int, Vec2>& from, const std::map<int, Vec2>& to,
                            double t0, double tf) {
  for (int id : leaders) {
    plan.segments[id].push_back(rest_to_rest_segment(from.at(id), to.at(id), t0, tf));
    plan.waypoints[id].push_back(to.at(id));
  }
}

}  // namespace detail

/// The demo mission: contract the leading triangle about its centroid to
/// `contraction_scale`, translate it around a square (+x, +y, -x, then the
/// closing -y side), and expand back to the start. Every leg is a
/// rest-to-rest segment of `segment_duration`. With `intermediate_waypoint`
/// the closing side is split at its midpoint into two rest-to-rest legs.
inline LeaderPlan contraction_square_mission(const FormationSpec& spec,
                                             double segment_duration,
                                             double contraction_scale,
                                             double square_edge = 1.0,
                                             bool intermediate_waypoint = false) {
  if (!(segment_duration > 0.0)) throw DegenerateDuration("segment_duration must be > 0");
  Triangle lt = spec.leader_triangle();
  Vec2 c = triangle_centroid(lt);

  std::map<int, Vec2> pose1, pose2;
  for (int i = 0; i < 3; ++i) {
    int id = spec.leaders[i];
    pose1[id] = lt[i];
    pose2[id] = c + contraction_scale * (lt[i] - c);
  }
  auto shifted = [&](const std::map<int, Vec2>& base, Vec2 shift) {
    std::map<int, Vec2> out;
    for (const auto& [id, p] : base) out[id] = p + shift;
    return out;
  };
  std::map<int, Vec2> pose3 = shifted(pose2, {square_edge, 0.0});
  std::map<int, Vec2> pose4 = shifted(pose2, {square_edge, square_edge});
  std::map<int, Vec2> pose5 = shifted(pose2, {0.0, square_edge});

  LeaderPlan plan;
  for (int id : spec.leaders) plan.waypoints[id].push_back(pose1.at(id));
  double t = 0.0;
  auto leg = [&](const std::map<int, Vec2>& from, const std::map<int, Vec2>& to) {
    detail::append_rest_leg(plan, spec.leaders, from, to, t, t + segment_duration);
    t += segment_duration;
  };
  leg(pose1, pose2);
  leg(pose2, pose3);
  leg(pose3, pose4);
  leg(pose4, pose5);
  if (intermediate_waypoint) {
    std::map<int, Vec2> mid;
    for (const auto& [id, p] : pose5) mid[id] = 0.5 * (p + pose2.at(id));
    leg(pose5, mid);
    leg(mid, pose2);
  } else {
    leg(pose5, pose2);
  }
  leg(pose2, pose1);
  return plan;
}

/// Pure-translation mission: the whole formation traverses a square using
/// midpoint-velocity segments (+x, +y, -x, -y), one per side, each peaking
/// at v_max. Used for tracking-error studies where v_max is the swept knob.
inline LeaderPlan square_mission(const FormationSpec& spec, double v_max,
                                 double segment_duration) {
  if (!(segment_duration > 0.0)) throw DegenerateDuration("segment_duration must be > 0");
  const Vec2 dirs[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  LeaderPlan plan;
  double t = 0.0;
  std::map<int, Vec2> pos;
  for (int i = 0; i < 3; ++i) {
    int id = spec.leaders[i];
    pos[id] = spec.leader_triangle()[i];
    plan.waypoints[id].push_back(pos[id]);
  }
  for (const Vec2& dir : dirs) {
    for (int id : spec.leaders) {
      auto seg = midpoint_velocity_segment(pos[id], dir, v_max, t, t + segment_duration);
      pos[id] = seg.position(seg.tf);
      plan.segments[id].push_back(seg);
      plan.waypoints[id].push_back(pos[id]);
    }
    t += segment_duration;
  }
  return plan;
}

/// Samples the plan at `sample_rate` and recovers the homogeneous transform
/// from the three desired leader positions at each sample. The final plan
/// time is always included.
inline std::vector<TimedTransform> plan_to_transforms(const FormationSpec& spec,
                                                      const LeaderPlan& plan,
                                                      double sample_rate) {
  double t0 = plan.start_time();
  double tf = plan.end_time();
  Triangle initial = spec.leader_triangle();
  std::vector<TimedTransform> out;
  long n = std::lround(std::ceil((tf - t0) * sample_rate - 1e-9));
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (long k = 0; k <= n; ++k) {
    double t = std::min(t0 + static_cast<double>(k) / sample_rate, tf);
    Triangle current;
    for (int i = 0; i < 3; ++i) current[i] = evaluate(plan, spec.leaders[i], t).position;
    out.push_back({t, transform_from_leaders(initial, current)});
  }
  return out;
}

}  // namespace contdef
