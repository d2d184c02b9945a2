#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "contdef/formation.hpp"
#include "contdef/guidance.hpp"
#include "contdef/netsim.hpp"
#include "contdef/safety.hpp"
#include "contdef/scenario.hpp"
#include "contdef/trace.hpp"
#include "contdef/vehicle.hpp"

namespace contdef {

struct RunResult {
  Trace trace;
  std::vector<TimedTransform> transforms;  // desired transform per trace sample
  std::vector<DeliveryRecord> deliveries;
  CertificateReport certificate;
  LeaderPlan plan;
};

/// Closed-loop rollout. A ground station samples every vehicle at the link
/// rate and broadcasts, per destination, that vehicle's own pose plus the
/// follower setpoint for its command mode; messages arrive after the link
/// latency (and survive the drop model). Each vehicle estimates its velocity
/// and its setpoint rate from the received history, runs the cascaded
/// controller every dt, and integrates the double-integrator plant under the
/// wind disturbance. One trace sample is recorded per control tick.
inline RunResult run_simulation(const Scenario& sc) {
  const FormationSpec& spec = sc.spec;
  const double dt = sc.sim.dt_s;
  const double rate = sc.link.rate;
  const double period = 1.0 / rate;

  RunResult result;
  result.plan = make_plan(sc);
  const LeaderPlan& plan = result.plan;
  const double t0 = plan.start_time();
  const double tf = plan.end_time();

  result.transforms = plan_to_transforms(spec, plan, 1.0 / dt);
  result.certificate =
      certify_plan(spec, plan_to_transforms(spec, plan, sc.sim.certify_rate_hz));

  struct AgentRuntime {
    bool leader = false;
    VehicleState state;
    FilterRing setpoint_ring;
    Vec2 setpoint;
    bool have_setpoint = false;
    Vec2 held_pose;
    bool seen_any = false;
    double last_msg_t = -1.0;
    Vec2 u;
    bool ran = false;
    DisturbanceModel dist;
  };

  const Vec2 wind = wind_from_heading(sc.disturbance.wind_speed_mps,
                                      sc.disturbance.wind_heading_deg);
  std::map<int, AgentRuntime> agents;
  for (int id : spec.agents()) {
    bool leader = false;
    for (int l : spec.leaders) leader = leader || l == id;
    AgentRuntime rt{leader,
                    {},
                    {},
                    {},
                    false,
                    {},
                    false,
                    -1.0,
                    {},
                    false,
                    DisturbanceModel(wind, sc.disturbance.wind_accel_gain_per_s,
                                     sc.disturbance.noise_std_mps2,
                                     derive_seed(sc.sim.master_seed, "wind", id))};
    rt.state.position = spec.initial_positions.at(id);
    agents.emplace(id, std::move(rt));
  }

  Network net(sc.link, spec.agents(), sc.sim.master_seed);

  auto stalled = [&](int id, double t) {
    return sc.sim.stall_agent == id && t >= sc.sim.stall_start_s - 1e-12 &&
           t < sc.sim.stall_start_s + sc.sim.stall_duration_s - 1e-12;
  };

  const long n_steps = std::lround(std::ceil((tf - t0) / dt - 1e-9));
  long next_broadcast = 0;
  long next_epoch = 0;
  result.trace.mode = sc.mode;
  result.trace.dt = dt;
  result.trace.samples.reserve(static_cast<std::size_t>(n_steps) + 1);

  for (long k = 0; k <= n_steps; ++k) {
    const double t = std::min(t0 + static_cast<double>(k) * dt, tf);

    while (t0 + static_cast<double>(next_broadcast) * period <= t + 1e-9) {
      const double tb = t0 + static_cast<double>(next_broadcast) * period;
      std::map<int, Vec2> desired;
      for (int id : spec.leaders) {
        desired[id] = evaluate(plan, id, std::min(tb, tf)).position;
      }
      std::map<int, Vec2> actual;
      for (const auto& [id, rt] : agents) actual[id] = rt.state.position;
      std::map<int, MessagePayload> payloads;
      for (const auto& [id, rt] : agents) {
        MessagePayload p;
        p.pose = rt.state.position;
        p.sync = static_cast<int>(next_broadcast);
        if (!rt.leader) {
          p.has_setpoint = true;
          p.setpoint = follower_setpoint(sc.mode, spec, id, desired, actual);
        }
        payloads[id] = p;
      }
      net.broadcast(tb, payloads);
      ++next_broadcast;
    }

    // Deliveries update each agent's held values; an onboard estimator ticks
    // on the broadcast grid shifted by the nominal latency and pushes the
    // held values into the filter rings, so ring spacing stays uniform even
    // across packet loss. Events are replayed in time order; a message due
    // exactly on an estimator tick lands first.
    std::vector<Message> due = net.collect_due(t);
    std::size_t mi = 0;
    while (true) {
      double t_epoch = t0 + sc.link.latency + static_cast<double>(next_epoch) * period;
      bool epoch_due = t_epoch <= t + 1e-9;
      bool msg_due = mi < due.size();
      if (!epoch_due && !msg_due) break;
      if (msg_due && (!epoch_due || due[mi].deliver_time <= t_epoch + 1e-12)) {
        const Message& m = due[mi++];
        AgentRuntime& rt = agents.at(m.destination);
        if (m.send_time <= rt.last_msg_t) continue;  // stale after jitter reordering
        rt.last_msg_t = m.send_time;
        rt.state.buffer.push(m.send_time, m.payload.pose);
        rt.held_pose = m.payload.pose;
        rt.seen_any = true;
        if (m.payload.has_setpoint) {
          rt.setpoint = m.payload.setpoint;
          rt.have_setpoint = true;
        }
        continue;
      }
      for (auto& [id, rt] : agents) {
        if (!rt.seen_any) continue;
        rt.state.pose_ring.push(rt.held_pose);
        if (rt.have_setpoint) rt.setpoint_ring.push(rt.setpoint);
      }
      ++next_epoch;
    }

    std::map<int, PoseSample> leader_pose;
    for (int id : spec.leaders) leader_pose[id] = evaluate(plan, id, t);

    for (auto& [id, rt] : agents) {
      if (stalled(id, t)) {
        rt.ran = false;  // controller skipped, last command persists
        continue;
      }
      rt.ran = false;
      if (rt.leader) {
        if (rt.state.pose_ring.full()) {
          const PoseSample& ps = leader_pose.at(id);
          rt.u = controller_step(rt.state, ps.position, ps.velocity, sc.gains, period, dt);
          rt.ran = true;
        } else {
          rt.u = {};
        }
      } else {
        if (rt.state.pose_ring.full() && rt.setpoint_ring.full()) {
          Vec2 ff = derivative_filter(rt.setpoint_ring.snapshot(), period);
          rt.u = controller_step(rt.state, rt.setpoint, ff, sc.gains, period, dt);
          rt.ran = true;
        } else {
          rt.u = {};
        }
      }
    }

    TraceSample ts;
    ts.t = t;
    const HomogeneousTransform& ht = result.transforms[static_cast<std::size_t>(k)].ht;
    for (const auto& [id, rt] : agents) {
      AgentSample as;
      as.desired = rt.leader ? leader_pose.at(id).position
                             : apply_transform(ht, spec.initial_positions.at(id));
      as.setpoint = rt.leader ? leader_pose.at(id).position
                              : (rt.have_setpoint ? rt.setpoint
                                                  : spec.initial_positions.at(id));
      as.position = rt.state.position;
      as.velocity = rt.state.velocity;
      as.controller_ran = rt.ran;
      ts.agents.emplace(id, as);
    }
    result.trace.samples.push_back(std::move(ts));

    if (k < n_steps) {
      const double step = std::min(t0 + static_cast<double>(k + 1) * dt, tf) - t;
      for (auto& [id, rt] : agents) {
        dynamics_step(rt.state, rt.u, rt.dist.sample(), step);
      }
    }
  }

  result.deliveries = net.log();
  return result;
}

}  // namespace contdef
