#include "contdef/sim.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "contdef/monitor.hpp"

namespace contdef {
namespace {

Scenario reference_scenario(const std::string& extra = "") {
  std::string text = R"(
[formation]
leader_triangle_edge_m = 4.72
neighbors_4 = 1 3 5
weights_4 = 0.5 0.134 0.366
neighbors_5 = 2 3 4
weights_5 = 0.5 0.134 0.366
)";
  return parse_scenario(text + extra);
}

double max_global_deviation_after(const RunResult& run, const FormationSpec& spec, int id,
                                  double t_min) {
  double worst = 0.0;
  for (std::size_t k = 0; k < run.trace.samples.size(); ++k) {
    const TraceSample& ts = run.trace.samples[k];
    if (ts.t < t_min) continue;
    const AgentSample& as = ts.agents.at(id);
    worst = std::max(worst, distance(as.position, as.desired));
  }
  (void)spec;
  return worst;
}

TEST(Simulation, TraceGridMatchesTransformGrid) {
  Scenario sc = reference_scenario();
  RunResult run = run_simulation(sc);

  EXPECT_EQ(run.trace.samples.size(), 9001u);
  EXPECT_EQ(run.transforms.size(), run.trace.samples.size());
  EXPECT_DOUBLE_EQ(run.trace.samples.front().t, 0.0);
  EXPECT_NEAR(run.trace.samples.back().t, 22.5, 1e-12);
  for (std::size_t k = 0; k < run.trace.samples.size(); k += 500) {
    EXPECT_NEAR(run.trace.samples[k].t, run.transforms[k].t, 1e-9);
  }
  EXPECT_TRUE(run.certificate.pass);
}

TEST(Simulation, ReferenceRunSatisfiesAllConstraints) {
  Scenario sc = reference_scenario();
  RunResult run = run_simulation(sc);
  ConstraintSeries series = evaluate_constraints(run.trace, sc.spec, run.transforms);

  EXPECT_TRUE(series.containment_pass)
      << "min boundary " << series.min_boundary.value << " at t " << series.min_boundary.t;
  EXPECT_TRUE(series.bounding_pass);
  EXPECT_TRUE(series.collision_pass)
      << "min separation " << series.min_separation.value;
  EXPECT_TRUE(series.local_pass)
      << "max local dev " << series.max_local_deviation.value;
  EXPECT_TRUE(series.global_pass)
      << "max global dev " << series.max_global_deviation.value;
  EXPECT_TRUE(certificate_implication_holds(series, run.certificate.pass));
}

TEST(Simulation, LeadersTrackPlanTightly) {
  Scenario sc = reference_scenario();
  RunResult run = run_simulation(sc);
  // Peak error during acceleration phases sits near a/(kp_pos*kp_vel) until
  // the velocity integrator takes over; about 0.17 m for these legs.
  double worst = 0.0;
  for (int id : sc.spec.leaders) {
    worst = std::max(worst, max_global_deviation_after(run, sc.spec, id, 1.0));
  }
  EXPECT_LT(worst, 0.20);
}

TEST(Simulation, FollowersSettleOnFinalPose) {
  Scenario sc = reference_scenario();
  RunResult run = run_simulation(sc);
  const TraceSample& last = run.trace.samples.back();
  for (int id : sc.spec.followers) {
    const AgentSample& as = last.agents.at(id);
    EXPECT_LT(distance(as.position, as.desired), 0.06) << "follower " << id;
    EXPECT_LT(as.velocity.norm(), 0.05) << "follower " << id;
  }
}

TEST(Simulation, RepeatedRunsAreBitIdentical) {
  Scenario sc = reference_scenario(R"(
[link]
drop_probability = 0.2

[disturbance]
wind_speed_mps = 0.5
wind_heading_deg = 30
noise_std_mps2 = 0.05
)");
  RunResult a = run_simulation(sc);
  RunResult b = run_simulation(sc);

  ASSERT_EQ(a.trace.samples.size(), b.trace.samples.size());
  for (std::size_t k = 0; k < a.trace.samples.size(); ++k) {
    const TraceSample& sa = a.trace.samples[k];
    const TraceSample& sb = b.trace.samples[k];
    ASSERT_EQ(sa.agents.size(), sb.agents.size());
    for (const auto& [id, as] : sa.agents) {
      const AgentSample& bs = sb.agents.at(id);
      ASSERT_EQ(as.position.x, bs.position.x) << "k=" << k << " id=" << id;
      ASSERT_EQ(as.position.y, bs.position.y);
      ASSERT_EQ(as.velocity.x, bs.velocity.x);
      ASSERT_EQ(as.setpoint.x, bs.setpoint.x);
      ASSERT_EQ(as.controller_ran, bs.controller_ran);
    }
  }
  ASSERT_EQ(a.deliveries.size(), b.deliveries.size());
  for (std::size_t i = 0; i < a.deliveries.size(); ++i) {
    ASSERT_EQ(a.deliveries[i].deliver_time, b.deliveries[i].deliver_time);
    ASSERT_EQ(a.deliveries[i].dropped, b.deliveries[i].dropped);
  }
}

TEST(Simulation, MasterSeedChangesLossPattern) {
  std::string lossy = R"(
[link]
drop_probability = 0.3
)";
  Scenario s1 = reference_scenario(lossy + "\n[sim]\nmaster_seed = 1\n");
  Scenario s2 = reference_scenario(lossy + "\n[sim]\nmaster_seed = 2\n");
  RunResult a = run_simulation(s1);
  RunResult b = run_simulation(s2);

  ASSERT_EQ(a.deliveries.size(), b.deliveries.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.deliveries.size(); ++i) {
    differs = differs || a.deliveries[i].dropped != b.deliveries[i].dropped;
  }
  EXPECT_TRUE(differs);
}

TEST(Simulation, ControllersIdleOnlyDuringEstimatorWarmup) {
  Scenario sc = reference_scenario();
  RunResult run = run_simulation(sc);

  for (const auto& [id, as] : run.trace.samples.front().agents) {
    EXPECT_FALSE(as.controller_ran) << "agent " << id;
  }
  // Five broadcast periods behind one link latency fill both rings.
  double engaged_by = sc.link.latency + 5.0 / sc.link.rate + 2.0 * sc.sim.dt_s;
  for (const TraceSample& ts : run.trace.samples) {
    if (ts.t < engaged_by) continue;
    for (const auto& [id, as] : ts.agents) {
      EXPECT_TRUE(as.controller_ran) << "agent " << id << " at t " << ts.t;
    }
    break;
  }
  EXPECT_TRUE(anomaly_screen(run.trace, sc.sim.stall_threshold_s).empty());
}

TEST(Simulation, InjectedStallIsFlagged) {
  Scenario sc = reference_scenario(R"(
[sim]
stall_agent = 4
stall_start_s = 2.0
stall_duration_s = 0.35
)");
  RunResult run = run_simulation(sc);
  auto stalls = anomaly_screen(run.trace, sc.sim.stall_threshold_s);

  ASSERT_EQ(stalls.size(), 1u);
  EXPECT_EQ(stalls[0].agent, 4);
  EXPECT_NEAR(stalls[0].t_begin, 2.0, 0.01);
  EXPECT_NEAR(stalls[0].t_end, 2.35, 0.01);
}

TEST(Simulation, PacketLossDegradesGracefully) {
  Scenario sc = reference_scenario(R"(
[link]
drop_probability = 0.3
)");
  RunResult run = run_simulation(sc);
  ConstraintSeries series = evaluate_constraints(run.trace, sc.spec, run.transforms);
  EXPECT_TRUE(series.collision_pass);
  EXPECT_TRUE(series.containment_pass);
  EXPECT_LT(series.max_global_deviation.value, sc.spec.delta_m);
}

TEST(Simulation, WindBiasCompoundsOnlyInLocalMode) {
  std::string wind = R"(
[disturbance]
wind_speed_mps = 0.94
wind_heading_deg = 75
wind_accel_gain_per_s = 0.4

[gains]
ki_vel_per_s2 = 0
)";
  Scenario global = reference_scenario(wind + "\n[followers]\nmode = global_reference\n");
  Scenario local = reference_scenario(wind + "\n[followers]\nmode = local_communication\n");
  RunResult rg = run_simulation(global);
  RunResult rl = run_simulation(local);

  double leader_g = 0.0, leader_l = 0.0, follower_g = 0.0, follower_l = 0.0;
  for (int id : global.spec.leaders) {
    leader_g = std::max(leader_g, max_global_deviation_after(rg, global.spec, id, 2.0));
    leader_l = std::max(leader_l, max_global_deviation_after(rl, local.spec, id, 2.0));
  }
  for (int id : global.spec.followers) {
    follower_g = std::max(follower_g, max_global_deviation_after(rg, global.spec, id, 2.0));
    follower_l = std::max(follower_l, max_global_deviation_after(rl, local.spec, id, 2.0));
  }

  EXPECT_NEAR(leader_g, leader_l, 0.02);
  EXPECT_GT(follower_l, 1.5 * follower_g);
  EXPECT_GT(follower_l, leader_l * 1.5);
}

TEST(Simulation, SquareVmaxVariantRuns) {
  Scenario sc = reference_scenario(R"(
[plan]
variant = square_vmax
v_max_mps = 0.5
)");
  RunResult run = run_simulation(sc);
  EXPECT_NEAR(run.trace.samples.back().t, 15.0, 1e-9);
  ConstraintSeries series = evaluate_constraints(run.trace, sc.spec, run.transforms);
  EXPECT_TRUE(series.collision_pass);
}

}  // namespace
}  // namespace contdef
