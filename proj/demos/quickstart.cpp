// Builds the five-agent formation in code, certifies the mission envelope,
// runs the closed-loop simulation, and prints the verdicts. Mirrors what
// `contdef run` does for a scenario file, minus the report files.

#include <cmath>
#include <cstdio>

#include "contdef/monitor.hpp"
#include "contdef/runner.hpp"
#include "contdef/scenario.hpp"
#include "contdef/sim.hpp"

using namespace contdef;

static FormationSpec five_agent_formation() {
  FormationSpec spec;
  spec.leaders = {1, 2, 3};
  spec.followers = {4, 5};
  spec.epsilon_m = 0.28;
  spec.delta_m = 0.40;

  // Equilateral leader triangle, 4.72 m edge, centroid at the origin.
  const double e = 4.72;
  const double h = e / std::sqrt(3.0);
  spec.initial_positions[1] = {0.0, h};
  spec.initial_positions[2] = {-e / 2.0, -h / 2.0};
  spec.initial_positions[3] = {e / 2.0, -h / 2.0};

  spec.topology[4] = {1, 3, 5};
  spec.weights[4] = {0.5, 0.134, 0.366};
  spec.topology[5] = {2, 3, 4};
  spec.weights[5] = {0.5, 0.134, 0.366};

  // Follower starts must satisfy r_i = sum_j w_ij r_j; solve rather than guess.
  std::map<int, Vec2> leader_pos;
  for (int id : spec.leaders) leader_pos[id] = spec.initial_positions[id];
  auto solved = derive_follower_positions(spec.leaders, leader_pos, spec.followers,
                                          spec.topology, spec.weights);
  for (const auto& [id, p] : solved) spec.initial_positions[id] = p;
  return spec;
}

int main() {
  Scenario sc;
  sc.spec = five_agent_formation();
  sc.plan.variant = PlanVariant::ContractSquare;   // contract, square, expand
  sc.plan.segment_duration_s = 3.75;
  sc.plan.contraction_auto = true;                 // use the certified floor
  sc.mode = FollowerMode::GlobalReference;
  sc.link.rate = 60.0;
  sc.link.latency = 0.040;
  sc.sim.master_seed = 20260817;

  SafetyMargins m = compute_margins(sc.spec);
  std::printf("certified contraction floor: %.6f (delta_max %.4f m)\n",
              m.lambda_min, m.delta_max);

  RunResult result = run_simulation(sc);
  std::printf("certificate: %s\n", result.certificate.pass ? "pass" : "FAIL");

  ConstraintSeries series =
      evaluate_constraints(result.trace, sc.spec, result.transforms);
  std::printf("containment   %s  (worst %.3f m vs eps %.2f)\n",
              series.containment_pass ? "pass" : "FAIL",
              series.min_boundary.value, sc.spec.epsilon_m);
  std::printf("collision     %s  (worst %.3f m vs 2*eps %.2f)\n",
              series.collision_pass ? "pass" : "FAIL",
              series.min_separation.value, 2.0 * sc.spec.epsilon_m);
  std::printf("local dev     %s  (worst %.3f m vs delta %.2f)\n",
              series.local_pass ? "pass" : "FAIL",
              series.max_local_deviation.value, sc.spec.delta_m);
  std::printf("global dev    %s  (worst %.3f m vs delta %.2f)\n",
              series.global_pass ? "pass" : "FAIL",
              series.max_global_deviation.value, sc.spec.delta_m);

  StatisticsReport stats = error_statistics(series, DeviationReference::Global,
                                            sc.sim.warmup_exclude_s);
  std::printf("pooled tracking error: mean %.2f cm, max %.2f cm\n",
              stats.pooled.mean * 100.0, stats.pooled.max * 100.0);
  return series.all_pass() && result.certificate.pass ? 0 : 1;
}
