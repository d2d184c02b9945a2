#include "contdef/scenario.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "contdef/safety.hpp"
#include "test_support.hpp"

namespace contdef {
namespace {

std::string demo_text() {
  return R"(# five agent demo
[formation]
leader_triangle_edge_m = 4.72
epsilon_m = 0.28
delta_m = 0.40
leaders = 1 2 3
followers = 4 5
neighbors_4 = 1 3 5
weights_4 = 0.5 0.134 0.366
neighbors_5 = 2 3 4
weights_5 = 0.5 0.134 0.366

[plan]
variant = contract_square
segment_duration_s = 3.75
contraction = auto

[followers]
mode = global_reference

[link]
rate_hz = 60
latency_s = 0.040
drop_probability = 0

[sim]
dt_s = 0.0025
master_seed = 7
)";
}

// Formation only; every other key at its default, free for overrides.
std::string minimal_text() {
  return R"(
[formation]
leader_triangle_edge_m = 4.72
neighbors_4 = 1 3 5
weights_4 = 0.5 0.134 0.366
neighbors_5 = 2 3 4
weights_5 = 0.5 0.134 0.366
)";
}

TEST(ScenarioParse, DemoMatchesHandBuiltSpec) {
  Scenario sc = parse_scenario(demo_text());
  FormationSpec ref = contdef_test::five_agent_spec();

  ASSERT_EQ(sc.spec.leaders, ref.leaders);
  ASSERT_EQ(sc.spec.followers, ref.followers);
  EXPECT_DOUBLE_EQ(sc.spec.epsilon_m, ref.epsilon_m);
  EXPECT_DOUBLE_EQ(sc.spec.delta_m, ref.delta_m);
  for (int id : sc.spec.agents()) {
    EXPECT_NEAR(sc.spec.initial_positions.at(id).x, ref.initial_positions.at(id).x, 1e-12)
        << "agent " << id;
    EXPECT_NEAR(sc.spec.initial_positions.at(id).y, ref.initial_positions.at(id).y, 1e-12)
        << "agent " << id;
  }
  EXPECT_TRUE(sc.warnings.empty());
  EXPECT_EQ(sc.mode, FollowerMode::GlobalReference);
  EXPECT_EQ(sc.sim.master_seed, 7u);
}

TEST(ScenarioParse, DefaultsFillUnspecifiedSections) {
  Scenario sc = parse_scenario(demo_text());
  EXPECT_DOUBLE_EQ(sc.link.jitter_std, 0.0);
  EXPECT_FALSE(sc.link.burst.enabled);
  EXPECT_DOUBLE_EQ(sc.disturbance.wind_speed_mps, 0.0);
  EXPECT_DOUBLE_EQ(sc.gains.kp_pos, 1.0);
  EXPECT_DOUBLE_EQ(sc.gains.kp_vel, 2.0);
  EXPECT_DOUBLE_EQ(sc.gains.ki_vel, 0.5);
  EXPECT_DOUBLE_EQ(sc.gains.accel_limit, 5.0);
  EXPECT_DOUBLE_EQ(sc.sim.warmup_exclude_s, 1.0);
  EXPECT_EQ(sc.output_directory, "out");
}

TEST(ScenarioParse, EquilateralShorthandCentroidAtOrigin) {
  Scenario sc = parse_scenario(demo_text());
  Triangle tri = sc.spec.leader_triangle();
  Vec2 c = triangle_centroid(tri);
  EXPECT_NEAR(c.x, 0.0, 1e-12);
  EXPECT_NEAR(c.y, 0.0, 1e-12);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR((tri[i] - tri[(i + 1) % 3]).norm(), 4.72, 1e-12);
  }
}

TEST(ScenarioParse, ExplicitPositionsSkipDerivation) {
  std::string text = R"(
[formation]
position_1_m = 0 0
position_2_m = 4 0
position_3_m = 2 3
position_4_m = 1.8 0.9
position_5_m = 2.0 1.2
neighbors_4 = 1 2 3
weights_4 = 0.4 0.3 0.3
neighbors_5 = 1 2 3
weights_5 = 0.3 0.3 0.4
derive_follower_positions = off
)";
  Scenario sc = parse_scenario(text);
  EXPECT_NEAR(sc.spec.initial_positions.at(4).x, 1.8, 1e-12);
  EXPECT_NEAR(sc.spec.initial_positions.at(4).y, 0.9, 1e-12);
  EXPECT_NEAR(sc.spec.initial_positions.at(5).x, 2.0, 1e-12);
}

TEST(ScenarioRoundTrip, SerializeLoadSerializeIsIdentity) {
  Scenario sc = parse_scenario(demo_text());
  std::string first = serialize_scenario(sc);
  Scenario again = parse_scenario(first);
  std::string second = serialize_scenario(again);
  EXPECT_EQ(first, second);

  for (int id : sc.spec.agents()) {
    EXPECT_DOUBLE_EQ(again.spec.initial_positions.at(id).x,
                     sc.spec.initial_positions.at(id).x);
    EXPECT_DOUBLE_EQ(again.spec.initial_positions.at(id).y,
                     sc.spec.initial_positions.at(id).y);
  }
  EXPECT_EQ(again.plan.contraction_auto, sc.plan.contraction_auto);
  EXPECT_EQ(again.sim.master_seed, sc.sim.master_seed);
}

TEST(ScenarioRoundTrip, IrrationalValuesSurviveExactly) {
  Scenario sc = parse_scenario(demo_text());
  sc.plan.contraction_auto = false;
  sc.plan.contraction = std::sqrt(0.62);
  sc.link.drop_probability = 1.0 / 3.0;
  sc.sim.dt_s = 1.0 / 400.0;
  Scenario again = parse_scenario(serialize_scenario(sc));
  EXPECT_EQ(again.plan.contraction, sc.plan.contraction);
  EXPECT_EQ(again.link.drop_probability, sc.link.drop_probability);
  EXPECT_EQ(again.sim.dt_s, sc.sim.dt_s);
}

TEST(ScenarioParse, UnknownKeyRejected) {
  try {
    parse_scenario(demo_text() + "typo_key = 3\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("typo_key"), std::string::npos);
  }
}

TEST(ScenarioParse, UnknownSectionRejected) {
  EXPECT_THROW(parse_scenario("[nonsense]\nx = 1\n"), ParseError);
}

TEST(ScenarioParse, MalformedLinesRejected) {
  EXPECT_THROW(parse_scenario("[formation\n"), ParseError);
  EXPECT_THROW(parse_scenario("key_before_section = 1\n"), ParseError);
  EXPECT_THROW(parse_scenario("[sim]\nno equals sign\n"), ParseError);
  EXPECT_THROW(parse_scenario("[sim]\ndt_s =\n"), ParseError);
  EXPECT_THROW(parse_scenario("[sim]\ndt_s = 0.0025\ndt_s = 0.005\n"), ParseError);
}

TEST(ScenarioParse, OutOfRangeValuesRejected) {
  EXPECT_THROW(parse_scenario(minimal_text() + "\n[link]\ndrop_probability = 1.5\n"),
               ParseError);
  EXPECT_THROW(parse_scenario(minimal_text() + "\n[plan]\nvariant = spiral\n"), ParseError);
  EXPECT_THROW(parse_scenario(minimal_text() + "\n[followers]\nmode = psychic\n"),
               ParseError);
  EXPECT_THROW(parse_scenario(minimal_text() + "\n[sim]\ndt_s = -1\n"), ParseError);
  EXPECT_THROW(parse_scenario(minimal_text() + "\n[gains]\nkp_pos_per_s = -0.5\n"),
               ParseError);
}

TEST(ScenarioParse, MissingTopologyRejected) {
  std::string text = R"(
[formation]
leader_triangle_edge_m = 4.72
followers = 4
weights_4 = 0.3 0.3 0.4
)";
  EXPECT_THROW(parse_scenario(text), ParseError);
}

TEST(ScenarioParse, MissingLeaderPositionsRejected) {
  EXPECT_THROW(parse_scenario("[formation]\nneighbors_4 = 1 2 3\nweights_4 = 0.3 0.3 0.4\n"),
               ParseError);
}

TEST(ScenarioPlan, AutoContractionUsesCertifiedFloor) {
  Scenario sc = parse_scenario(demo_text());
  LeaderPlan plan = make_plan(sc);
  double floor = compute_margins(sc.spec).lambda_min;

  double t_hold = plan.segments.begin()->second.front().tf;
  Triangle start = sc.spec.leader_triangle();
  Vec2 centroid = triangle_centroid(start);
  for (int i = 0; i < 3; ++i) {
    int id = sc.spec.leaders[i];
    Vec2 p = evaluate(plan, id, t_hold).position;
    Vec2 expect = centroid + (start[i] - centroid) * floor;
    EXPECT_NEAR(p.x, expect.x, 1e-9);
    EXPECT_NEAR(p.y, expect.y, 1e-9);
  }
}

TEST(ScenarioPlan, ExplicitContractionOverridesAuto) {
  Scenario sc = parse_scenario(minimal_text() + "\n[plan]\ncontraction = 0.8\n");
  ASSERT_FALSE(sc.plan.contraction_auto);
  LeaderPlan plan = make_plan(sc);

  double t_hold = plan.segments.begin()->second.front().tf;
  Triangle start = sc.spec.leader_triangle();
  Vec2 centroid = triangle_centroid(start);
  Vec2 p = evaluate(plan, sc.spec.leaders[0], t_hold).position;
  Vec2 expect = centroid + (start[0] - centroid) * 0.8;
  EXPECT_NEAR(p.x, expect.x, 1e-12);
  EXPECT_NEAR(p.y, expect.y, 1e-12);
}

TEST(ScenarioPlan, SquareVmaxVariantBuildsFourLegs) {
  Scenario sc = parse_scenario(minimal_text() +
                               "\n[plan]\nvariant = square_vmax\nv_max_mps = 0.75\n");
  LeaderPlan plan = make_plan(sc);
  EXPECT_NEAR(plan.end_time() - plan.start_time(), 4 * 3.75, 1e-12);
  for (int id : sc.spec.leaders) {
    EXPECT_EQ(plan.segments.at(id).size(), 4u);
  }
}

TEST(ScenarioParse, DuplicateSectionsAccumulate) {
  // Re-opening a section continues it; duplicate keys still rejected.
  std::string text = demo_text() + "\n[link]\njitter_std_s = 0.001\n";
  Scenario sc = parse_scenario(text);
  EXPECT_DOUBLE_EQ(sc.link.jitter_std, 0.001);
  EXPECT_THROW(parse_scenario(demo_text() + "\n[sim]\nmaster_seed = 9\n"), ParseError);
}

TEST(ScenarioLoad, MissingFileThrows) {
  EXPECT_THROW(load_scenario("/nonexistent/path.scenario"), ParseError);
}

}  // namespace
}  // namespace contdef
