#include "contdef/netsim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "test_support.hpp"

using namespace contdef;
using contdef_test::five_agent_spec;

namespace {

// Drives `seconds` of broadcasts at the link rate, collecting after each
// send plus a drain pass at the end.
std::vector<Message> run_broadcasts(Network& net, double rate, double seconds,
                                    const std::vector<int>& dests) {
  std::vector<Message> received;
  long n = std::lround(seconds * rate);
  for (long j = 0; j <= n; ++j) {
    double now = static_cast<double>(j) / rate;
    std::map<int, MessagePayload> payloads;
    for (int d : dests) payloads[d] = {Vec2{now, 0.0}, false, {}, 0};
    net.broadcast(now, payloads);
    auto due = net.collect_due(now);
    received.insert(received.end(), due.begin(), due.end());
  }
  auto tail = net.collect_due(1e9);
  received.insert(received.end(), tail.begin(), tail.end());
  return received;
}

}  // namespace

TEST(Broadcast, LosslessLinkDeliversEveryMessageAtFixedGap) {
  LinkModel model;  // p = 0
  std::vector<int> dests{1, 2, 3, 4, 5};
  Network net(model, dests, 42);
  auto received = run_broadcasts(net, model.rate, 2.0, dests);
  EXPECT_EQ(received.size(), dests.size() * 121u);

  std::map<int, double> last;
  for (const auto& m : received) {
    EXPECT_NEAR(m.deliver_time - m.send_time, 0.040, 1e-12);
    auto it = last.find(m.destination);
    if (it != last.end()) EXPECT_NEAR(m.deliver_time - it->second, 1.0 / 60.0, 1e-9);
    last[m.destination] = m.deliver_time;
  }
  auto st = link_statistics(net.log(), model.rate);
  EXPECT_EQ(st.dropped, 0);
  EXPECT_EQ(st.delivered, st.sent);
  EXPECT_TRUE(st.quantized);
  for (const auto& [dest, hist] : st.gap_counts) {
    ASSERT_EQ(hist.size(), 1u);
    EXPECT_EQ(hist.begin()->first, 1);
  }
}

TEST(Broadcast, DropGapsAreIntegerMultiplesOfPeriod) {
  LinkModel model;
  model.drop_probability = 0.3;
  std::vector<int> dests{1, 2, 3, 4, 5};
  Network net(model, dests, 7);
  auto received = run_broadcasts(net, model.rate, 10.0, dests);
  ASSERT_FALSE(received.empty());

  auto st = link_statistics(net.log(), model.rate);
  EXPECT_TRUE(st.quantized);
  EXPECT_GT(st.dropped, 0);
  EXPECT_EQ(st.sent, st.delivered + st.dropped);
  bool saw_multi = false;
  for (const auto& [dest, hist] : st.gap_counts) {
    for (const auto& [k, count] : hist) {
      EXPECT_GE(k, 1);
      if (k >= 2) saw_multi = true;
    }
  }
  EXPECT_TRUE(saw_multi);
}

TEST(Broadcast, CertainDropDeliversNothing) {
  LinkModel model;
  model.drop_probability = 1.0;
  std::vector<int> dests{1, 2};
  Network net(model, dests, 1);
  auto received = run_broadcasts(net, model.rate, 1.0, dests);
  EXPECT_TRUE(received.empty());
  auto st = link_statistics(net.log(), model.rate);
  EXPECT_EQ(st.delivered, 0);
  EXPECT_EQ(st.dropped, st.sent);
}

TEST(Broadcast, DeterministicUnderSeedAndSensitiveToIt) {
  LinkModel model;
  model.drop_probability = 0.25;
  std::vector<int> dests{1, 2, 3, 4, 5};
  Network a(model, dests, 555), b(model, dests, 555), c(model, dests, 556);
  for (auto* net : {&a, &b, &c}) run_broadcasts(*net, model.rate, 5.0, dests);

  ASSERT_EQ(a.log().size(), b.log().size());
  bool differs_from_c = a.log().size() != c.log().size();
  for (std::size_t i = 0; i < a.log().size(); ++i) {
    EXPECT_EQ(a.log()[i].dropped, b.log()[i].dropped);
    EXPECT_DOUBLE_EQ(a.log()[i].deliver_time, b.log()[i].deliver_time);
    if (!differs_from_c && a.log()[i].dropped != c.log()[i].dropped) differs_from_c = true;
  }
  EXPECT_TRUE(differs_from_c);
}

TEST(Broadcast, PerDestinationOrderAndSequence) {
  LinkModel model;
  model.drop_probability = 0.4;
  std::vector<int> dests{3, 1, 2};
  Network net(model, dests, 99);
  auto received = run_broadcasts(net, model.rate, 5.0, dests);
  std::map<int, double> last_t;
  std::map<int, long> last_seq;
  for (const auto& m : received) {
    if (last_t.count(m.destination)) {
      EXPECT_GE(m.deliver_time, last_t[m.destination]);
      EXPECT_GT(m.seq, last_seq[m.destination]);
    }
    last_t[m.destination] = m.deliver_time;
    last_seq[m.destination] = m.seq;
  }
}

TEST(CollectDue, SortsByTimeDestinationSequence) {
  LinkModel model;
  std::vector<int> dests{5, 2, 9};
  Network net(model, dests, 3);
  for (int j = 0; j < 4; ++j) {
    double now = j / model.rate;
    std::map<int, MessagePayload> payloads;
    for (int d : dests) payloads[d] = {Vec2{}, false, {}, 0};
    net.broadcast(now, payloads);
  }
  auto due = net.collect_due(1e9);
  ASSERT_EQ(due.size(), 12u);
  for (std::size_t i = 1; i < due.size(); ++i) {
    auto key = [](const Message& m) {
      return std::make_tuple(m.deliver_time, m.destination, m.seq);
    };
    EXPECT_LT(key(due[i - 1]), key(due[i]));
  }
  EXPECT_EQ(net.pending_count(), 0u);
}

TEST(CollectDue, HoldsFutureMessages) {
  LinkModel model;
  Network net(model, {1}, 3);
  net.broadcast(0.0, {{1, MessagePayload{}}});
  EXPECT_TRUE(net.collect_due(0.039).empty());
  EXPECT_EQ(net.collect_due(0.040).size(), 1u);
}

TEST(Jitter, PerturbsDeliveryAndBreaksQuantization) {
  LinkModel model;
  model.jitter_std = 0.004;
  std::vector<int> dests{1, 2};
  Network net(model, dests, 11), net2(model, dests, 11);
  run_broadcasts(net, model.rate, 5.0, dests);
  run_broadcasts(net2, model.rate, 5.0, dests);
  bool perturbed = false;
  for (std::size_t i = 0; i < net.log().size(); ++i) {
    EXPECT_DOUBLE_EQ(net.log()[i].deliver_time, net2.log()[i].deliver_time);
    const auto& rec = net.log()[i];
    if (!rec.dropped && std::abs(rec.deliver_time - rec.send_time - 0.040) > 1e-6) {
      perturbed = true;
    }
  }
  EXPECT_TRUE(perturbed);
  EXPECT_FALSE(link_statistics(net.log(), model.rate).quantized);
}

TEST(BurstLoss, ProducesLongOutagesDeterministically) {
  LinkModel model;
  model.burst.enabled = true;
  model.burst.p_good_to_bad = 0.05;
  model.burst.p_bad_to_good = 0.15;
  model.burst.drop_prob_bad = 1.0;
  std::vector<int> dests{1};
  Network net(model, dests, 21);
  run_broadcasts(net, model.rate, 30.0, dests);
  auto st = link_statistics(net.log(), model.rate);
  EXPECT_TRUE(st.quantized);
  EXPECT_GT(st.dropped, 0);
  EXPECT_EQ(st.sent, st.delivered + st.dropped);
  // Sticky bad state yields at least one multi-packet outage.
  long max_k = 0;
  for (const auto& [dest, hist] : st.gap_counts)
    for (const auto& [k, count] : hist) max_k = std::max(max_k, k);
  EXPECT_GE(max_k, 3);
}

TEST(FollowerSetpoint, ModesAgreeUnderPerfectTracking) {
  auto spec = five_agent_spec();
  HomogeneousTransform ht{Mat2{0.85, 0.02, -0.01, 0.9}, Vec2{0.4, -0.2}};
  auto desired = global_desired_positions(spec, ht);
  for (int f : spec.followers) {
    Vec2 g = follower_setpoint(FollowerMode::GlobalReference, spec, f, desired, desired);
    Vec2 l = follower_setpoint(FollowerMode::LocalCommunication, spec, f, desired, desired);
    EXPECT_NEAR(g.x, l.x, 1e-9);
    EXPECT_NEAR(g.y, l.y, 1e-9);
    EXPECT_NEAR(g.x, desired.at(f).x, 1e-9);
    EXPECT_NEAR(g.y, desired.at(f).y, 1e-9);
  }
}

TEST(FollowerSetpoint, LinearInNeighborOffset) {
  auto spec = five_agent_spec();
  auto base = spec.initial_positions;
  int f = 4;
  Vec2 e{0.07, -0.03};
  for (int j = 0; j < 3; ++j) {
    auto shifted = base;
    int nbr = spec.topology.at(f)[j];
    shifted[nbr] += e;
    Vec2 s0 = follower_setpoint(FollowerMode::LocalCommunication, spec, f, base, base);
    Vec2 s1 = follower_setpoint(FollowerMode::LocalCommunication, spec, f, shifted, shifted);
    double w = spec.weights.at(f)[j];
    EXPECT_NEAR(s1.x - s0.x, w * e.x, 1e-12);
    EXPECT_NEAR(s1.y - s0.y, w * e.y, 1e-12);
  }
}

TEST(FollowerSetpoint, StationarySourcesHoldSetpointAcrossDrops) {
  auto spec = five_agent_spec();
  auto pos = spec.initial_positions;
  Vec2 first = follower_setpoint(FollowerMode::LocalCommunication, spec, 5, pos, pos);
  // Hold-last maps never change while sources are stationary, drops or not.
  for (int k = 0; k < 10; ++k) {
    Vec2 again = follower_setpoint(FollowerMode::LocalCommunication, spec, 5, pos, pos);
    EXPECT_DOUBLE_EQ(again.x, first.x);
    EXPECT_DOUBLE_EQ(again.y, first.y);
  }
}

TEST(CompoundingBias, FollowerDeviationExceedsLeaderBias) {
  // All vehicles track their own setpoint with the same constant bias e.
  // Leaders deviate by |e|; followers chain their neighbors' deviations on
  // top of their own, so the settled follower deviation is strictly larger.
  auto spec = five_agent_spec();
  Vec2 e{0.0, 0.19};
  std::map<int, Vec2> actual = spec.initial_positions;
  for (int id : spec.leaders) actual[id] += e;
  for (int iter = 0; iter < 200; ++iter) {
    for (int f : spec.followers) {
      Vec2 sp = follower_setpoint(FollowerMode::LocalCommunication, spec, f,
                                  actual, actual);
      actual[f] = sp + e;
    }
  }
  for (int f : spec.followers) {
    double dev = distance(actual.at(f), spec.initial_positions.at(f));
    EXPECT_GT(dev, 1.5 * e.norm());
    // Settled chain gain for the demo weights: 1.634 / 0.634.
    EXPECT_NEAR(dev, e.norm() * 1.634 / 0.634, 1e-9);
  }
}

TEST(LinkStatistics, EmptyLogThrows) {
  EXPECT_THROW(link_statistics({}, 60.0), EmptyLog);
}
