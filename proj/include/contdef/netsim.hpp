#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>
#include <vector>

#include "contdef/errors.hpp"
#include "contdef/formation.hpp"
#include "contdef/rng.hpp"

namespace contdef {

/// What the ground station sends each agent at every broadcast tick.
struct MessagePayload {
  Vec2 pose;           // agent's own pose estimate
  bool has_setpoint = false;
  Vec2 setpoint;       // follower desired position
  int sync = 0;        // mission phase index
};

struct Message {
  int destination = 0;
  double send_time = 0.0;
  double deliver_time = 0.0;
  long seq = 0;
  MessagePayload payload;
};

struct DeliveryRecord {
  int destination = 0;
  double send_time = 0.0;
  double deliver_time = -1.0;  // -1 when dropped
  long seq = 0;
  bool dropped = false;
};

/// Two-state burst loss option. When enabled the link flips between a good
/// state (base drop probability) and a bad state with its own, typically
/// much higher, drop probability.
struct BurstConfig {
  bool enabled = false;
  double p_good_to_bad = 0.0;
  double p_bad_to_good = 1.0;
  double drop_prob_bad = 1.0;
};

struct LinkModel {
  double rate = 60.0;        // Hz
  double latency = 0.040;    // s
  double drop_probability = 0.0;
  double jitter_std = 0.0;   // s, added to latency per message
  BurstConfig burst;
};

/// Broadcast network with one independent loss stream per destination.
/// Deterministic: per-link RNGs derive from the master seed and the
/// destination id, and due messages are handed out sorted by
/// (deliver_time, destination, sequence).
class Network {
 public:
  Network(const LinkModel& model, const std::vector<int>& destinations,
          std::uint64_t master_seed)
      : model_(model) {
    for (int id : destinations) links_.emplace(id, LinkState{Rng(derive_seed(master_seed, "link", id))});
  }

  /// One broadcast tick: a message per destination present in `payloads`.
  void broadcast(double now, const std::map<int, MessagePayload>& payloads) {
    for (auto& [dest, link] : links_) {
      auto it = payloads.find(dest);
      if (it == payloads.end()) continue;
      double drop_p = model_.drop_probability;
      if (model_.burst.enabled) {
        double u = link.rng.uniform01();
        if (link.bad) {
          if (u < model_.burst.p_bad_to_good) link.bad = false;
        } else {
          if (u < model_.burst.p_good_to_bad) link.bad = true;
        }
        if (link.bad) drop_p = model_.burst.drop_prob_bad;
      }
      bool dropped = link.rng.uniform01() < drop_p;
      double deliver = now + model_.latency;
      if (model_.jitter_std > 0.0) {
        deliver += model_.jitter_std * link.rng.gaussian2().first;
        deliver = std::max(deliver, now);
      }
      log_.push_back({dest, now, dropped ? -1.0 : deliver, link.seq, dropped});
      if (!dropped) pending_.push_back({dest, now, deliver, link.seq, it->second});
      ++link.seq;
    }
  }

  /// Messages whose delivery time has arrived, in deterministic order.
  std::vector<Message> collect_due(double now) {
    std::vector<Message> due;
    auto split = std::partition(pending_.begin(), pending_.end(), [&](const Message& m) {
      return m.deliver_time > now + 1e-9;
    });
    due.assign(split, pending_.end());
    pending_.erase(split, pending_.end());
    std::sort(due.begin(), due.end(), [](const Message& a, const Message& b) {
      return std::tie(a.deliver_time, a.destination, a.seq) <
             std::tie(b.deliver_time, b.destination, b.seq);
    });
    return due;
  }

  std::size_t pending_count() const { return pending_.size(); }
  const std::vector<DeliveryRecord>& log() const { return log_; }

 private:
  struct LinkState {
    Rng rng;
    bool bad = false;
    long seq = 0;
  };
  LinkModel model_;
  std::map<int, LinkState> links_;
  std::vector<Message> pending_;
  std::vector<DeliveryRecord> log_;
};

enum class FollowerMode { GlobalReference, LocalCommunication };

/// Follower setpoint under either command mode. GlobalReference weighs the
/// leaders' desired positions by the follower's leader-triangle barycentric
/// coordinates; LocalCommunication weighs the last-received actual positions
/// of the follower's in-neighbors by its communication weights. Callers keep
/// the maps hold-last-value, so stale entries model packet loss.
inline Vec2 follower_setpoint(FollowerMode mode, const FormationSpec& spec, int follower,
                              const std::map<int, Vec2>& leader_desired,
                              const std::map<int, Vec2>& neighbor_actual) {
  if (mode == FollowerMode::GlobalReference) {
    auto w = leader_barycentric(spec, follower);
    Vec2 out{};
    for (int j = 0; j < 3; ++j) out += w[j] * leader_desired.at(spec.leaders[j]);
    return out;
  }
  const auto& nbrs = spec.topology.at(follower);
  const auto& w = spec.weights.at(follower);
  Vec2 out{};
  for (int j = 0; j < 3; ++j) out += w[j] * neighbor_actual.at(nbrs[j]);
  return out;
}

struct LinkStatistics {
  long sent = 0;
  long delivered = 0;
  long dropped = 0;
  // destination -> (gap in broadcast periods -> count), delivered messages only
  std::map<int, std::map<long, long>> gap_counts;
  bool quantized = true;  // every gap an integer multiple of 1/rate (1e-9)
  double max_gap_s = 0.0;
};

inline LinkStatistics link_statistics(const std::vector<DeliveryRecord>& log, double rate) {
  if (log.empty()) throw EmptyLog("delivery log is empty");
  LinkStatistics st;
  std::map<int, double> last_delivery;
  for (const auto& rec : log) {
    ++st.sent;
    if (rec.dropped) {
      ++st.dropped;
      continue;
    }
    ++st.delivered;
    auto it = last_delivery.find(rec.destination);
    if (it != last_delivery.end()) {
      double gap = rec.deliver_time - it->second;
      long k = std::lround(gap * rate);
      if (std::abs(gap - static_cast<double>(k) / rate) > 1e-9) st.quantized = false;
      ++st.gap_counts[rec.destination][k];
      st.max_gap_s = std::max(st.max_gap_s, gap);
    }
    last_delivery[rec.destination] = rec.deliver_time;
  }
  return st;
}

}  // namespace contdef
