#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "contdef/errors.hpp"
#include "contdef/rng.hpp"
#include "contdef/vec2.hpp"

namespace contdef {

/// Five-sample derivative filter over positions r(t-4T) .. r(t), oldest
/// first. Exact on linear signals; on quadratics it reports the velocity
/// 2T in the past (group delay).
inline Vec2 derivative_filter(const std::array<Vec2, 5>& r, double spacing) {
  if (!(spacing > 0.0)) throw InsufficientSamples("filter spacing must be > 0");
  return (2.0 * (r[3] - r[1]) + (r[4] - r[0])) / (8.0 * spacing);
}

/// Fixed-depth history feeding the derivative filter.
class FilterRing {
 public:
  void push(Vec2 r) {
    ring_[head_] = r;
    head_ = (head_ + 1) % 5;
    if (count_ < 5) ++count_;
  }
  bool full() const { return count_ == 5; }
  void clear() {
    count_ = 0;
    head_ = 0;
  }
  /// Samples oldest first.
  std::array<Vec2, 5> snapshot() const {
    if (!full()) throw InsufficientSamples("filter ring not yet full");
    std::array<Vec2, 5> out;
    for (std::size_t i = 0; i < 5; ++i) out[i] = ring_[(head_ + i) % 5];
    return out;
  }

 private:
  std::array<Vec2, 5> ring_{};
  std::size_t count_ = 0;
  std::size_t head_ = 0;
};

/// Ring of timestamped position samples, newest last. Serves delayed
/// zero-order-hold reads.
class MeasurementBuffer {
 public:
  static constexpr std::size_t kCapacity = 64;

  void push(double t, Vec2 r) {
    if (!samples_.empty() && t < samples_.back().t) return;  // ignore reordered input
    if (samples_.size() == kCapacity) samples_.erase(samples_.begin());
    samples_.push_back({t, r});
  }
  bool empty() const { return samples_.empty(); }

  Vec2 latest() const {
    if (samples_.empty()) throw BufferUnderrun("measurement buffer is empty");
    return samples_.back().r;
  }

  /// Newest sample with timestamp <= now - delay (zero-order hold).
  Vec2 sample(double now, double delay) const {
    double target = now - delay + 1e-9;
    const TimedSample* best = nullptr;
    for (const auto& s : samples_) {
      if (s.t <= target) best = &s;
    }
    if (!best) throw BufferUnderrun("no sample old enough for requested delay");
    return best->r;
  }

 private:
  struct TimedSample {
    double t;
    Vec2 r;
  };
  std::vector<TimedSample> samples_;
};

struct ControllerGains {
  double kp_pos = 1.0;      // 1/s
  double kp_vel = 2.0;      // 1/s
  double ki_vel = 0.5;      // 1/s^2
  double kd_vel = 0.0;
  double accel_limit = 5.0;  // m/s^2
};

struct VehicleState {
  Vec2 position;
  Vec2 velocity;
  MeasurementBuffer buffer;  // received pose samples (already delay-shifted)
  FilterRing pose_ring;      // uniform-spaced history for the velocity estimate
  Vec2 integrator;
  Vec2 prev_vel_error;
  bool prev_vel_valid = false;
  Vec2 last_command;
};

/// Delayed zero-order-hold position read.
inline Vec2 measurement(const VehicleState& state, double now, double delay) {
  return state.buffer.sample(now, delay);
}

/// Cascaded loop: position error scaled by kp_pos plus feedforward gives the
/// desired velocity; the velocity error runs through a PID whose output is
/// norm-saturated at accel_limit. The integrator freezes while saturated.
inline Vec2 controller_step(VehicleState& state, Vec2 setpoint, Vec2 feedforward_velocity,
                            const ControllerGains& gains, double filter_spacing,
                            double dt) {
  Vec2 measured = state.buffer.latest();
  Vec2 vel_est = derivative_filter(state.pose_ring.snapshot(), filter_spacing);

  Vec2 desired_vel = gains.kp_pos * (setpoint - measured) + feedforward_velocity;
  Vec2 vel_err = desired_vel - vel_est;

  Vec2 integrator_next = state.integrator + vel_err * dt;
  Vec2 deriv = state.prev_vel_valid ? (vel_err - state.prev_vel_error) / dt : Vec2{};
  Vec2 u = gains.kp_vel * vel_err + gains.ki_vel * integrator_next + gains.kd_vel * deriv;

  double mag = u.norm();
  if (mag > gains.accel_limit) {
    u = u * (gains.accel_limit / mag);
  } else {
    state.integrator = integrator_next;
  }
  state.prev_vel_error = vel_err;
  state.prev_vel_valid = true;
  state.last_command = u;
  return u;
}

/// Semi-implicit Euler: velocity first, then position with the new velocity.
inline void dynamics_step(VehicleState& state, Vec2 commanded_accel,
                          Vec2 disturbance_accel, double dt) {
  state.velocity += (commanded_accel + disturbance_accel) * dt;
  state.position += state.velocity * dt;
}

inline Vec2 wind_from_heading(double speed_mps, double heading_deg) {
  double rad = heading_deg * 3.14159265358979323846 / 180.0;
  return {speed_mps * std::cos(rad), speed_mps * std::sin(rad)};
}

/// Constant acceleration bias proportional to wind velocity plus seeded
/// white acceleration noise (downwash/turbulence stand-in).
class DisturbanceModel {
 public:
  DisturbanceModel(Vec2 wind_velocity, double accel_gain_per_s, double noise_std,
                   std::uint64_t seed)
      : bias_(accel_gain_per_s * wind_velocity), noise_std_(noise_std), rng_(seed) {}

  Vec2 sample() {
    if (noise_std_ <= 0.0) return bias_;
    auto [gx, gy] = rng_.gaussian2();
    return bias_ + Vec2{noise_std_ * gx, noise_std_ * gy};
  }

  Vec2 bias() const { return bias_; }

 private:
  Vec2 bias_;
  double noise_std_;
  Rng rng_;
};

}  // namespace contdef
