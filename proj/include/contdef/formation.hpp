#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "contdef/errors.hpp"
#include "contdef/geometry.hpp"
#include "contdef/linalg.hpp"
#include "contdef/vec2.hpp"

namespace contdef {

// Triangle area below this (m^2) counts as collinear.
inline constexpr double kCollinearAreaTol = 1e-9;
inline constexpr double kWeightTol = 1e-9;

/// Affine map r -> Q r + d. Q is the deformation Jacobian, d the rigid
/// displacement. At initial time Q = I and d = 0.
struct HomogeneousTransform {
  Mat2 q = Mat2::identity();
  Vec2 d{};
};

struct TimedTransform {
  double t = 0.0;
  HomogeneousTransform ht;
};

inline Vec2 apply_transform(const HomogeneousTransform& t, Vec2 r0) {
  return t.q * r0 + t.d;
}

/// Recovers (Q, d) from the three leader positions: six linear equations,
/// one 3x3 system per axis with rows [x_k0, y_k0, 1].
inline HomogeneousTransform transform_from_leaders(const Triangle& initial,
                                                   const Triangle& current) {
  if (triangle_area(initial[0], initial[1], initial[2]) < kCollinearAreaTol) {
    throw CollinearLeaders("initial leader positions are collinear");
  }
  std::array<std::array<double, 3>, 3> m{};
  for (int k = 0; k < 3; ++k) m[k] = {initial[k].x, initial[k].y, 1.0};
  auto row_x = solve3(m, {current[0].x, current[1].x, current[2].x});
  auto row_y = solve3(m, {current[0].y, current[1].y, current[2].y});
  HomogeneousTransform t;
  t.q = {row_x[0], row_x[1], row_y[0], row_y[1]};
  t.d = {row_x[2], row_y[2]};
  return t;
}

/// Barycentric coordinates of the follower's initial position in its
/// in-neighbor triangle. The weights sum to 1 and reproduce the follower
/// position as a weighted sum of neighbor positions; a component outside
/// (0,1) means the follower starts outside the neighbor triangle.
inline std::array<double, 3> communication_weights(const Triangle& neighbor_initial,
                                                   Vec2 follower_initial) {
  if (triangle_area(neighbor_initial[0], neighbor_initial[1], neighbor_initial[2]) <
      kCollinearAreaTol) {
    throw CollinearNeighbors("neighbor initial positions are collinear");
  }
  std::array<std::array<double, 3>, 3> m{
      std::array<double, 3>{neighbor_initial[0].x, neighbor_initial[1].x,
                            neighbor_initial[2].x},
      std::array<double, 3>{neighbor_initial[0].y, neighbor_initial[1].y,
                            neighbor_initial[2].y},
      std::array<double, 3>{1.0, 1.0, 1.0}};
  return solve3(m, {follower_initial.x, follower_initial.y, 1.0});
}

inline bool weights_interior(const std::array<double, 3>& w) {
  for (double v : w) {
    if (!(v > 0.0 && v < 1.0)) return false;
  }
  return true;
}

/// Weighted sum of neighbor positions (the follower's local desired position).
inline Vec2 local_desired_position(const std::array<double, 3>& weights,
                                   const Triangle& neighbor_positions) {
  Vec2 r{};
  for (int j = 0; j < 3; ++j) r += weights[j] * neighbor_positions[j];
  return r;
}

/// Static formation description: who leads, who follows, the communication
/// topology and its weights, and the safety radii.
struct FormationSpec {
  std::vector<int> leaders;    // exactly 3, ordered
  std::vector<int> followers;  // ordered
  std::map<int, Vec2> initial_positions;
  std::map<int, std::array<int, 3>> topology;     // follower -> in-neighbors
  std::map<int, std::array<double, 3>> weights;   // follower -> weights
  double epsilon_m = 0.0;  // vehicle bounding-ball radius
  double delta_m = 0.0;    // per-vehicle deviation bound

  std::vector<int> agents() const {
    std::vector<int> ids = leaders;
    ids.insert(ids.end(), followers.begin(), followers.end());
    return ids;
  }

  Triangle leader_triangle() const {
    return {initial_positions.at(leaders[0]), initial_positions.at(leaders[1]),
            initial_positions.at(leaders[2])};
  }

  Triangle neighbor_triangle(int follower) const {
    const auto& n = topology.at(follower);
    return {initial_positions.at(n[0]), initial_positions.at(n[1]),
            initial_positions.at(n[2])};
  }

  /// Checks every structural invariant; throws InvalidSpec on violation.
  /// Returns human-readable warnings (e.g. a follower starting outside its
  /// neighbor triangle, which is allowed but voids the containment guarantee).
  std::vector<std::string> validate() const {
    std::vector<std::string> warnings;
    if (leaders.size() != 3) throw InvalidSpec("exactly 3 leaders required");
    if (epsilon_m <= 0.0) throw InvalidSpec("epsilon must be > 0");
    if (delta_m <= 0.0) throw InvalidSpec("delta must be > 0");
    for (int id : agents()) {
      auto it = initial_positions.find(id);
      if (it == initial_positions.end()) {
        throw InvalidSpec("missing initial position for agent " + std::to_string(id));
      }
      if (!it->second.is_finite()) {
        throw InvalidSpec("non-finite initial position for agent " + std::to_string(id));
      }
    }
    Triangle lt = leader_triangle();
    if (triangle_area(lt[0], lt[1], lt[2]) < kCollinearAreaTol) {
      throw CollinearLeaders("leader initial positions are collinear");
    }
    for (int f : followers) {
      if (!topology.count(f)) {
        throw InvalidSpec("missing topology for follower " + std::to_string(f));
      }
      if (!weights.count(f)) {
        throw InvalidSpec("missing weights for follower " + std::to_string(f));
      }
      const auto& w = weights.at(f);
      double sum = w[0] + w[1] + w[2];
      if (std::abs(sum - 1.0) > kWeightTol) {
        throw InvalidSpec("weights of follower " + std::to_string(f) +
                          " do not sum to 1");
      }
      Vec2 rec = local_desired_position(w, neighbor_triangle(f));
      if (distance(rec, initial_positions.at(f)) > kWeightTol) {
        throw InvalidSpec("weights of follower " + std::to_string(f) +
                          " do not reproduce its initial position");
      }
      if (!weights_interior(w)) {
        warnings.push_back("follower " + std::to_string(f) +
                           " starts outside its neighbor triangle; containment "
                           "guarantees do not apply");
      }
    }
    return warnings;
  }
};

/// Global desired positions r_HT of all agents under the given transform.
inline std::map<int, Vec2> global_desired_positions(const FormationSpec& spec,
                                                    const HomogeneousTransform& t) {
  std::map<int, Vec2> out;
  for (int id : spec.agents()) out[id] = apply_transform(t, spec.initial_positions.at(id));
  return out;
}

/// Barycentric coordinates of a follower's initial position in the leader
/// triangle. Used when followers are commanded to global desired positions.
inline std::array<double, 3> leader_barycentric(const FormationSpec& spec, int follower) {
  return communication_weights(spec.leader_triangle(),
                               spec.initial_positions.at(follower));
}

/// Solves the coupled weight equations r_i = sum_j w_ij r_j for all follower
/// initial positions, given leader positions, topology and weights. Neighbor
/// sets may reference other followers; the x and y axes decouple into two
/// dense linear systems over the followers.
inline std::map<int, Vec2> derive_follower_positions(
    const std::vector<int>& leaders, const std::map<int, Vec2>& leader_positions,
    const std::vector<int>& followers,
    const std::map<int, std::array<int, 3>>& topology,
    const std::map<int, std::array<double, 3>>& weights) {
  const std::size_t n = followers.size();
  std::map<int, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[followers[i]] = i;

  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<double> bx(n, 0.0), by(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    int f = followers[i];
    a[i][i] = 1.0;
    const auto& nbrs = topology.at(f);
    const auto& w = weights.at(f);
    for (int j = 0; j < 3; ++j) {
      int nb = nbrs[j];
      if (index.count(nb)) {
        a[i][index[nb]] -= w[j];
      } else {
        auto it = leader_positions.find(nb);
        if (it == leader_positions.end()) {
          throw InvalidSpec("neighbor " + std::to_string(nb) +
                            " of follower " + std::to_string(f) +
                            " is neither a leader nor a follower");
        }
        bx[i] += w[j] * it->second.x;
        by[i] += w[j] * it->second.y;
      }
    }
  }
  (void)leaders;
  auto x = solve_dense(a, bx);
  auto y = solve_dense(a, by);
  std::map<int, Vec2> out;
  for (std::size_t i = 0; i < n; ++i) out[followers[i]] = {x[i], y[i]};
  return out;
}

}  // namespace contdef
