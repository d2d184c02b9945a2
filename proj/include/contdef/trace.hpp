#pragma once

#include <map>
#include <vector>

#include "contdef/netsim.hpp"
#include "contdef/vec2.hpp"

namespace contdef {

struct AgentSample {
  Vec2 desired;    // global desired position at this instant
  Vec2 setpoint;   // position command the controller actually used
  Vec2 position;   // plant truth
  Vec2 velocity;
  bool controller_ran = false;
};

struct TraceSample {
  double t = 0.0;
  std::map<int, AgentSample> agents;
};

struct Trace {
  FollowerMode mode = FollowerMode::GlobalReference;
  double dt = 0.0;
  std::vector<TraceSample> samples;
};

}  // namespace contdef
