#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "restless/chain.hpp"
#include "restless/rng.hpp"

namespace restless {

// Bernoulli draws by default; kExpected emits r(i, k) itself (deterministic
// debug mode).
enum class RewardMode { kBernoulli, kExpected };

struct Observation {
  std::int64_t t = 0;
  int action = 0;           // 0 = default arm, i.e. no pull
  int observed_state = -1;  // pre-transition state of the pulled arm
  double reward = 0.0;
};

// Hidden controlled process. All chains advance every step no matter which
// arm is pulled; pulling arm a > 0 reveals that arm's pre-transition state
// and pays a reward drawn before the transition. One root seed is split into
// per-chain streams plus a reward stream, so the action sequence never
// perturbs any chain's sample path.
class Env {
 public:
  Env(RestlessInstance instance, std::uint64_t seed,
      RewardMode mode = RewardMode::kBernoulli);

  void reset(std::uint64_t seed);
  Observation step(int action);

  std::int64_t t() const { return t_; }
  const RestlessInstance& instance() const { return instance_; }
  RewardMode reward_mode() const { return mode_; }
  // Exposed for tests and diagnostics.
  const std::vector<int>& hidden_states() const { return states_; }

 private:
  int sample_transition(int arm, int state);

  RestlessInstance instance_;
  RewardMode mode_;
  std::vector<int> states_;
  std::vector<RandomStream> chain_streams_;
  RandomStream reward_stream_;
  std::int64_t t_ = 0;
};

// CSV log of observations: t,action,observed_state,reward.
class TrajectoryLog {
 public:
  explicit TrajectoryLog(const std::string& path);
  void record(const Observation& obs);

 private:
  std::ofstream out_;
};

}  // namespace restless
