#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "restless/env.hpp"
#include "restless/solver.hpp"

namespace restless {

using BeliefPolicy = std::function<int(const BeliefState&)>;

struct RolloutResult {
  double mean_reward = 0.0;  // per step, averaged over replications
  double std_error = 0.0;    // across replication means (0 when reps == 1)
  std::vector<double> rep_means;
};

// Monte Carlo average reward of a belief-feedback policy on the real
// environment. Replication r uses seed + r. Serves as the mu* fallback when
// exact solving is out of budget.
RolloutResult policy_gain(const RestlessInstance& inst, const BeliefPolicy& policy,
                          std::int64_t horizon, int reps, std::uint64_t seed,
                          int tau_max, RewardMode mode = RewardMode::kBernoulli);

}  // namespace restless
