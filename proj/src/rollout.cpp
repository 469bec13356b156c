#include "restless/rollout.hpp"

#include <cmath>

#include "restless/env.hpp"

namespace restless {

RolloutResult policy_gain(const RestlessInstance& inst, const BeliefPolicy& policy,
                          std::int64_t horizon, int reps, std::uint64_t seed,
                          int tau_max, RewardMode mode) {
  if (horizon <= 0) throw std::invalid_argument("rollout: horizon must be positive");
  if (reps <= 0) throw std::invalid_argument("rollout: reps must be positive");
  RolloutResult result;
  result.rep_means.reserve(reps);
  for (int rep = 0; rep < reps; ++rep) {
    Env env(inst, seed + static_cast<std::uint64_t>(rep), mode);
    BeliefState z = initial_belief(inst);
    double total = 0.0;
    for (std::int64_t t = 0; t < horizon; ++t) {
      int a = policy(z);
      Observation obs = env.step(a);
      total += obs.reward;
      advance_belief(z, a, obs.observed_state, tau_max);
    }
    result.rep_means.push_back(total / static_cast<double>(horizon));
  }
  double sum = 0.0;
  for (double m : result.rep_means) sum += m;
  result.mean_reward = sum / reps;
  if (reps > 1) {
    double ss = 0.0;
    for (double m : result.rep_means) {
      double d = m - result.mean_reward;
      ss += d * d;
    }
    result.std_error = std::sqrt(ss / (reps - 1.0) / reps);
  } else {
    result.std_error = 0.0;
  }
  return result;
}

}  // namespace restless
