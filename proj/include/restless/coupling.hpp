#pragma once

#include <cstdint>
#include <vector>

#include "restless/belief.hpp"
#include "restless/chain.hpp"
#include "restless/rng.hpp"
#include "restless/solver.hpp"

namespace restless {

// Inverse-CDF coupling. Given the companion index k (distributed by v_prime),
// draws U uniformly from the k-th CDF slice of v_prime and maps it through
// the generalized inverse CDF of v. If k ~ v_prime the result is distributed
// by v; if v_prime prefix-dominates v the result is >= k almost surely.
// Throws std::invalid_argument when v_prime[k] is zero or shapes differ.
int coupled_sample(const ProbVector& v, const ProbVector& v_prime, int k,
                   RandomStream& rng);

// Exact conditional distribution of coupled_sample(v, v_prime, k, .).
ProbVector coupled_sample_pmf(const ProbVector& v, const ProbVector& v_prime,
                              int k);

struct CoupledStep {
  int action = 0;
  int real_state = -1;
  int virtual_state = -1;
  double real_reward = 0.0;
  double virtual_reward = 0.0;
};

struct CoupledTrace {
  std::vector<CoupledStep> steps;
  std::int64_t violation_count = 0;  // pulls with virtual_state < real_state
  double real_reward_sum = 0.0;
  double virtual_reward_sum = 0.0;
};

// Plays the real game on `dominating` while a coupled shadow game runs on
// `base`; actions come from `policy` (solved for `base`) evaluated at the
// virtual belief. Every pull couples the real observation with a virtual one
// via coupled_sample, so the virtual stream is distributionally a run of the
// policy on `base` while staying pathwise in a worse-or-equal state. Rewards
// are recorded as expected values (the per-state reward entries), making the
// pathwise ordering exact. Requires dominating rewards >= base rewards and
// per-pull row dominance; throws std::runtime_error when dominance fails at a
// pull.
CoupledTrace run_dominance_coupling(const RestlessInstance& base,
                                    const RestlessInstance& dominating,
                                    const PolicyTable& policy,
                                    std::int64_t horizon, std::uint64_t seed);

struct BiasGapResult {
  double real_sum = 0.0;
  double virtual_sum = 0.0;
  double difference = 0.0;       // sum of per-step real minus virtual reward
  std::int64_t coupled_pulls = 0;
  std::int64_t order_violations = 0;  // pulls with virtual above real state
  std::int64_t merge_time = -1;  // step after which focal states coincide
};

// Coupled pair of runs of `policy` on one instance, differing only in the
// focal arm's starting observation: the real side begins at z with the focal
// arm (the policy's action at z) observed in state j, the virtual side in
// state k <= j. Non-focal pulls share one sampled outcome; focal pulls couple
// through coupled_sample until the sides merge. Rewards are expected values.
// The difference estimates the bias gap between the two starting beliefs.
BiasGapResult run_bias_gap_coupling(const RestlessInstance& instance,
                                    const PolicyTable& policy,
                                    const BeliefState& z, int j, int k,
                                    std::int64_t horizon, std::uint64_t seed);

}  // namespace restless
