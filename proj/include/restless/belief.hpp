#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "restless/chain.hpp"

namespace restless {

// Sufficient statistic for one arm: the last observed state and the number of
// steps elapsed since that observation (saturated at tau_max). The pulled
// arm's tau resets to 1, every other tau increments.
struct BeliefState {
  std::vector<int> state;
  std::vector<int> tau;
  bool operator==(const BeliefState&) const = default;
};

BeliefState initial_belief(const RestlessInstance& inst);

inline int saturate_tau(std::int64_t tau, int tau_max) {
  return static_cast<int>(std::min<std::int64_t>(tau, tau_max));
}

// Mixed-radix packing of a belief into a single key. Throws std::overflow_error
// if the key space does not fit into 64 bits.
std::uint64_t pack_belief(const BeliefState& z, int num_states, int tau_max);

// In-place update after taking `action` and observing `observed` (ignored for
// action 0).
void advance_belief(BeliefState& z, int action, int observed, int tau_max);

// Smallest tau at which the slowest chain has mixed to within 1e-6 (largest
// slem to the tau-th power), clamped to [16, 512].
int default_tau_max(const RestlessInstance& inst);

// Expected one-pull reward at belief z: (e_s P^tau) . rewards for the pulled
// arm, 0 for the default arm.
double expected_reward(const RestlessInstance& inst, const BeliefState& z, int action);

struct BeliefSuccessor {
  double prob = 0.0;
  BeliefState next;
};

// Successor distribution over beliefs for pulling `action` (>= 1) at z.
// Successor k (the observed state) carries probability (e_s P^tau)_k; entries
// with zero probability are omitted. At most M successors.
std::vector<BeliefSuccessor> belief_transition(const RestlessInstance& inst,
                                               const BeliefState& z, int action,
                                               int tau_max);

struct StateBudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MdpBuildOptions {
  std::int64_t state_cap = 5'000'000;
  // Enumeration starts here; defaults to initial_belief(inst). Online policies
  // seed it with the belief they hold when they start exploiting.
  std::optional<BeliefState> seed_belief;
};

// Explicit truncated belief MDP. Action a in 1..N is stored at column a-1.
// The state set is closed under every action: all M observed-state outcomes
// are enumerated (and therefore covered by any policy table built on top),
// while the transition lists keep only positive-probability entries.
struct TruncatedBeliefMdp {
  int num_arms = 0;
  int num_chain_states = 0;
  int tau_max = 0;
  std::int32_t initial_index = 0;
  std::vector<BeliefState> states;
  std::unordered_map<std::uint64_t, std::int32_t> index;
  std::vector<double> reward;  // [state * num_arms + (a-1)]
  std::vector<std::vector<std::pair<double, std::int32_t>>> transitions;

  std::int32_t index_of(const BeliefState& z) const;
};

TruncatedBeliefMdp build_truncated_mdp(const RestlessInstance& inst, int tau_max,
                                       const MdpBuildOptions& opts = {});

}  // namespace restless
