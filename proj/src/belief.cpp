#include "restless/belief.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace restless {

BeliefState initial_belief(const RestlessInstance& inst) {
  BeliefState z;
  z.state = inst.initial_states;
  z.tau.assign(inst.num_arms(), 1);
  return z;
}

std::uint64_t pack_belief(const BeliefState& z, int num_states, int tau_max) {
  const std::uint64_t radix =
      static_cast<std::uint64_t>(num_states) * static_cast<std::uint64_t>(tau_max);
  std::uint64_t key = 0;
  for (std::size_t i = 0; i < z.state.size(); ++i) {
    std::uint64_t digit = static_cast<std::uint64_t>(z.state[i]) * tau_max +
                          static_cast<std::uint64_t>(z.tau[i] - 1);
    if (key > (std::numeric_limits<std::uint64_t>::max() - digit) / radix)
      throw std::overflow_error("belief key space exceeds 64 bits");
    key = key * radix + digit;
  }
  return key;
}

void advance_belief(BeliefState& z, int action, int observed, int tau_max) {
  int n = static_cast<int>(z.state.size());
  for (int i = 0; i < n; ++i) z.tau[i] = saturate_tau(z.tau[i] + 1, tau_max);
  if (action > 0) {
    z.state[action - 1] = observed;
    z.tau[action - 1] = 1;
  }
}

int default_tau_max(const RestlessInstance& inst) {
  double lam = max_slem(inst);
  int tau;
  if (lam <= 0.0) {
    tau = 1;
  } else if (lam >= 1.0) {
    tau = 512;
  } else {
    tau = static_cast<int>(std::ceil(std::log(1e-6) / std::log(lam)));
  }
  return std::clamp(tau, 16, 512);
}

double expected_reward(const RestlessInstance& inst, const BeliefState& z, int action) {
  if (action == 0) return 0.0;
  if (action < 1 || action > inst.num_arms())
    throw std::out_of_range("expected_reward: action out of range");
  const Arm& arm = inst.arms[action - 1];
  ProbVector v = arm.chain.row_power(z.state[action - 1], z.tau[action - 1]);
  double r = 0.0;
  for (int k = 0; k < arm.chain.num_states(); ++k) r += v[k] * arm.rewards[k];
  return r;
}

std::vector<BeliefSuccessor> belief_transition(const RestlessInstance& inst,
                                               const BeliefState& z, int action,
                                               int tau_max) {
  if (action < 1 || action > inst.num_arms())
    throw std::out_of_range("belief_transition: action out of range");
  const Arm& arm = inst.arms[action - 1];
  ProbVector v = arm.chain.row_power(z.state[action - 1], z.tau[action - 1]);
  std::vector<BeliefSuccessor> out;
  for (int k = 0; k < arm.chain.num_states(); ++k) {
    if (v[k] <= 0.0) continue;
    BeliefSuccessor s;
    s.prob = v[k];
    s.next = z;
    advance_belief(s.next, action, k, tau_max);
    out.push_back(std::move(s));
  }
  return out;
}

std::int32_t TruncatedBeliefMdp::index_of(const BeliefState& z) const {
  auto it = index.find(pack_belief(z, num_chain_states, tau_max));
  return it == index.end() ? -1 : it->second;
}

TruncatedBeliefMdp build_truncated_mdp(const RestlessInstance& inst, int tau_max,
                                       const MdpBuildOptions& opts) {
  if (tau_max < 1) throw std::invalid_argument("build_truncated_mdp: tau_max < 1");
  TruncatedBeliefMdp mdp;
  mdp.num_arms = inst.num_arms();
  mdp.num_chain_states = inst.num_states();
  mdp.tau_max = tau_max;

  BeliefState seed = opts.seed_belief ? *opts.seed_belief : initial_belief(inst);
  if (static_cast<int>(seed.state.size()) != mdp.num_arms)
    throw std::invalid_argument("build_truncated_mdp: seed belief arity mismatch");
  for (int i = 0; i < mdp.num_arms; ++i) {
    if (seed.state[i] < 0 || seed.state[i] >= mdp.num_chain_states ||
        seed.tau[i] < 1 || seed.tau[i] > tau_max)
      throw std::invalid_argument("build_truncated_mdp: seed belief out of range");
  }

  auto intern = [&](const BeliefState& z) -> std::int32_t {
    std::uint64_t key = pack_belief(z, mdp.num_chain_states, tau_max);
    auto [it, inserted] = mdp.index.try_emplace(
        key, static_cast<std::int32_t>(mdp.states.size()));
    if (inserted) {
      if (static_cast<std::int64_t>(mdp.states.size()) >= opts.state_cap)
        throw StateBudgetExceeded("belief state budget exceeded: cap " +
                                  std::to_string(opts.state_cap));
      mdp.states.push_back(z);
    }
    return it->second;
  };

  mdp.initial_index = intern(seed);

  // Breadth-first closure. All M observed-state outcomes are interned so the
  // state set covers anything a tracker can reach, including outcomes the
  // estimated chain assigns probability zero.
  for (std::size_t head = 0; head < mdp.states.size(); ++head) {
    BeliefState z = mdp.states[head];  // copy: states may reallocate
    for (int a = 1; a <= mdp.num_arms; ++a) {
      const Arm& arm = inst.arms[a - 1];
      ProbVector v = arm.chain.row_power(z.state[a - 1], z.tau[a - 1]);
      double r = 0.0;
      for (int k = 0; k < mdp.num_chain_states; ++k) r += v[k] * arm.rewards[k];
      mdp.reward.push_back(r);

      std::vector<std::pair<double, std::int32_t>> row;
      for (int k = 0; k < mdp.num_chain_states; ++k) {
        BeliefState next = z;
        advance_belief(next, a, k, tau_max);
        std::int32_t idx = intern(next);
        if (v[k] > 0.0) row.emplace_back(v[k], idx);
      }
      mdp.transitions.push_back(std::move(row));
    }
  }
  return mdp;
}

}  // namespace restless
