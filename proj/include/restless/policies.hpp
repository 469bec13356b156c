#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "restless/belief.hpp"
#include "restless/chain.hpp"
#include "restless/env.hpp"
#include "restless/rng.hpp"
#include "restless/solver.hpp"

namespace restless {

struct PolicyContext {
  int num_arms = 0;
  int num_chain_states = 0;
  std::int64_t horizon = 0;
  std::uint64_t seed = 0;
};

// Uniform online-policy interface. The driver loop is: a = choose(t), apply a
// to the env, feed the observation back via observe(). choose is a pure
// function of internal state; observe and reset are the only mutators.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void reset(const PolicyContext& ctx) = 0;
  virtual int choose(std::int64_t t) const = 0;
  virtual void observe(const Observation& obs) = 0;
  virtual std::string name() const = 0;
};

// Transition/reward counts harvested from consecutive pulls of one arm. A
// visit to state j is "completed" when the next step pulls the same arm
// again, revealing the outgoing transition; the visit's reward is credited at
// that moment. Single-state arms complete every visit immediately (the only
// transition is the self loop). Arms are 1-based, states 0-based.
class EmpiricalStats {
 public:
  EmpiricalStats() = default;
  EmpiricalStats(int num_arms, int num_states);

  void record(std::int64_t t, int action, int observed_state, double reward);

  std::int64_t completed(int arm, int state) const;
  std::int64_t min_completed(int arm) const;
  std::int64_t transition_count(int arm, int from, int to) const;
  std::int64_t visits(int arm, int state) const;
  double reward_sum(int arm, int state) const;
  std::int64_t reward_count(int arm, int state) const;

  // Point estimates over completed visits. The returned instance carries the
  // estimated chains and mean rewards; initial states are all 0 (unused).
  // Throws std::runtime_error naming the first (arm, state) pair with zero
  // completed observations.
  RestlessInstance estimates() const;

  int num_arms() const { return num_arms_; }
  int num_states() const { return num_states_; }

 private:
  int num_arms_ = 0;
  int num_states_ = 0;
  std::vector<std::vector<std::int64_t>> completed_;
  std::vector<std::vector<std::array<std::int64_t, 3>>> trans_;  // to-from+1
  std::vector<std::vector<std::int64_t>> visits_;
  std::vector<std::vector<double>> reward_sum_;
  std::vector<std::vector<std::int64_t>> reward_count_;
  int last_arm_ = 0;
  std::int64_t last_t_ = -2;
  int last_state_ = -1;
  double last_reward_ = 0.0;
};

struct ConfidenceRadius {
  double rad = 0.0;
  std::int64_t m = 0;
};

// Smallest integer m with m^3 >= T^2, i.e. ceil(T^(2/3)) computed exactly.
std::int64_t default_m(std::int64_t horizon);

// rad = sqrt(log T / (2 m)), natural logarithm.
ConfidenceRadius confidence_radius(std::int64_t horizon, std::int64_t m);

// True when every near-diagonal transition entry and every reward of the
// estimate lies within rad of the truth (the high-probability event the
// radius is built for).
bool within_radius(const RestlessInstance& truth, const RestlessInstance& estimate,
                   double rad);

// Optimistic shift: within every row of every chain, move min(rad, available
// up-mass) from the up entry toward lower states (to the down entry for
// interior rows, to stay for the first row); the last row moves min(rad,
// 1 - down) from stay to down. Rewards become min(r + rad, 1). Every output
// row prefix-dominates the corresponding input row.
RestlessInstance build_optimistic_instance(const RestlessInstance& estimated,
                                           double rad);

struct ScheduleStatus {
  int next_arm = 1;
  bool arm_advanced = false;
  bool complete = false;
};

// Round-robin exploration: keep pulling current_arm until each of its states
// has m_target completed observations, then move on; complete after the last
// arm finishes.
ScheduleStatus exploration_schedule(const EmpiricalStats& stats, int current_arm,
                                    std::int64_t m_target);

enum class OracleKind { kExactRvi, kMyopic };

struct RestlessUcbOptions {
  OracleKind oracle = OracleKind::kExactRvi;
  std::int64_t m_override = 0;  // 0: default_m(T)
  double rad_override = -1.0;   // negative: confidence_radius(T, m)
  int tau_max = 0;              // 0: derived from the optimistic instance
  double epsilon = 1e-9;
  std::int64_t state_cap = 5'000'000;
};

// Explore-then-commit: round-robin exploration until every (arm, state) has
// m(T) completed observations, then build the optimistic instance from the
// estimates, solve it (exact solver or myopic rule), seed the belief from the
// actual observation history, and play the solved policy for the rest of the
// horizon.
class RestlessUcbPolicy : public Policy {
 public:
  explicit RestlessUcbPolicy(RestlessUcbOptions opts = {});

  void reset(const PolicyContext& ctx) override;
  int choose(std::int64_t t) const override;
  void observe(const Observation& obs) override;
  std::string name() const override;

  bool exploring() const { return !committed_; }
  std::int64_t commit_time() const { return commit_time_; }  // -1 until commit
  const ConfidenceRadius& radius() const { return radius_; }
  const EmpiricalStats& stats() const { return stats_; }
  const BeliefState& belief() const { return belief_; }
  int tau_max() const { return tau_max_eff_; }
  const RestlessInstance* estimated() const;
  const RestlessInstance* optimistic() const;
  const PolicyTable* table() const;

 private:
  void commit(std::int64_t t_observed);

  RestlessUcbOptions opts_;
  PolicyContext ctx_;
  std::int64_t m_target_ = 0;
  ConfidenceRadius radius_;
  EmpiricalStats stats_;
  int current_arm_ = 1;
  bool committed_ = false;
  std::int64_t commit_time_ = -1;
  std::vector<int> last_state_;
  std::vector<std::int64_t> last_time_;
  BeliefState belief_;
  int tau_max_eff_ = 0;
  std::optional<RestlessInstance> estimated_;
  std::optional<RestlessInstance> optimistic_;
  std::optional<PolicyTable> table_;
};

struct ThompsonOptions {
  // Candidate diagonal values; per arm the cells are grid x grid interpreted
  // as (P(0,0), P(M-1,M-1)) of a 2-state chain.
  std::vector<double> grid;
  // Per-arm explicit cell lists; when non-empty this overrides grid.
  std::vector<std::vector<std::pair<double, double>>> explicit_cells;
  // Known rewards per arm (the default benchmark mode). Empty: estimate from
  // observed samples, 0.5 before any sample.
  std::vector<std::vector<double>> known_rewards;
  std::vector<int> initial_states;
  std::int64_t first_episode = 100;
  double epsilon = 1e-9;
  int tau_max = 0;  // 0: derived per episode from the sampled instance
  std::int64_t state_cap = 5'000'000;
};

// Episodic Thompson sampling over a discrete per-arm grid of 2-state chains.
// Exact posterior from consecutive-pull one-step transitions; at each episode
// boundary one instance is sampled from the posterior product, solved, and
// its policy played for the episode. Episode lengths double from
// first_episode.
class ThompsonDiscretePolicy : public Policy {
 public:
  explicit ThompsonDiscretePolicy(ThompsonOptions opts);

  void reset(const PolicyContext& ctx) override;
  int choose(std::int64_t t) const override;
  void observe(const Observation& obs) override;
  std::string name() const override;

  const std::vector<std::pair<double, double>>& cells(int arm) const;
  std::vector<double> posterior(int arm) const;
  int solve_count() const { return solve_count_; }
  const PolicyTable* table() const { return table_ ? &*table_ : nullptr; }

 private:
  BeliefState belief_at(std::int64_t t, int tau_max) const;
  RestlessInstance sample_instance();
  void solve_episode(std::int64_t start_t);

  ThompsonOptions opts_;
  PolicyContext ctx_;
  std::vector<std::vector<std::pair<double, double>>> cells_;
  std::vector<std::vector<double>> log_like_;
  EmpiricalStats stats_;
  RandomStream rng_{0};
  std::vector<int> last_state_;
  std::vector<std::int64_t> last_time_;
  std::optional<PolicyTable> table_;
  int tau_max_eff_ = 0;
  std::int64_t episode_end_ = 0;
  std::int64_t episode_len_ = 0;
  int solve_count_ = 0;
};

class FixedArmPolicy : public Policy {
 public:
  explicit FixedArmPolicy(int arm) : arm_(arm) {}
  void reset(const PolicyContext& ctx) override;
  int choose(std::int64_t) const override { return arm_; }
  void observe(const Observation&) override {}
  std::string name() const override;

 private:
  int arm_ = 0;
};

// Plays the exact solver's policy for the true instance, tracking the belief
// from its own observations; the regret reference trajectory.
class OracleReplayPolicy : public Policy {
 public:
  explicit OracleReplayPolicy(RestlessInstance instance, double epsilon = 1e-9,
                              int tau_max = 0,
                              std::int64_t state_cap = 5'000'000);

  void reset(const PolicyContext& ctx) override;
  int choose(std::int64_t t) const override;
  void observe(const Observation& obs) override;
  std::string name() const override;

  const PolicyTable& table() const { return *table_; }
  int tau_max() const { return tau_max_eff_; }

 private:
  RestlessInstance instance_;
  double epsilon_;
  int tau_max_;
  std::int64_t state_cap_;
  std::optional<PolicyTable> table_;
  BeliefState belief_;
  int tau_max_eff_ = 0;
};

}  // namespace restless
