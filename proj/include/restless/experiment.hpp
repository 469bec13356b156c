#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "restless/chain.hpp"
#include "restless/env.hpp"
#include "restless/policies.hpp"

namespace restless {

// Fixed-point decimal with 10 significant digits, shared by all CSV writers
// so identical configs reproduce byte-identical files.
std::string format_double(double x);

struct PolicySpec {
  // restless-ucb | restless-ucb-myopic | thompson-9 | thompson-4 |
  // fixed-arm-<k> | oracle-replay
  std::string name = "restless-ucb";
  std::int64_t m_override = 0;
  double rad_override = -1.0;
  std::vector<double> ts_grid;        // overrides the name's default grid
  std::int64_t ts_first_episode = 100;
  bool ts_known_rewards = true;
};

// Fresh policy instance for one replication. Thompson and oracle-replay
// policies receive the true instance (known rewards / reference dynamics).
std::unique_ptr<Policy> make_policy(const PolicySpec& spec,
                                    const RestlessInstance& inst,
                                    int tau_max, double epsilon,
                                    std::int64_t state_cap);

struct ExperimentConfig {
  std::string instance = "paper-1";  // builtin name or JSON file path
  PolicySpec policy;
  std::int64_t horizon = 100'000;
  int reps = 20;
  std::uint64_t seed = 1;
  int tau_max = 0;      // 0: instance default
  double epsilon = 1e-9;
  std::int64_t state_cap = 5'000'000;
  RewardMode reward_mode = RewardMode::kBernoulli;
  std::string out_dir;  // empty: no files written
  int threads = 0;      // 0: hardware concurrency
};

struct ReferenceGain {
  double value = 0.0;
  std::string method;          // "rvi" or "mc-myopic"
  double epsilon = 0.0;        // solver tolerance (rvi)
  double std_error = 0.0;      // across replications (mc-myopic)
  int tau_max = 0;
  double truncation_scale = 0.0;  // lambda_max^tau_max, truncation residual order
};

// Long-run optimal average reward of the true instance: exact solver gain,
// falling back to a Monte Carlo myopic estimate when the belief enumeration
// exceeds the state budget.
ReferenceGain reference_gain(const RestlessInstance& inst, int tau_max,
                             double epsilon, std::int64_t state_cap,
                             std::int64_t horizon, std::uint64_t seed);

// Geometric checkpoint grid: round(10^(i/20)) deduplicated, capped and
// terminated at the horizon.
std::vector<std::int64_t> checkpoint_grid(std::int64_t horizon);

struct RegretPoint {
  std::int64_t t = 0;
  double cum_reward = 0.0;
  double cum_regret = 0.0;  // t * mu_star - cum_reward
};

struct ReplicationResult {
  int rep = 0;
  std::vector<RegretPoint> points;
  double wall_seconds = 0.0;
};

struct AggregatePoint {
  std::int64_t t = 0;
  double mean_regret = 0.0;
  double std_regret = 0.0;
  int n_reps = 0;
};

struct ExperimentResult {
  ReferenceGain mu_star;
  std::vector<std::int64_t> checkpoints;
  std::vector<ReplicationResult> replications;  // ordered by rep index
  std::vector<AggregatePoint> aggregate;
  double total_seconds = 0.0;
  std::string replications_csv;  // paths, empty when out_dir unset
  std::string aggregate_csv;
  std::string summary_json;
};

// Runs config.reps replications (seeds seed + rep) in a worker pool, computes
// regret against reference_gain, and writes replications.csv, aggregate.csv
// and summary.json under out_dir when set. Output is deterministic for a
// fixed config regardless of thread count.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Aggregate recomputation used by run_experiment and by consistency checks.
std::vector<AggregatePoint> aggregate_regret(
    const std::vector<ReplicationResult>& replications);

std::string replications_to_csv(const std::vector<ReplicationResult>& reps);
std::string aggregate_to_csv(const std::vector<AggregatePoint>& agg);

// Deterministic two-state benchmark family for timing runs: arm i has
// up = 0.3 + 0.04 (i-1), down = 0.2 + 0.03 (i-1), rewards (1 - 0.05 (i-1), 0).
RestlessInstance timing_instance(int num_arms);

struct TimingRow {
  int num_arms = 0;
  double mean_seconds = 0.0;
  double std_seconds = 0.0;
  int reps = 0;
};

// Mean wall-clock of full runs of the policy per arm count. The policy spec
// should use the myopic oracle; exact solving is exponential in the arm count.
std::vector<TimingRow> timing_benchmark(const std::vector<int>& arm_counts,
                                        std::int64_t horizon,
                                        const PolicySpec& spec, int reps,
                                        std::uint64_t seed);

std::string timing_to_csv(const std::vector<TimingRow>& rows);

}  // namespace restless
