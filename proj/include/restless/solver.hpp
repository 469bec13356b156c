#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "restless/belief.hpp"

namespace restless {

struct RviOptions {
  double epsilon = 1e-9;
  std::int64_t max_iterations = 1'000'000;
  // The plain iteration can cycle when the optimal chain is periodic. If the
  // residual span has not shrunk by stall_ratio over a window, the update is
  // blended with the identity (gain bounds stay exact either way).
  double stall_damping = 0.9;
  std::int64_t stall_window = 2000;
  double stall_ratio = 0.999;
  bool record_spans = false;
};

struct RviCertificate {
  double gain_lower = 0.0;
  double gain_upper = 0.0;
  std::int64_t iterations = 0;
  double final_span = 0.0;
  bool damped = false;
  std::vector<double> span_history;  // filled when record_spans is set
};

struct RviNotConverged : std::runtime_error {
  RviNotConverged(const std::string& msg, double span)
      : std::runtime_error(msg), final_span(span) {}
  double final_span;
};

// Optimal average-reward policy over an enumerated belief MDP. Bias is
// normalized to zero at the MDP's initial state; action ties break toward the
// smallest arm index.
struct PolicyTable {
  int num_arms = 0;
  int num_chain_states = 0;
  int tau_max = 0;
  double gain = 0.0;
  double epsilon = 0.0;
  std::vector<BeliefState> states;
  std::unordered_map<std::uint64_t, std::int32_t> index;
  std::vector<int> actions;   // arm in 1..N per state
  std::vector<double> bias;   // empty for tables loaded from disk
  RviCertificate certificate;

  int action(const BeliefState& z) const;
  double bias_at(const BeliefState& z) const;
};

// Relative value iteration with span stopping rule. The returned gain is the
// midpoint of the final residual bounds, certified to within epsilon/2.
PolicyTable relative_value_iteration(const TruncatedBeliefMdp& mdp,
                                     const RviOptions& opts = {});

// Greedy one-pull policy; ties break toward the smallest arm index.
int myopic_action(const RestlessInstance& inst, const BeliefState& z);

// Versioned flat-file serialization: belief key -> action, plus gain and
// epsilon. Bias is not persisted.
void save_policy_table(const PolicyTable& table, const std::string& path);
PolicyTable load_policy_table(const std::string& path);

}  // namespace restless
