#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "restless/chain.hpp"

namespace restless {

struct VerifyCheck {
  std::string name;
  bool pass = false;
  std::int64_t trials = 0;
  std::int64_t failures = 0;
  double worst = 0.0;  // worst observed margin or statistic
  double bound = 0.0;  // threshold the statistic was tested against
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  // Instance-dependent simulations skipped because the instance failed
  // validation; their lemmas presuppose the model assumptions.
  std::vector<std::string> skipped;

  bool all_pass() const;
  const VerifyCheck* find(const std::string& name) const;
};

struct VerifyConfig {
  std::uint64_t seed = 1;
  double c1 = 0.05;  // assumption floor demanded of the target instance
  int random_chains = 200;
  int max_states = 6;
  std::int64_t coupling_draws = 100'000;
  std::int64_t sim_horizon = 20'000;
  int sim_seeds = 5;
  int exploration_runs = 20;
  std::int64_t exploration_m = 1000;
  double shift_delta = 0.02;
  double epsilon = 1e-9;
  int tau_max = 0;
  std::int64_t state_cap = 5'000'000;
  int bias_gap_triples = 8;
  std::string out_dir;  // when set: one JSON file per check plus a summary
};

// Property suite over the model lemmas: target-instance assumption checks,
// randomized chain dominance sweeps, coupling marginal/order checks, and the
// instance simulations (dominance run, gain ordering, estimate radius
// frequency, bias-gap bound). Failures are report content, not exceptions.
VerifyReport verify_lemmas(const RestlessInstance& inst,
                           const VerifyConfig& config = {});

std::string report_to_json_text(const VerifyReport& report);
VerifyReport report_from_json_text(const std::string& text);

// Writes check-<name>.json per check plus verify-summary.json; returns the
// summary path.
std::string write_report_files(const VerifyReport& report,
                               const std::string& out_dir);

}  // namespace restless
