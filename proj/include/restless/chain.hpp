#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

namespace restless {

using ProbVector = std::vector<double>;

inline constexpr double kProbTol = 1e-12;
inline constexpr double kDominanceSlack = 1e-12;

bool is_prob_vector(const ProbVector& v, double tol = kProbTol);

// v dominates w when every prefix sum of v is at least the matching prefix
// sum of w (mass shifted toward low indices, i.e. toward better states).
bool prefix_dominates(const ProbVector& v, const ProbVector& w,
                      double slack = kDominanceSlack);

// Tridiagonal (birth-death) transition matrix over states 0..M-1.
// up[k] = P(k, k+1) for k in [0, M-2], down[k] = P(k+1, k) for k in [0, M-2];
// the diagonal is whatever mass remains. Instances are immutable after
// construction and safe to share across threads; the row-power cache is
// internally synchronized.
class BirthDeathChain {
 public:
  BirthDeathChain(std::vector<double> up, std::vector<double> down,
                  std::int64_t power_cache_cap = kDefaultPowerCacheCap);

  BirthDeathChain(const BirthDeathChain& other);
  BirthDeathChain& operator=(const BirthDeathChain& other);

  int num_states() const { return static_cast<int>(up_.size()) + 1; }
  double up(int k) const { return up_[k]; }
  double down(int k) const { return down_[k]; }
  double stay(int k) const;
  // Full matrix entry P(j, k); zero outside the three diagonals.
  double prob(int j, int k) const;
  ProbVector row(int s) const;

  // Unique stationary distribution via the detailed-balance product form.
  // Requires down[k] > 0 everywhere; throws std::domain_error otherwise.
  ProbVector stationary() const;

  // Second largest eigenvalue modulus. Computed by splitting the chain into
  // tridiagonal blocks with positive couplings, symmetrizing each block with
  // a diagonal similarity and running a QL eigensolve.
  double slem() const;

  // e_s * P^tau. Results are cached per (s, tau) up to the cache cap; above
  // the cap the stationary distribution is substituted (callers are expected
  // to be in the mixed regime by then). Cached and uncached paths produce
  // bit-identical output.
  ProbVector row_power(int s, std::int64_t tau) const;
  ProbVector row_power_uncached(int s, std::int64_t tau) const;

  std::int64_t power_cache_cap() const { return cache_cap_; }

  // One transition step of a distribution: v * P.
  ProbVector advance(const ProbVector& v) const;

  static constexpr std::int64_t kDefaultPowerCacheCap = 4096;

 private:

  std::vector<double> up_;
  std::vector<double> down_;
  std::int64_t cache_cap_;
  mutable std::mutex cache_mutex_;
  mutable std::vector<std::vector<ProbVector>> cache_;  // cache_[s][tau]
};

// One arm: a chain plus per-state rewards in [0, 1].
struct Arm {
  Arm(BirthDeathChain chain_in, std::vector<double> rewards_in);

  BirthDeathChain chain;
  std::vector<double> rewards;
};

struct RestlessInstance {
  RestlessInstance(std::vector<Arm> arms_in, std::vector<int> initial_states_in);

  int num_arms() const { return static_cast<int>(arms.size()); }
  int num_states() const { return arms.front().chain.num_states(); }

  std::vector<Arm> arms;
  std::vector<int> initial_states;
};

struct AssumptionCheck {
  std::string assumption;  // "A1".."A4"
  int arm = -1;            // 0-based, -1 for instance-wide
  bool pass = true;
  std::string detail;
};

struct ValidationReport {
  bool ok = true;
  std::vector<AssumptionCheck> checks;
  std::string summary() const;
};

// Checks the model assumptions: A1 rewards nonincreasing in the state index,
// A2 tridiagonal transitions (structural here), A3 up[k] + down[k] <= 1,
// A4 every entry within distance one of the diagonal is >= c1. Only entries
// that exist are checked at the boundaries.
ValidationReport validate_assumptions(const RestlessInstance& inst, double c1);

// Smallest stationary probability across arms and states.
double min_stationary_mass(const RestlessInstance& inst);

// Largest slem across arms.
double max_slem(const RestlessInstance& inst);

}  // namespace restless
