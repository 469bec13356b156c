#pragma once

#include <algorithm>
#include <functional>

#include "restless/chain.hpp"
#include "restless/rng.hpp"

namespace restless {

// Random chain satisfying A2-A4 with floor c1 by construction: every up/down
// entry is drawn from [c1, (1-c1)/2], which leaves every diagonal entry at
// least c1 and keeps up[k] + down[k] <= 1 - c1.
inline BirthDeathChain random_chain(RandomStream& rng, int num_states, double c1) {
  int m = num_states - 1;
  std::vector<double> up(m), down(m);
  double hi = (1.0 - c1) / 2.0;
  for (int k = 0; k < m; ++k) {
    up[k] = c1 + rng.uniform() * (hi - c1);
    down[k] = c1 + rng.uniform() * (hi - c1);
  }
  return BirthDeathChain(std::move(up), std::move(down));
}

// Rewards sorted in nonincreasing order so A1 holds.
inline std::vector<double> random_monotone_rewards(RandomStream& rng, int num_states) {
  std::vector<double> r(num_states);
  for (double& x : r) x = rng.uniform();
  std::sort(r.begin(), r.end(), std::greater<double>());
  return r;
}

inline RestlessInstance random_instance(RandomStream& rng, int num_arms,
                                        int num_states, double c1) {
  std::vector<Arm> arms;
  arms.reserve(num_arms);
  for (int i = 0; i < num_arms; ++i)
    arms.emplace_back(random_chain(rng, num_states, c1),
                      random_monotone_rewards(rng, num_states));
  std::vector<int> init(num_arms);
  for (int& s : init) s = static_cast<int>(rng.raw() % num_states);
  return RestlessInstance(std::move(arms), std::move(init));
}

// Random probability vector (normalized uniforms).
inline ProbVector random_prob_vector(RandomStream& rng, int n) {
  ProbVector v(n);
  double sum = 0.0;
  for (double& x : v) {
    x = rng.uniform() + 1e-3;
    sum += x;
  }
  for (double& x : v) x /= sum;
  return v;
}

// Returns a vector that prefix-dominates v, produced by moving random slices
// of mass from higher to lower indices.
inline ProbVector shift_mass_down(RandomStream& rng, ProbVector v, int moves = 3) {
  int n = static_cast<int>(v.size());
  if (n < 2) return v;
  for (int t = 0; t < moves; ++t) {
    int j = 1 + static_cast<int>(rng.raw() % (n - 1));
    int i = static_cast<int>(rng.raw() % j);
    double amount = v[j] * rng.uniform();
    v[j] -= amount;
    v[i] += amount;
  }
  return v;
}

}  // namespace restless
