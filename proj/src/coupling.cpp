#include "restless/coupling.hpp"

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace restless {
namespace {

std::vector<double> prefix_sums(const ProbVector& v) {
  std::vector<double> cdf(v.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    acc += v[i];
    cdf[i] = acc;
  }
  return cdf;
}

void check_pair(const ProbVector& v, const ProbVector& v_prime, int k) {
  if (v.size() != v_prime.size() || v.empty()) {
    throw std::invalid_argument("coupled_sample: shape mismatch");
  }
  if (k < 0 || static_cast<std::size_t>(k) >= v_prime.size()) {
    throw std::invalid_argument("coupled_sample: index out of range");
  }
  if (!(v_prime[k] > 0.0)) {
    throw std::invalid_argument(
        "coupled_sample: companion index has zero probability");
  }
}

}  // namespace

int coupled_sample(const ProbVector& v, const ProbVector& v_prime, int k,
                   RandomStream& rng) {
  check_pair(v, v_prime, k);
  const std::vector<double> cdf_p = prefix_sums(v_prime);
  const std::vector<double> cdf = prefix_sums(v);
  const double start = k > 0 ? cdf_p[k - 1] : 0.0;
  const double end = cdf_p[k];
  const double u = rng.uniform_open_closed();
  double target = start + u * (end - start);
  // Clamp to (start, end]; keeps the identity case exact and shields the
  // ordering guarantee from rounding at the slice boundaries.
  if (target > end) target = end;
  if (target <= start) target = end;
  const int n = static_cast<int>(v.size());
  for (int jx = 0; jx < n; ++jx) {
    if (cdf[jx] >= target) return jx;
  }
  return n - 1;
}

ProbVector coupled_sample_pmf(const ProbVector& v, const ProbVector& v_prime,
                              int k) {
  check_pair(v, v_prime, k);
  const std::vector<double> cdf_p = prefix_sums(v_prime);
  const std::vector<double> cdf = prefix_sums(v);
  const double start = k > 0 ? cdf_p[k - 1] : 0.0;
  const double end = cdf_p[k];
  const double width = end - start;
  ProbVector out(v.size(), 0.0);
  for (std::size_t jx = 0; jx < v.size(); ++jx) {
    const double lo = jx > 0 ? cdf[jx - 1] : 0.0;
    const double overlap =
        std::min(cdf[jx], end) - std::max(lo, start);
    if (overlap > 0.0) out[jx] = overlap / width;
  }
  return out;
}

namespace {

struct ArmClock {
  std::vector<int> state;
  std::vector<std::int64_t> last_pull;
};

BeliefState clocks_to_belief(const ArmClock& c, std::int64_t t, int tau_max) {
  BeliefState z;
  z.state.resize(c.state.size());
  z.tau.resize(c.state.size());
  for (std::size_t i = 0; i < c.state.size(); ++i) {
    z.state[i] = c.state[i];
    z.tau[i] = saturate_tau(t - c.last_pull[i], tau_max);
  }
  return z;
}

}  // namespace

CoupledTrace run_dominance_coupling(const RestlessInstance& base,
                                    const RestlessInstance& dominating,
                                    const PolicyTable& policy,
                                    std::int64_t horizon, std::uint64_t seed) {
  const int n = base.num_arms();
  if (dominating.num_arms() != n ||
      dominating.num_states() != base.num_states()) {
    throw std::invalid_argument(
        "run_dominance_coupling: instance shapes differ");
  }
  for (int i = 0; i < n; ++i) {
    const auto& r = base.arms[i].rewards;
    const auto& rp = dominating.arms[i].rewards;
    for (std::size_t s = 0; s < r.size(); ++s) {
      if (rp[s] < r[s] - kDominanceSlack) {
        throw std::invalid_argument(
            "run_dominance_coupling: dominating rewards below base rewards");
      }
    }
  }

  RandomStream rng(seed);
  // Both games start from the base instance's physical states; only the
  // dynamics and rewards differ on the real side.
  ArmClock real{base.initial_states, std::vector<std::int64_t>(n, -1)};
  ArmClock virt{base.initial_states, std::vector<std::int64_t>(n, -1)};

  CoupledTrace trace;
  trace.steps.reserve(static_cast<std::size_t>(horizon));
  for (std::int64_t t = 0; t < horizon; ++t) {
    const BeliefState zv = clocks_to_belief(virt, t, policy.tau_max);
    const int a = policy.action(zv);
    const int idx = a - 1;
    const std::int64_t tau = t - real.last_pull[idx];
    const ProbVector vp =
        dominating.arms[idx].chain.row_power(real.state[idx], tau);
    const ProbVector vb = base.arms[idx].chain.row_power(virt.state[idx], tau);
    if (!prefix_dominates(vp, vb)) {
      throw std::runtime_error(
          "run_dominance_coupling: dominance failed at step " +
          std::to_string(t));
    }
    const int k = rng.categorical(vp);
    const int jx = coupled_sample(vb, vp, k, rng);
    if (jx < k) ++trace.violation_count;

    CoupledStep step;
    step.action = a;
    step.real_state = k;
    step.virtual_state = jx;
    step.real_reward = dominating.arms[idx].rewards[k];
    step.virtual_reward = base.arms[idx].rewards[jx];
    trace.real_reward_sum += step.real_reward;
    trace.virtual_reward_sum += step.virtual_reward;
    trace.steps.push_back(step);

    real.state[idx] = k;
    real.last_pull[idx] = t;
    virt.state[idx] = jx;
    virt.last_pull[idx] = t;
  }
  return trace;
}

BiasGapResult run_bias_gap_coupling(const RestlessInstance& instance,
                                    const PolicyTable& policy,
                                    const BeliefState& z, int j, int k,
                                    std::int64_t horizon, std::uint64_t seed) {
  const int n = instance.num_arms();
  const int m = instance.num_states();
  if (static_cast<int>(z.state.size()) != n) {
    throw std::invalid_argument("run_bias_gap_coupling: belief shape");
  }
  if (k < 0 || j < k || j >= m) {
    throw std::invalid_argument("run_bias_gap_coupling: need 0 <= k <= j < M");
  }
  const int focal = policy.action(z) - 1;

  RandomStream rng(seed);
  // Both sides start one step after z: the focal arm was pulled and observed
  // (real j, virtual k), every other arm's elapsed time grew by one.
  ArmClock real;
  real.state.resize(n);
  real.last_pull.resize(n);
  ArmClock virt;
  for (int i = 0; i < n; ++i) {
    real.state[i] = z.state[i];
    real.last_pull[i] = -static_cast<std::int64_t>(z.tau[i]) - 1;
  }
  real.state[focal] = j;
  real.last_pull[focal] = -1;
  virt = real;
  virt.state[focal] = k;

  BiasGapResult res;
  double gap_acc = 0.0;  // per-step gaps sum exactly to zero once merged
  bool merged = (j == k);
  if (merged) res.merge_time = 0;
  for (std::int64_t t = 0; t < horizon; ++t) {
    const BeliefState zv = clocks_to_belief(virt, t, policy.tau_max);
    const int a = policy.action(zv);
    const int idx = a - 1;
    const std::int64_t tau = t - real.last_pull[idx];
    const auto& chain = instance.arms[idx].chain;
    int real_obs = -1;
    int virt_obs = -1;
    if (idx != focal || merged) {
      const ProbVector row = chain.row_power(real.state[idx], tau);
      real_obs = rng.categorical(row);
      virt_obs = real_obs;
    } else {
      const ProbVector v_real = chain.row_power(real.state[idx], tau);
      const ProbVector v_virt = chain.row_power(virt.state[idx], tau);
      real_obs = rng.categorical(v_real);
      virt_obs = coupled_sample(v_virt, v_real, real_obs, rng);
      ++res.coupled_pulls;
      if (virt_obs > real_obs) ++res.order_violations;
      if (virt_obs == real_obs) {
        merged = true;
        res.merge_time = t + 1;
      }
    }
    const double r_real = instance.arms[idx].rewards[real_obs];
    const double r_virt = instance.arms[idx].rewards[virt_obs];
    res.real_sum += r_real;
    res.virtual_sum += r_virt;
    gap_acc += r_real - r_virt;
    real.state[idx] = real_obs;
    real.last_pull[idx] = t;
    virt.state[idx] = virt_obs;
    virt.last_pull[idx] = t;
  }
  res.difference = gap_acc;
  return res;
}

}  // namespace restless
