// Acceptance gate. Runs the nine release criteria end to end and prints one
// [PASS]/[FAIL] line per criterion with the measured statistics and pinned
// thresholds; the exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "restless/belief.hpp"
#include "restless/chain.hpp"
#include "restless/coupling.hpp"
#include "restless/env.hpp"
#include "restless/experiment.hpp"
#include "restless/instance_io.hpp"
#include "restless/policies.hpp"
#include "restless/random_instances.hpp"
#include "restless/rng.hpp"
#include "restless/rollout.hpp"
#include "restless/solver.hpp"

namespace {

using namespace restless;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// 1. Randomized instances satisfying the model assumptions: transition rows
// ordered by prefix dominance, dominance preserved by one chain step, the
// optimistic shift dominating row-wise, and the tau-step perturbation gap
// bounded by 2*tau*delta. Zero violations beyond 1e-10 slack.
Outcome lemma_mechanisms() {
  const auto t0 = Clock::now();
  const double slack = 1e-10;
  const int instances = 1000;
  RandomStream rng(101);
  std::int64_t checks = 0;
  std::int64_t violations = 0;
  for (int i = 0; i < instances; ++i) {
    const int m = 2 + static_cast<int>(rng.raw() % 5);
    const int arms = 1 + static_cast<int>(rng.raw() % 3);
    RestlessInstance inst = random_instance(rng, arms, m, 0.05);
    ++checks;
    if (!validate_assumptions(inst, 0.05).ok) {
      ++violations;
      continue;
    }
    const double delta = 0.005 + 0.095 * rng.uniform();
    RestlessInstance shifted = build_optimistic_instance(inst, delta);
    for (int a = 0; a < arms; ++a) {
      const BirthDeathChain& chain = inst.arms[a].chain;
      const BirthDeathChain& moved = shifted.arms[a].chain;
      for (int s = 0; s + 1 < m; ++s) {
        ++checks;
        if (!prefix_dominates(chain.row(s), chain.row(s + 1), slack)) ++violations;
      }
      for (int s = 0; s < m; ++s) {
        ++checks;
        if (!prefix_dominates(moved.row(s), chain.row(s), slack)) ++violations;
      }
      for (int pair = 0; pair < 3; ++pair) {
        ProbVector w = random_prob_vector(rng, m);
        ProbVector v = shift_mass_down(rng, w);
        ++checks;
        if (!prefix_dominates(chain.advance(v), chain.advance(w), slack)) ++violations;
      }
      for (int s = 0; s < m; ++s) {
        ProbVector row_base = chain.row(s);
        ProbVector row_moved = moved.row(s);
        for (int tau = 1; tau <= 50; ++tau) {
          double gap = 0.0;
          for (int jx = 0; jx < m; ++jx)
            gap = std::max(gap, std::abs(row_base[jx] - row_moved[jx]));
          ++checks;
          if (gap > 2.0 * tau * delta + slack) ++violations;
          row_base = chain.advance(row_base);
          row_moved = moved.advance(row_moved);
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << violations << " violations / " << checks << " checks on " << instances
     << " instances, slack 1e-10 (" << secs << "s, limit 60s)";
  return {violations == 0 && secs < 60.0, os.str()};
}

// 2. Coupled sampling: the analytic conditional mixes back to the target
// marginal exactly, one million draws per triple land within TV 0.01, and no
// draw breaks the ordering when the companion distribution dominates.
Outcome coupling_correctness() {
  const auto t0 = Clock::now();
  const std::int64_t draws = 1'000'000;
  RandomStream rng(202);
  double worst_tv = 0.0;
  double worst_mix = 0.0;
  std::int64_t order_violations = 0;
  int dominant = 0;
  for (int trip = 0; trip < 50; ++trip) {
    const int m = 2 + static_cast<int>(rng.raw() % 5);
    ProbVector v = random_prob_vector(rng, m);
    ProbVector vp =
        trip % 2 == 0 ? shift_mass_down(rng, v) : random_prob_vector(rng, m);
    const bool dom = prefix_dominates(vp, v, 1e-12);
    if (dom) ++dominant;
    ProbVector mix(m, 0.0);
    for (int k = 0; k < m; ++k) {
      ProbVector pmf = coupled_sample_pmf(v, vp, k);
      for (int jx = 0; jx < m; ++jx) mix[jx] += vp[k] * pmf[jx];
    }
    for (int jx = 0; jx < m; ++jx)
      worst_mix = std::max(worst_mix, std::abs(mix[jx] - v[jx]));
    std::vector<std::int64_t> counts(m, 0);
    for (std::int64_t d = 0; d < draws; ++d) {
      const int k = rng.categorical(vp);
      const int jx = coupled_sample(v, vp, k, rng);
      ++counts[jx];
      if (dom && jx < k) ++order_violations;
    }
    double tv = 0.0;
    for (int jx = 0; jx < m; ++jx)
      tv += std::abs(counts[jx] / static_cast<double>(draws) - v[jx]);
    worst_tv = std::max(worst_tv, 0.5 * tv);
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << "worst TV " << worst_tv << " <= 0.01, mixture err " << worst_mix
     << " <= 1e-10, " << order_violations << " order violations over " << dominant
     << " dominant triples (" << secs << "s, limit 60s)";
  return {worst_tv <= 0.01 && worst_mix <= 1e-10 && order_violations == 0 &&
              dominant >= 25 && secs < 60.0,
          os.str()};
}

// 3. Dominance simulation end to end on the first builtin instance against
// its optimistic shift: no pull puts the virtual run in a better state, every
// run's real reward total dominates, and the shifted gain is optimistic.
Outcome dominance_end_to_end() {
  const auto t0 = Clock::now();
  RestlessInstance base = builtin_instance("paper-1");
  RestlessInstance shifted = build_optimistic_instance(base, 0.02);
  const int tau = std::max(default_tau_max(base), default_tau_max(shifted));
  PolicyTable base_table = relative_value_iteration(build_truncated_mdp(base, tau));
  PolicyTable shifted_table =
      relative_value_iteration(build_truncated_mdp(shifted, tau));
  std::int64_t state_violations = 0;
  int reward_inversions = 0;
  for (int seed = 1; seed <= 20; ++seed) {
    CoupledTrace trace = run_dominance_coupling(base, shifted, base_table, 100'000,
                                                static_cast<std::uint64_t>(seed));
    state_violations += trace.violation_count;
    if (trace.real_reward_sum < trace.virtual_reward_sum) ++reward_inversions;
  }
  const double gain_gap = shifted_table.gain - base_table.gain;
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << state_violations << " state violations, " << reward_inversions
     << " reward inversions over 20 runs x 1e5 steps, gain gap " << gain_gap
     << " >= -2e-9 (" << secs << "s, limit 300s)";
  return {state_violations == 0 && reward_inversions == 0 && gain_gap >= -2e-9 &&
              secs < 300.0,
          os.str()};
}

// 4. Frequency of the estimate-concentration event over full exploration
// phases: failures stay within the analytic rate plus three binomial standard
// errors.
Outcome event_frequency() {
  const auto t0 = Clock::now();
  RestlessInstance inst = builtin_instance("paper-1");
  const std::int64_t horizon = 1'000'000;
  const std::int64_t m = 10'000;
  const ConfidenceRadius radius = confidence_radius(horizon, m);
  const int runs = 200;
  int failures = 0;
  for (int run = 0; run < runs; ++run) {
    RestlessUcbOptions opts;
    opts.oracle = OracleKind::kMyopic;
    opts.m_override = m;
    RestlessUcbPolicy policy(opts);
    const std::uint64_t seed = 400 + static_cast<std::uint64_t>(run);
    PolicyContext ctx{inst.num_arms(), inst.num_states(), horizon, seed};
    policy.reset(ctx);
    Env env(inst, seed);
    for (std::int64_t t = 0; t < horizon && policy.exploring(); ++t)
      policy.observe(env.step(policy.choose(t)));
    if (policy.exploring() || !within_radius(inst, *policy.estimated(), radius.rad))
      ++failures;
  }
  const double per_run =
      8.0 * inst.num_arms() * inst.num_states() / static_cast<double>(horizon);
  const double allowed =
      runs * per_run + 3.0 * std::sqrt(runs * per_run * (1.0 - per_run));
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << failures << " failures <= " << allowed << " allowed (rate bound "
     << per_run << "/run, " << runs << " runs, rad " << radius.rad << ") (" << secs
     << "s, limit 600s)";
  return {failures <= allowed && secs < 600.0, os.str()};
}

// Shared experiment sweep for criteria 5 and 6: the learning policy across a
// doubling horizon ladder plus both baselines at the largest horizon, all at
// 200 replications and a common seed.
struct RegretStudy {
  std::vector<std::int64_t> horizons{62'500, 125'000, 250'000, 500'000};
  std::vector<double> ucb_final;
  std::vector<double> fixed_final;
  std::vector<AggregatePoint> ts4;
  std::vector<AggregatePoint> ts9;
  double seconds = 0.0;
};

ExperimentConfig study_config(const std::string& policy, std::int64_t horizon) {
  ExperimentConfig cfg;
  cfg.instance = "paper-1";
  cfg.policy.name = policy;
  cfg.horizon = horizon;
  cfg.reps = 200;
  cfg.seed = 1;
  return cfg;
}

RegretStudy build_regret_study() {
  RegretStudy study;
  const auto t0 = Clock::now();
  for (std::int64_t horizon : study.horizons) {
    ExperimentResult res = run_experiment(study_config("restless-ucb", horizon));
    study.ucb_final.push_back(res.aggregate.back().mean_regret);
  }
  for (int arm = 1; arm <= 2; ++arm) {
    ExperimentResult res = run_experiment(
        study_config("fixed-arm-" + std::to_string(arm), study.horizons.back()));
    study.fixed_final.push_back(res.aggregate.back().mean_regret);
  }
  study.ts4 = run_experiment(study_config("thompson-4", study.horizons.back()))
                  .aggregate;
  study.ts9 = run_experiment(study_config("thompson-9", study.horizons.back()))
                  .aggregate;
  study.seconds = seconds_since(t0);
  return study;
}

double loglog_slope(const std::vector<double>& ts, const std::vector<double>& rs) {
  const int n = static_cast<int>(ts.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = std::log(ts[i]);
    const double y = std::log(rs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double regret_at(const std::vector<AggregatePoint>& agg, std::int64_t t) {
  for (const AggregatePoint& p : agg)
    if (p.t == t) return p.mean_regret;
  throw std::logic_error("missing checkpoint t=" + std::to_string(t));
}

// 5. Sublinear regret of the learning policy: log-log exponent across the
// horizon ladder inside [0.4, 0.85], and the final mean regret below the best
// fixed arm and the coarse-grid sampling baseline.
Outcome regret_sublinearity(const RegretStudy& study) {
  std::vector<double> ts(study.horizons.begin(), study.horizons.end());
  const double slope = loglog_slope(ts, study.ucb_final);
  const double final_regret = study.ucb_final.back();
  const double fixed_best =
      *std::min_element(study.fixed_final.begin(), study.fixed_final.end());
  const double ts4_final = regret_at(study.ts4, study.horizons.back());
  std::ostringstream os;
  os << "exponent " << slope << " in [0.4, 0.85], final " << final_regret
     << " < best fixed arm " << fixed_best << " and < coarse-grid sampler "
     << ts4_final << " (200 reps; sweep " << study.seconds << "s, limit 3600s)";
  return {slope >= 0.4 && slope <= 0.85 && final_regret < fixed_best &&
              final_regret < ts4_final && study.seconds < 3600.0,
          os.str()};
}

// 6. Baseline ordering: the fine-grid sampler (truth inside the grid) stays
// sublinear while the coarse-grid sampler (truth outside) keeps a per-step
// regret slope bounded away from zero through the final horizon.
Outcome ts_ordering(const RegretStudy& study) {
  const std::int64_t horizon = study.horizons.back();
  std::vector<double> ts, rs;
  for (const AggregatePoint& p : study.ts9) {
    if (p.t >= 10'000 && p.mean_regret > 0.0) {
      ts.push_back(static_cast<double>(p.t));
      rs.push_back(p.mean_regret);
    }
  }
  const double slope9 = loglog_slope(ts, rs);
  const double r4_early = regret_at(study.ts4, 10'000);
  const double r4_mid = regret_at(study.ts4, 100'000);
  const double r4_final = regret_at(study.ts4, horizon);
  const double r9_final = regret_at(study.ts9, horizon);
  const double slope_mid = (r4_mid - r4_early) / 90'000.0;
  const double slope_late = (r4_final - r4_mid) / static_cast<double>(horizon - 100'000);
  std::ostringstream os;
  os << "fine-grid exponent " << slope9 << " <= 0.85, final " << r9_final
     << " < coarse-grid " << r4_final << "; coarse-grid late slope " << slope_late
     << " >= 0.003 and >= 0.6x mid slope " << slope_mid;
  return {slope9 <= 0.85 && r9_final < r4_final && slope_late >= 0.003 &&
              slope_late >= 0.6 * slope_mid,
          os.str()};
}

// 7. Runtime scaling in the number of arms under the myopic oracle.
Outcome timing_scaling() {
  const auto t0 = Clock::now();
  PolicySpec spec;
  spec.name = "restless-ucb-myopic";
  std::vector<TimingRow> rows = timing_benchmark({2, 5}, 500'000, spec, 50, 1);
  const double ratio = rows[1].mean_seconds / rows[0].mean_seconds;
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << "N=5 " << rows[1].mean_seconds << "s vs N=2 " << rows[0].mean_seconds
     << "s, ratio " << ratio << " <= 3 (50 reps x 5e5 steps, " << secs << "s)";
  return {rows[0].mean_seconds > 0.0 && ratio <= 3.0, os.str()};
}

// 8. Oracle sanity: exact gain on single-state arms, solver gain matched by a
// long rollout of its own policy, and the myopic gain never above optimal.
Outcome oracle_sanity() {
  const auto t0 = Clock::now();
  std::vector<Arm> arms;
  for (double r : {0.3, 0.7, 0.5})
    arms.emplace_back(BirthDeathChain({}, {}), std::vector<double>{r});
  RestlessInstance flat(std::move(arms), {0, 0, 0});
  PolicyTable flat_table =
      relative_value_iteration(build_truncated_mdp(flat, default_tau_max(flat)));
  const double flat_err = std::abs(flat_table.gain - 0.7);

  RestlessInstance inst = builtin_instance("paper-1");
  const int tau = 32;
  PolicyTable table = relative_value_iteration(build_truncated_mdp(inst, tau));
  RolloutResult own = policy_gain(
      inst, [&table](const BeliefState& z) { return table.action(z); }, 1'000'000,
      10, 7, tau);
  const double own_gap = std::abs(own.mean_reward - table.gain);
  RolloutResult myopic = policy_gain(
      inst, [&inst](const BeliefState& z) { return myopic_action(inst, z); },
      1'000'000, 10, 8, tau);
  const double myopic_excess = myopic.mean_reward - table.gain;
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << "single-state gain err " << flat_err << " <= 1e-9; own-rollout gap "
     << own_gap << " <= 3 SE " << 3.0 * own.std_error << "; myopic excess "
     << myopic_excess << " <= 3 SE " << 3.0 * myopic.std_error << " (1e7 steps each, "
     << secs << "s)";
  return {flat_err <= 1e-9 && own_gap <= 3.0 * own.std_error &&
              myopic_excess <= 3.0 * myopic.std_error,
          os.str()};
}

// 9. Bias-gap simulations on the optimistic shift stay within 2M/(1-lambda)
// plus three standard errors for every sampled (belief, j, k) triple.
Outcome bias_gap_bound() {
  const auto t0 = Clock::now();
  RestlessInstance shifted =
      build_optimistic_instance(builtin_instance("paper-1"), 0.02);
  const int tau = default_tau_max(shifted);
  PolicyTable table = relative_value_iteration(build_truncated_mdp(shifted, tau));
  const int m = shifted.num_states();
  const double bound = 2.0 * m / (1.0 - max_slem(shifted));
  RandomStream rng(909);
  const int trials = 100;
  const int seeds = 8;
  int failures = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < trials; ++trial) {
    const BeliefState& z = table.states[rng.raw() % table.states.size()];
    const int k = static_cast<int>(rng.raw() % static_cast<std::uint64_t>(m - 1));
    const int j =
        k + 1 + static_cast<int>(rng.raw() % static_cast<std::uint64_t>(m - 1 - k));
    double sum = 0.0;
    double sumsq = 0.0;
    for (int s = 0; s < seeds; ++s) {
      BiasGapResult res = run_bias_gap_coupling(
          shifted, table, z, j, k, 10'000,
          6000 + static_cast<std::uint64_t>(trial * 100 + s));
      sum += res.difference;
      sumsq += res.difference * res.difference;
    }
    const double mean = sum / seeds;
    const double var = std::max(0.0, (sumsq - seeds * mean * mean) / (seeds - 1));
    const double se = std::sqrt(var / seeds);
    worst = std::max(worst, std::abs(mean) - 3.0 * se);
    if (std::abs(mean) > bound + 3.0 * se) ++failures;
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << failures << "/" << trials << " triples exceed bound " << bound
     << " (+3 SE); worst |mean|-3SE " << worst << " (" << seeds
     << " runs x 1e4 steps each, " << secs << "s)";
  return {failures == 0, os.str()};
}

}  // namespace

int main() {
  int failed = 0;
  const auto report = [&failed](int idx, const char* name, const Outcome& res) {
    std::printf("[%s] %d %-24s %s\n", res.pass ? "PASS" : "FAIL", idx, name,
                res.detail.c_str());
    std::fflush(stdout);
    if (!res.pass) ++failed;
  };
  const auto guarded = [](Outcome (*fn)()) -> Outcome {
    try {
      return fn();
    } catch (const std::exception& e) {
      return {false, std::string("exception: ") + e.what()};
    }
  };
  report(1, "lemma-mechanisms", guarded(lemma_mechanisms));
  report(2, "coupling-correctness", guarded(coupling_correctness));
  report(3, "dominance-end-to-end", guarded(dominance_end_to_end));
  report(4, "estimate-event-frequency", guarded(event_frequency));
  Outcome r5, r6;
  try {
    const RegretStudy study = build_regret_study();
    r5 = regret_sublinearity(study);
    r6 = ts_ordering(study);
  } catch (const std::exception& e) {
    r5 = {false, std::string("exception: ") + e.what()};
    r6 = r5;
  }
  report(5, "regret-sublinearity", r5);
  report(6, "baseline-ordering", r6);
  report(7, "timing-scaling", guarded(timing_scaling));
  report(8, "oracle-sanity", guarded(oracle_sanity));
  report(9, "bias-gap-bound", guarded(bias_gap_bound));
  std::printf("%d of 9 criteria passed\n", 9 - failed);
  return failed;
}
