#include "restless/verify.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "restless/belief.hpp"
#include "restless/coupling.hpp"
#include "restless/env.hpp"
#include "restless/policies.hpp"
#include "restless/random_instances.hpp"
#include "restless/solver.hpp"

namespace restless {

using nlohmann::json;

bool VerifyReport::all_pass() const {
  for (const VerifyCheck& c : checks)
    if (!c.pass) return false;
  return true;
}

const VerifyCheck* VerifyReport::find(const std::string& name) const {
  for (const VerifyCheck& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

double prefix_margin(const ProbVector& hi, const ProbVector& lo) {
  double margin = 1.0, a = 0.0, b = 0.0;
  for (std::size_t k = 0; k < hi.size(); ++k) {
    a += hi[k];
    b += lo[k];
    margin = std::min(margin, a - b);
  }
  return margin;
}

void note_failure(VerifyCheck& check, const std::string& detail) {
  ++check.failures;
  if (check.detail.empty()) check.detail = detail;
}

VerifyCheck check_assumptions(const ValidationReport& report,
                              const std::string& code, double c1) {
  VerifyCheck check;
  std::string lower = code;
  for (char& ch : lower) ch = static_cast<char>(std::tolower(ch));
  check.name = "assumption-" + lower;
  check.bound = code == "A4" ? c1 : 0.0;
  for (const AssumptionCheck& a : report.checks) {
    if (a.assumption != code) continue;
    ++check.trials;
    if (!a.pass)
      note_failure(check, "arm " + std::to_string(a.arm) + ": " + a.detail);
  }
  check.pass = check.failures == 0;
  return check;
}

VerifyCheck check_row_monotonicity(RandomStream& rng, const VerifyConfig& cfg) {
  VerifyCheck check;
  check.name = "row-monotonicity";
  check.worst = 1.0;
  for (int trial = 0; trial < cfg.random_chains; ++trial) {
    const int m =
        2 + static_cast<int>(rng.raw() % std::max(1, cfg.max_states - 1));
    BirthDeathChain chain = random_chain(rng, m, 0.05);
    for (std::int64_t tau : {1, 2, 4, 8, 32}) {
      for (int s = 0; s + 1 < m; ++s) {
        ProbVector a = chain.row_power(s, tau);
        ProbVector b = chain.row_power(s + 1, tau);
        ++check.trials;
        check.worst = std::min(check.worst, prefix_margin(a, b));
        if (!prefix_dominates(a, b))
          note_failure(check, "state " + std::to_string(s) + " tau " +
                                  std::to_string(tau));
      }
    }
  }
  check.pass = check.failures == 0;
  return check;
}

VerifyCheck check_shift_dominance(RandomStream& rng, const VerifyConfig& cfg) {
  VerifyCheck check;
  check.name = "shift-dominance";
  check.worst = 1.0;
  for (int trial = 0; trial < cfg.random_chains; ++trial) {
    const int m =
        2 + static_cast<int>(rng.raw() % std::max(1, cfg.max_states - 1));
    RestlessInstance inst = random_instance(rng, 1, m, 0.1);
    const double delta = 0.002 + 0.08 * rng.uniform();
    RestlessInstance shifted = build_optimistic_instance(inst, delta);
    for (int s = 0; s < m; ++s) {
      ProbVector orig = inst.arms[0].chain.row(s);
      ProbVector opt = shifted.arms[0].chain.row(s);
      ++check.trials;
      check.worst = std::min(check.worst, prefix_margin(opt, orig));
      if (!prefix_dominates(opt, orig))
        note_failure(check, "row " + std::to_string(s));
    }
  }
  check.pass = check.failures == 0;
  return check;
}

VerifyCheck check_step_preservation(RandomStream& rng,
                                    const VerifyConfig& cfg) {
  VerifyCheck check;
  check.name = "dominance-step-preservation";
  check.worst = 1.0;
  for (int trial = 0; trial < cfg.random_chains; ++trial) {
    const int m =
        2 + static_cast<int>(rng.raw() % std::max(1, cfg.max_states - 1));
    BirthDeathChain chain = random_chain(rng, m, 0.05);
    ProbVector w = random_prob_vector(rng, m);
    ProbVector v = shift_mass_down(rng, w);
    ProbVector vp = chain.advance(v);
    ProbVector wp = chain.advance(w);
    ++check.trials;
    check.worst = std::min(check.worst, prefix_margin(vp, wp));
    if (!prefix_dominates(vp, wp)) note_failure(check, "advance inverted order");
  }
  check.pass = check.failures == 0;
  return check;
}

VerifyCheck check_perturbation_power(RandomStream& rng,
                                     const VerifyConfig& cfg) {
  VerifyCheck check;
  check.name = "perturbation-power-bound";
  check.worst = -1.0;  // max excess over the bound; negative means slack
  for (int trial = 0; trial < cfg.random_chains / 2; ++trial) {
    const int m =
        2 + static_cast<int>(rng.raw() % std::max(1, cfg.max_states - 1));
    BirthDeathChain chain = random_chain(rng, m, 0.1);
    const double delta = 0.002 + 0.05 * rng.uniform();
    std::vector<Arm> arms;
    arms.emplace_back(chain, random_monotone_rewards(rng, m));
    RestlessInstance inst(std::move(arms), {0});
    RestlessInstance shifted = build_optimistic_instance(inst, delta);
    const BirthDeathChain& pert = shifted.arms[0].chain;
    const double lambda = std::max(chain.slem(), pert.slem());
    const double mixing = 2.0 * m * delta / (1.0 - lambda);
    for (std::int64_t tau : {1, 2, 3, 5, 8, 16, 32, 64}) {
      for (int s = 0; s < m; ++s) {
        ProbVector a = chain.row_power(s, tau);
        ProbVector b = pert.row_power(s, tau);
        double gap = 0.0;
        for (int i = 0; i < m; ++i) gap = std::max(gap, std::abs(a[i] - b[i]));
        const double bound =
            std::min(2.0 * static_cast<double>(tau) * delta, mixing);
        ++check.trials;
        check.worst = std::max(check.worst, gap - bound);
        if (gap > bound + 1e-12)
          note_failure(check, "tau " + std::to_string(tau) + " state " +
                                  std::to_string(s));
      }
    }
  }
  check.pass = check.failures == 0;
  return check;
}

VerifyCheck check_coupling_marginal(RandomStream& rng,
                                    const VerifyConfig& cfg) {
  VerifyCheck check;
  check.name = "coupling-marginal";
  check.bound = 0.01;
  double worst_exact = 0.0;
  for (int trial = 0; trial < cfg.random_chains; ++trial) {
    const int n = 2 + static_cast<int>(rng.raw() % 5);
    ProbVector v = random_prob_vector(rng, n);
    ProbVector vp = random_prob_vector(rng, n);
    ProbVector marginal(n, 0.0);
    for (int k = 0; k < n; ++k) {
      ProbVector q = coupled_sample_pmf(v, vp, k);
      for (int jx = 0; jx < n; ++jx) marginal[jx] += vp[k] * q[jx];
    }
    ++check.trials;
    for (int jx = 0; jx < n; ++jx)
      worst_exact = std::max(worst_exact, std::abs(marginal[jx] - v[jx]));
  }
  if (worst_exact > 1e-10)
    note_failure(check, "exact marginal residual " + std::to_string(worst_exact));

  const int pairs = 5;
  const std::int64_t draws = std::max<std::int64_t>(1, cfg.coupling_draws / pairs);
  for (int pair = 0; pair < pairs; ++pair) {
    const int n = 2 + static_cast<int>(rng.raw() % 5);
    ProbVector v = random_prob_vector(rng, n);
    ProbVector vp = random_prob_vector(rng, n);
    ProbVector freq(n, 0.0);
    for (std::int64_t d = 0; d < draws; ++d) {
      const int k = rng.categorical(vp);
      freq[coupled_sample(v, vp, k, rng)] += 1.0;
    }
    double tv = 0.0;
    for (int jx = 0; jx < n; ++jx)
      tv += std::abs(freq[jx] / static_cast<double>(draws) - v[jx]);
    tv *= 0.5;
    // Expected TV plus a concentration margin so the threshold adapts to the
    // configured draw budget; at large budgets the floor 0.01 binds.
    const double noise = 0.5 * std::sqrt(static_cast<double>(n) / draws) +
                         std::sqrt(14.0 / (2.0 * static_cast<double>(draws)));
    check.bound = std::max(0.01, noise);
    check.trials += draws;
    check.worst = std::max(check.worst, tv);
    if (tv > check.bound)
      note_failure(check, "marginal TV " + std::to_string(tv));
  }
  check.pass = check.failures == 0;
  return check;
}

VerifyCheck check_coupling_order(RandomStream& rng, const VerifyConfig& cfg) {
  VerifyCheck check;
  check.name = "coupling-order";
  const int per_pair = 50;
  const std::int64_t pairs = std::max<std::int64_t>(1, cfg.coupling_draws / per_pair);
  for (std::int64_t pair = 0; pair < pairs; ++pair) {
    const int n = 2 + static_cast<int>(rng.raw() % 5);
    ProbVector v = random_prob_vector(rng, n);
    ProbVector vp = shift_mass_down(rng, v);
    for (int d = 0; d < per_pair; ++d) {
      const int k = rng.categorical(vp);
      ++check.trials;
      if (coupled_sample(v, vp, k, rng) < k)
        note_failure(check, "order inversion under dominance");
    }
  }
  check.pass = check.failures == 0;
  return check;
}

VerifyCheck check_dominance_sim(const RestlessInstance& inst,
                                const PolicyTable& table,
                                const RestlessInstance& shifted,
                                const VerifyConfig& cfg) {
  VerifyCheck check;
  check.name = "dominance-sim";
  check.worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < cfg.sim_seeds; ++s) {
    try {
      CoupledTrace trace = run_dominance_coupling(inst, shifted, table,
                                                  cfg.sim_horizon,
                                                  cfg.seed + 1000 + s);
      ++check.trials;
      check.failures += trace.violation_count;
      const double edge = trace.real_reward_sum - trace.virtual_reward_sum;
      check.worst = std::min(check.worst, edge);
      if (edge < 0.0) note_failure(check, "real stream fell behind");
    } catch (const std::exception& e) {
      ++check.trials;
      note_failure(check, e.what());
    }
  }
  check.pass = check.failures == 0;
  return check;
}

VerifyCheck check_gain_ordering(const PolicyTable& base_table,
                                const PolicyTable& shifted_table,
                                const VerifyConfig& cfg) {
  VerifyCheck check;
  check.name = "optimistic-gain-ordering";
  check.trials = 1;
  check.bound = 2.0 * cfg.epsilon;
  check.worst = shifted_table.gain - base_table.gain;
  std::ostringstream os;
  os << "gain " << base_table.gain << " shifted " << shifted_table.gain;
  check.detail = os.str();
  if (check.worst < -check.bound) check.failures = 1;
  check.pass = check.failures == 0;
  return check;
}

VerifyCheck check_estimate_radius(const RestlessInstance& inst,
                                  const VerifyConfig& cfg) {
  VerifyCheck check;
  check.name = "estimate-radius-frequency";
  const std::int64_t horizon = std::llround(
      std::pow(static_cast<double>(cfg.exploration_m), 1.5));
  const ConfidenceRadius radius = confidence_radius(horizon, cfg.exploration_m);
  const double per_run =
      8.0 * inst.num_arms() * inst.num_states() / static_cast<double>(horizon);
  for (int run = 0; run < cfg.exploration_runs; ++run) {
    RestlessUcbOptions opts;
    opts.oracle = OracleKind::kMyopic;
    opts.m_override = cfg.exploration_m;
    RestlessUcbPolicy policy(opts);
    PolicyContext ctx{inst.num_arms(), inst.num_states(), horizon,
                      cfg.seed + 2000 + static_cast<std::uint64_t>(run)};
    policy.reset(ctx);
    Env env(inst, cfg.seed + 2000 + static_cast<std::uint64_t>(run));
    for (std::int64_t t = 0; t < horizon && policy.exploring(); ++t) {
      policy.observe(env.step(policy.choose(t)));
    }
    ++check.trials;
    if (policy.exploring()) {
      note_failure(check, "exploration exceeded the horizon");
      continue;
    }
    if (!within_radius(inst, *policy.estimated(), radius.rad))
      note_failure(check, "estimate escaped the radius");
  }
  const double expect = check.trials * per_run;
  check.bound = std::max(1.0, expect + 3.0 * std::sqrt(expect));
  check.worst = static_cast<double>(check.failures);
  check.pass = static_cast<double>(check.failures) <= check.bound;
  return check;
}

VerifyCheck check_bias_gap(const RestlessInstance& shifted,
                           const PolicyTable& table, RandomStream& rng,
                           const VerifyConfig& cfg) {
  VerifyCheck check;
  check.name = "bias-gap-bound";
  const int m = shifted.num_states();
  const double lambda = max_slem(shifted);
  check.bound = 2.0 * m / (1.0 - lambda);
  const std::int64_t horizon = std::max<std::int64_t>(1, cfg.sim_horizon / 2);
  for (int trial = 0; trial < cfg.bias_gap_triples; ++trial) {
    const BeliefState& z = table.states[rng.raw() % table.states.size()];
    const int k = static_cast<int>(rng.raw() % (m - 1));
    const int j =
        k + 1 + static_cast<int>(rng.raw() % static_cast<std::uint64_t>(m - 1 - k));
    double sum = 0.0, sumsq = 0.0;
    for (int s = 0; s < cfg.sim_seeds; ++s) {
      BiasGapResult res = run_bias_gap_coupling(
          shifted, table, z, j, k, horizon,
          cfg.seed + 3000 + static_cast<std::uint64_t>(trial * 100 + s));
      sum += res.difference;
      sumsq += res.difference * res.difference;
    }
    const double mean = sum / cfg.sim_seeds;
    const double var = cfg.sim_seeds > 1
                           ? (sumsq - cfg.sim_seeds * mean * mean) /
                                 (cfg.sim_seeds - 1)
                           : 0.0;
    const double se = std::sqrt(std::max(var, 0.0) / cfg.sim_seeds);
    ++check.trials;
    check.worst = std::max(check.worst, std::abs(mean) - 3.0 * se);
    if (std::abs(mean) > check.bound + 3.0 * se)
      note_failure(check, "triple " + std::to_string(trial) +
                              " mean " + std::to_string(mean));
  }
  check.pass = check.failures == 0;
  return check;
}

}  // namespace

VerifyReport verify_lemmas(const RestlessInstance& inst,
                           const VerifyConfig& config) {
  VerifyReport report;
  RandomStream rng(config.seed);

  const ValidationReport assumptions = validate_assumptions(inst, config.c1);
  for (const char* code : {"A1", "A2", "A3", "A4"})
    report.checks.push_back(check_assumptions(assumptions, code, config.c1));

  report.checks.push_back(check_row_monotonicity(rng, config));
  report.checks.push_back(check_shift_dominance(rng, config));
  report.checks.push_back(check_step_preservation(rng, config));
  report.checks.push_back(check_perturbation_power(rng, config));
  report.checks.push_back(check_coupling_marginal(rng, config));
  report.checks.push_back(check_coupling_order(rng, config));

  if (!assumptions.ok) {
    report.skipped = {"dominance-sim", "optimistic-gain-ordering",
                      "estimate-radius-frequency", "bias-gap-bound"};
    return report;
  }

  RestlessInstance shifted = build_optimistic_instance(inst, config.shift_delta);
  // One truncation depth for both solves keeps the gain comparison exact:
  // the dominance argument holds within the saturated dynamics only when the
  // two sides share the cap.
  const int tau_max =
      config.tau_max > 0
          ? config.tau_max
          : std::max(default_tau_max(inst), default_tau_max(shifted));
  RviOptions ropts;
  ropts.epsilon = config.epsilon;
  MdpBuildOptions mopts;
  mopts.state_cap = config.state_cap;
  PolicyTable base_table = relative_value_iteration(
      build_truncated_mdp(inst, tau_max, mopts), ropts);
  PolicyTable shifted_table = relative_value_iteration(
      build_truncated_mdp(shifted, tau_max, mopts), ropts);

  report.checks.push_back(
      check_dominance_sim(inst, base_table, shifted, config));
  report.checks.push_back(
      check_gain_ordering(base_table, shifted_table, config));
  report.checks.push_back(check_estimate_radius(inst, config));
  if (inst.num_states() >= 2) {
    report.checks.push_back(
        check_bias_gap(shifted, shifted_table, rng, config));
  } else {
    report.skipped.push_back("bias-gap-bound");
  }
  return report;
}

namespace {

json check_to_json(const VerifyCheck& c) {
  return json{{"name", c.name},     {"pass", c.pass},
              {"trials", c.trials}, {"failures", c.failures},
              {"worst", c.worst},   {"bound", c.bound},
              {"detail", c.detail}};
}

VerifyCheck check_from_json(const json& j) {
  VerifyCheck c;
  c.name = j.at("name").get<std::string>();
  c.pass = j.at("pass").get<bool>();
  c.trials = j.at("trials").get<std::int64_t>();
  c.failures = j.at("failures").get<std::int64_t>();
  c.worst = j.at("worst").get<double>();
  c.bound = j.at("bound").get<double>();
  c.detail = j.at("detail").get<std::string>();
  return c;
}

}  // namespace

std::string report_to_json_text(const VerifyReport& report) {
  json j;
  j["checks"] = json::array();
  for (const VerifyCheck& c : report.checks) j["checks"].push_back(check_to_json(c));
  j["skipped"] = report.skipped;
  j["all_pass"] = report.all_pass();
  return j.dump(2) + "\n";
}

VerifyReport report_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  VerifyReport report;
  for (const json& c : j.at("checks")) report.checks.push_back(check_from_json(c));
  if (j.contains("skipped"))
    report.skipped = j["skipped"].get<std::vector<std::string>>();
  return report;
}

std::string write_report_files(const VerifyReport& report,
                               const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  for (const VerifyCheck& c : report.checks) {
    std::ofstream out(dir / ("check-" + c.name + ".json"), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write check file for " + c.name);
    out << check_to_json(c).dump(2) << "\n";
  }
  const std::string summary = (dir / "verify-summary.json").string();
  std::ofstream out(summary, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + summary);
  out << report_to_json_text(report);
  return summary;
}

}  // namespace restless
