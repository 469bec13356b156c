#include "restless/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "restless/belief.hpp"
#include "restless/instance_io.hpp"
#include "restless/rollout.hpp"
#include "restless/solver.hpp"

namespace restless {

using nlohmann::json;

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return std::string(buf);
}

namespace {

std::vector<double> named_grid(const std::string& name) {
  if (name == "thompson-9")
    return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  if (name == "thompson-4") return {0.2, 0.4, 0.6, 0.8};
  return {};
}

}  // namespace

std::unique_ptr<Policy> make_policy(const PolicySpec& spec,
                                    const RestlessInstance& inst, int tau_max,
                                    double epsilon, std::int64_t state_cap) {
  const std::string& name = spec.name;
  if (name == "restless-ucb" || name == "restless-ucb-myopic") {
    RestlessUcbOptions opts;
    opts.oracle = name == "restless-ucb" ? OracleKind::kExactRvi
                                         : OracleKind::kMyopic;
    opts.m_override = spec.m_override;
    opts.rad_override = spec.rad_override;
    opts.tau_max = tau_max;
    opts.epsilon = epsilon;
    opts.state_cap = state_cap;
    return std::make_unique<RestlessUcbPolicy>(opts);
  }
  if (name.rfind("thompson", 0) == 0) {
    ThompsonOptions opts;
    opts.grid = spec.ts_grid.empty() ? named_grid(name) : spec.ts_grid;
    if (opts.grid.empty())
      throw std::invalid_argument("unknown thompson grid: " + name);
    if (spec.ts_known_rewards) {
      opts.known_rewards.reserve(inst.arms.size());
      for (const Arm& arm : inst.arms) opts.known_rewards.push_back(arm.rewards);
    }
    opts.initial_states = inst.initial_states;
    opts.first_episode = spec.ts_first_episode;
    opts.epsilon = epsilon;
    opts.tau_max = tau_max;
    opts.state_cap = state_cap;
    return std::make_unique<ThompsonDiscretePolicy>(std::move(opts));
  }
  if (name.rfind("fixed-arm-", 0) == 0) {
    try {
      const int arm = std::stoi(name.substr(10));
      return std::make_unique<FixedArmPolicy>(arm);
    } catch (const std::logic_error&) {
      throw std::invalid_argument("unknown policy: " + name);
    }
  }
  if (name == "oracle-replay") {
    return std::make_unique<OracleReplayPolicy>(inst, epsilon, tau_max,
                                                state_cap);
  }
  throw std::invalid_argument("unknown policy: " + name);
}

ReferenceGain reference_gain(const RestlessInstance& inst, int tau_max,
                             double epsilon, std::int64_t state_cap,
                             std::int64_t horizon, std::uint64_t seed) {
  ReferenceGain ref;
  ref.tau_max = tau_max > 0 ? tau_max : default_tau_max(inst);
  ref.truncation_scale = std::pow(max_slem(inst), ref.tau_max);
  try {
    MdpBuildOptions mopts;
    mopts.state_cap = state_cap;
    TruncatedBeliefMdp mdp = build_truncated_mdp(inst, ref.tau_max, mopts);
    RviOptions ropts;
    ropts.epsilon = epsilon;
    PolicyTable table = relative_value_iteration(mdp, ropts);
    ref.value = table.gain;
    ref.method = "rvi";
    ref.epsilon = epsilon;
    return ref;
  } catch (const StateBudgetExceeded&) {
    const std::int64_t mc_horizon = std::max<std::int64_t>(horizon, 100'000);
    RolloutResult roll = policy_gain(
        inst, [&inst](const BeliefState& z) { return myopic_action(inst, z); },
        mc_horizon, 16, seed, ref.tau_max, RewardMode::kExpected);
    ref.value = roll.mean_reward;
    ref.method = "mc-myopic";
    ref.std_error = roll.std_error;
    return ref;
  }
}

std::vector<std::int64_t> checkpoint_grid(std::int64_t horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  std::vector<std::int64_t> grid;
  for (int i = 0;; ++i) {
    const std::int64_t t =
        std::llround(std::pow(10.0, static_cast<double>(i) / 20.0));
    if (t > horizon) break;
    if (grid.empty() || t > grid.back()) grid.push_back(t);
  }
  if (grid.empty() || grid.back() != horizon) grid.push_back(horizon);
  return grid;
}

namespace {

ReplicationResult run_replication(const RestlessInstance& inst,
                                  const ExperimentConfig& config,
                                  const std::vector<std::int64_t>& checkpoints,
                                  double mu_star, int rep) {
  const auto start = std::chrono::steady_clock::now();
  ReplicationResult out;
  out.rep = rep;
  const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(rep);
  std::unique_ptr<Policy> policy =
      make_policy(config.policy, inst, config.tau_max, config.epsilon,
                  config.state_cap);
  PolicyContext ctx{inst.num_arms(), inst.num_states(), config.horizon, seed};
  policy->reset(ctx);
  Env env(inst, seed, config.reward_mode);
  double cum = 0.0;
  std::size_t ci = 0;
  for (std::int64_t t = 0; t < config.horizon; ++t) {
    const int a = policy->choose(t);
    const Observation obs = env.step(a);
    policy->observe(obs);
    cum += obs.reward;
    if (ci < checkpoints.size() && t + 1 == checkpoints[ci]) {
      RegretPoint p;
      p.t = t + 1;
      p.cum_reward = cum;
      p.cum_regret = static_cast<double>(t + 1) * mu_star - cum;
      out.points.push_back(p);
      ++ci;
    }
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return out;
}

}  // namespace

std::vector<AggregatePoint> aggregate_regret(
    const std::vector<ReplicationResult>& replications) {
  std::vector<AggregatePoint> agg;
  if (replications.empty()) return agg;
  const std::size_t points = replications.front().points.size();
  const int n = static_cast<int>(replications.size());
  agg.resize(points);
  for (std::size_t p = 0; p < points; ++p) {
    double sum = 0.0;
    for (const ReplicationResult& r : replications) sum += r.points[p].cum_regret;
    const double mean = sum / n;
    double ss = 0.0;
    for (const ReplicationResult& r : replications) {
      const double d = r.points[p].cum_regret - mean;
      ss += d * d;
    }
    agg[p].t = replications.front().points[p].t;
    agg[p].mean_regret = mean;
    agg[p].std_regret = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    agg[p].n_reps = n;
  }
  return agg;
}

std::string replications_to_csv(const std::vector<ReplicationResult>& reps) {
  std::string out = "t,rep,cum_reward,cum_regret\n";
  for (const ReplicationResult& r : reps) {
    for (const RegretPoint& p : r.points) {
      out += std::to_string(p.t);
      out += ',';
      out += std::to_string(r.rep);
      out += ',';
      out += format_double(p.cum_reward);
      out += ',';
      out += format_double(p.cum_regret);
      out += '\n';
    }
  }
  return out;
}

std::string aggregate_to_csv(const std::vector<AggregatePoint>& agg) {
  std::string out = "t,mean_regret,std_regret,n_reps\n";
  for (const AggregatePoint& p : agg) {
    out += std::to_string(p.t);
    out += ',';
    out += format_double(p.mean_regret);
    out += ',';
    out += format_double(p.std_regret);
    out += ',';
    out += std::to_string(p.n_reps);
    out += '\n';
  }
  return out;
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (config.reps < 1) throw std::invalid_argument("reps must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  const RestlessInstance inst = resolve_instance(config.instance);
  ValidationReport report = validate_assumptions(inst, 0.0);
  if (!report.ok)
    throw std::invalid_argument("instance fails validation: " +
                                report.summary());

  ExperimentResult result;
  result.mu_star = reference_gain(inst, config.tau_max, config.epsilon,
                                  config.state_cap, config.horizon,
                                  config.seed);
  result.checkpoints = checkpoint_grid(config.horizon);

  result.replications.resize(config.reps);
  std::vector<std::string> errors(config.reps);
  std::atomic<int> next{0};
  int threads = config.threads > 0
                    ? config.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, config.reps));
  auto worker = [&]() {
    for (;;) {
      const int rep = next.fetch_add(1);
      if (rep >= config.reps) return;
      try {
        result.replications[rep] = run_replication(
            inst, config, result.checkpoints, result.mu_star.value, rep);
      } catch (const std::exception& e) {
        errors[rep] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  for (int rep = 0; rep < config.reps; ++rep) {
    if (!errors[rep].empty())
      throw std::runtime_error("replication " + std::to_string(rep) +
                               " failed: " + errors[rep]);
  }

  result.aggregate = aggregate_regret(result.replications);
  result.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    const std::filesystem::path dir(config.out_dir);
    result.replications_csv = (dir / "replications.csv").string();
    result.aggregate_csv = (dir / "aggregate.csv").string();
    result.summary_json = (dir / "summary.json").string();
    write_text(result.replications_csv,
               replications_to_csv(result.replications));
    write_text(result.aggregate_csv, aggregate_to_csv(result.aggregate));

    json summary;
    summary["config"] = {
        {"instance", config.instance},
        {"policy", config.policy.name},
        {"horizon", config.horizon},
        {"reps", config.reps},
        {"seed", config.seed},
        {"tau_max", config.tau_max},
        {"epsilon", config.epsilon},
        {"reward_mode", config.reward_mode == RewardMode::kBernoulli
                            ? "bernoulli"
                            : "expected"},
    };
    summary["mu_star"] = {
        {"value", result.mu_star.value},
        {"method", result.mu_star.method},
        {"epsilon", result.mu_star.epsilon},
        {"std_error", result.mu_star.std_error},
        {"tau_max", result.mu_star.tau_max},
        {"truncation_scale", result.mu_star.truncation_scale},
    };
    std::vector<double> rep_seconds;
    rep_seconds.reserve(result.replications.size());
    for (const ReplicationResult& r : result.replications)
      rep_seconds.push_back(r.wall_seconds);
    summary["wall_seconds"] = {{"total", result.total_seconds},
                               {"per_replication", rep_seconds}};
    summary["outputs"] = {{"replications_csv", result.replications_csv},
                          {"aggregate_csv", result.aggregate_csv}};
    write_text(result.summary_json, summary.dump(2) + "\n");
  }
  return result;
}

RestlessInstance timing_instance(int num_arms) {
  if (num_arms < 1) throw std::invalid_argument("need at least one arm");
  std::vector<Arm> arms;
  arms.reserve(num_arms);
  std::vector<int> init(num_arms, 1);
  for (int i = 0; i < num_arms; ++i) {
    const double up = 0.3 + 0.04 * i;
    const double down = 0.2 + 0.03 * i;
    arms.push_back(Arm(BirthDeathChain({up}, {down}), {1.0 - 0.05 * i, 0.0}));
  }
  return RestlessInstance(std::move(arms), std::move(init));
}

std::vector<TimingRow> timing_benchmark(const std::vector<int>& arm_counts,
                                        std::int64_t horizon,
                                        const PolicySpec& spec, int reps,
                                        std::uint64_t seed) {
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  std::vector<TimingRow> rows;
  rows.reserve(arm_counts.size());
  for (int n : arm_counts) {
    const RestlessInstance inst = timing_instance(n);
    std::vector<double> seconds(reps);
    for (int rep = 0; rep < reps; ++rep) {
      const auto start = std::chrono::steady_clock::now();
      std::unique_ptr<Policy> policy =
          make_policy(spec, inst, 0, 1e-9, 5'000'000);
      PolicyContext ctx{inst.num_arms(), inst.num_states(), horizon,
                        seed + static_cast<std::uint64_t>(rep)};
      policy->reset(ctx);
      Env env(inst, seed + static_cast<std::uint64_t>(rep));
      for (std::int64_t t = 0; t < horizon; ++t) {
        policy->observe(env.step(policy->choose(t)));
      }
      seconds[rep] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        start)
              .count();
    }
    TimingRow row;
    row.num_arms = n;
    row.reps = reps;
    double sum = 0.0;
    for (double s : seconds) sum += s;
    row.mean_seconds = sum / reps;
    double ss = 0.0;
    for (double s : seconds) ss += (s - row.mean_seconds) * (s - row.mean_seconds);
    row.std_seconds = reps > 1 ? std::sqrt(ss / (reps - 1)) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

std::string timing_to_csv(const std::vector<TimingRow>& rows) {
  std::string out = "n_arms,mean_seconds,std_seconds,reps\n";
  for (const TimingRow& r : rows) {
    out += std::to_string(r.num_arms);
    out += ',';
    out += format_double(r.mean_seconds);
    out += ',';
    out += format_double(r.std_seconds);
    out += ',';
    out += std::to_string(r.reps);
    out += '\n';
  }
  return out;
}

}  // namespace restless
