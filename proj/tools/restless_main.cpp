#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "restless/belief.hpp"
#include "restless/experiment.hpp"
#include "restless/instance_io.hpp"
#include "restless/solver.hpp"
#include "restless/verify.hpp"

namespace {

using nlohmann::json;
using namespace restless;

struct CommonOpts {
  std::string config;
  std::string instance = "paper-1";
  std::string policy = "restless-ucb";
  std::string oracle = "exact";
  std::int64_t horizon = 100'000;
  int reps = 20;
  std::uint64_t seed = 1;
  int tau_max = 0;
  std::string out;
  double epsilon = 1e-9;
  int threads = 0;
  std::string reward_mode = "bernoulli";
  std::int64_t m_override = 0;
  double rad_override = -1.0;
  std::string arms = "2,3,4,5";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config, "JSON config; explicit flags override it");
  cmd->add_option("--instance", o.instance, "builtin name or instance file");
  cmd->add_option("--policy", o.policy,
                  "restless-ucb | thompson-9 | thompson-4 | fixed-arm-<k> | "
                  "oracle-replay");
  cmd->add_option("--oracle", o.oracle, "exact | myopic (restless-ucb commit)");
  cmd->add_option("--horizon", o.horizon, "steps per replication");
  cmd->add_option("--reps", o.reps, "replication count");
  cmd->add_option("--seed", o.seed, "root seed; replication r uses seed+r");
  cmd->add_option("--tau-max", o.tau_max, "belief truncation (0: instance default)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--epsilon", o.epsilon, "solver convergence tolerance");
  cmd->add_option("--threads", o.threads, "worker threads (0: hardware)");
  cmd->add_option("--reward-mode", o.reward_mode, "bernoulli | expected");
  cmd->add_option("--m-override", o.m_override, "exploration target override");
  cmd->add_option("--rad-override", o.rad_override, "confidence radius override");
  cmd->add_option("--arms", o.arms, "bench arm counts, comma separated");
}

// Defaults < config file < explicit flags.
void merge_config(const CLI::App* cmd, CommonOpts& o) {
  if (o.config.empty()) return;
  std::ifstream in(o.config);
  if (!in) throw std::runtime_error("cannot open config: " + o.config);
  json j = json::parse(in);
  auto take = [&](const char* flag, const char* key, auto& field) {
    if (cmd->count(flag) == 0 && j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
  };
  take("--instance", "instance", o.instance);
  take("--policy", "policy", o.policy);
  take("--oracle", "oracle", o.oracle);
  take("--horizon", "horizon", o.horizon);
  take("--reps", "reps", o.reps);
  take("--seed", "seed", o.seed);
  take("--tau-max", "tau_max", o.tau_max);
  take("--out", "out", o.out);
  take("--epsilon", "epsilon", o.epsilon);
  take("--threads", "threads", o.threads);
  take("--reward-mode", "reward_mode", o.reward_mode);
  take("--m-override", "m_override", o.m_override);
  take("--rad-override", "rad_override", o.rad_override);
  take("--arms", "arms", o.arms);
}

PolicySpec to_policy_spec(const CommonOpts& o) {
  PolicySpec spec;
  spec.name = o.policy;
  if (spec.name == "restless-ucb" && o.oracle == "myopic")
    spec.name = "restless-ucb-myopic";
  spec.m_override = o.m_override;
  spec.rad_override = o.rad_override;
  return spec;
}

RewardMode to_reward_mode(const std::string& s) {
  if (s == "bernoulli") return RewardMode::kBernoulli;
  if (s == "expected") return RewardMode::kExpected;
  throw std::runtime_error("unknown reward mode: " + s);
}

std::vector<int> parse_arm_counts(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  if (out.empty()) throw std::runtime_error("empty arm count list");
  return out;
}

int cmd_run(const CommonOpts& o) {
  ExperimentConfig config;
  config.instance = o.instance;
  config.policy = to_policy_spec(o);
  config.horizon = o.horizon;
  config.reps = o.reps;
  config.seed = o.seed;
  config.tau_max = o.tau_max;
  config.epsilon = o.epsilon;
  config.reward_mode = to_reward_mode(o.reward_mode);
  config.out_dir = o.out.empty() ? "results" : o.out;
  config.threads = o.threads;

  ExperimentResult res = run_experiment(config);
  std::printf("instance %s  policy %s  horizon %lld  reps %d  seed %llu\n",
              o.instance.c_str(), config.policy.name.c_str(),
              static_cast<long long>(o.horizon), o.reps,
              static_cast<unsigned long long>(o.seed));
  std::printf("mu* %s (%s, tau_max %d)\n", format_double(res.mu_star.value).c_str(),
              res.mu_star.method.c_str(), res.mu_star.tau_max);
  const AggregatePoint& last = res.aggregate.back();
  std::printf("final mean regret %s (std %s, n %d) at t=%lld\n",
              format_double(last.mean_regret).c_str(),
              format_double(last.std_regret).c_str(), last.n_reps,
              static_cast<long long>(last.t));
  std::printf("wall %.2fs\n", res.total_seconds);
  std::printf("wrote %s\n", res.replications_csv.c_str());
  std::printf("wrote %s\n", res.aggregate_csv.c_str());
  std::printf("wrote %s\n", res.summary_json.c_str());
  return 0;
}

int cmd_solve(const CommonOpts& o) {
  RestlessInstance inst = resolve_instance(o.instance);
  const int tau = o.tau_max > 0 ? o.tau_max : default_tau_max(inst);
  TruncatedBeliefMdp mdp = build_truncated_mdp(inst, tau);
  RviOptions opts;
  opts.epsilon = o.epsilon;
  PolicyTable table = relative_value_iteration(mdp, opts);
  std::printf("instance %s  arms %d  chain states %d  tau_max %d\n",
              o.instance.c_str(), inst.num_arms(), inst.num_states(), tau);
  std::printf("belief states %zu  iterations %lld  final span %.3e\n",
              table.states.size(),
              static_cast<long long>(table.certificate.iterations),
              table.certificate.final_span);
  std::printf("gain %s  (bounds %s .. %s)\n", format_double(table.gain).c_str(),
              format_double(table.certificate.gain_lower).c_str(),
              format_double(table.certificate.gain_upper).c_str());
  if (!o.out.empty()) {
    save_policy_table(table, o.out);
    std::printf("wrote %s\n", o.out.c_str());
  }
  return 0;
}

int cmd_verify(const CommonOpts& o) {
  RestlessInstance inst = resolve_instance(o.instance);
  VerifyConfig config;
  config.seed = o.seed;
  config.epsilon = o.epsilon;
  config.tau_max = o.tau_max;
  config.out_dir = o.out;
  VerifyReport report = verify_lemmas(inst, config);
  for (const VerifyCheck& c : report.checks) {
    std::printf("[%s] %-28s trials %-8lld failures %-4lld worst %.3e%s%s\n",
                c.pass ? "PASS" : "FAIL", c.name.c_str(),
                static_cast<long long>(c.trials),
                static_cast<long long>(c.failures), c.worst,
                c.detail.empty() ? "" : "  ", c.detail.c_str());
  }
  for (const std::string& name : report.skipped)
    std::printf("[SKIP] %-28s instance failed validation\n", name.c_str());
  if (!o.out.empty()) {
    std::string summary = write_report_files(report, o.out);
    std::printf("wrote %s\n", summary.c_str());
  }
  std::printf("%s\n", report.all_pass() ? "all checks passed"
                                        : "some checks failed");
  return report.all_pass() ? 0 : 1;
}

int cmd_bench(const CommonOpts& o, const CLI::App* cmd) {
  CommonOpts opts = o;
  if (cmd->count("--policy") == 0 && opts.policy == "restless-ucb")
    opts.policy = "restless-ucb-myopic";  // exact oracle is exponential in N
  PolicySpec spec = to_policy_spec(opts);
  std::vector<int> arm_counts = parse_arm_counts(opts.arms);
  std::vector<TimingRow> rows =
      timing_benchmark(arm_counts, opts.horizon, spec, opts.reps, opts.seed);
  std::printf("policy %s  horizon %lld  reps %d\n", spec.name.c_str(),
              static_cast<long long>(opts.horizon), opts.reps);
  for (const TimingRow& r : rows) {
    std::printf("N=%d  mean %.3fs  std %.3fs\n", r.num_arms, r.mean_seconds,
                r.std_seconds);
  }
  if (!opts.out.empty()) {
    std::filesystem::create_directories(opts.out);
    const std::string path =
        (std::filesystem::path(opts.out) / "timing.csv").string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << timing_to_csv(rows);
    std::printf("wrote %s\n", path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Restless bandit benchmark suite"};
  app.require_subcommand(1);

  CommonOpts run_opts, solve_opts, verify_opts, bench_opts;
  CLI::App* run = app.add_subcommand("run", "run a regret experiment");
  add_common(run, run_opts);
  CLI::App* solve = app.add_subcommand("solve", "solve the offline oracle");
  add_common(solve, solve_opts);
  CLI::App* verify = app.add_subcommand("verify", "run the lemma property suite");
  add_common(verify, verify_opts);
  CLI::App* bench = app.add_subcommand("bench", "timing benchmark across arm counts");
  add_common(bench, bench_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      merge_config(run, run_opts);
      return cmd_run(run_opts);
    }
    if (solve->parsed()) {
      merge_config(solve, solve_opts);
      return cmd_solve(solve_opts);
    }
    if (verify->parsed()) {
      merge_config(verify, verify_opts);
      return cmd_verify(verify_opts);
    }
    if (bench->parsed()) {
      merge_config(bench, bench_opts);
      return cmd_bench(bench_opts, bench);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
