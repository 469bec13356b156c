#include "restless/env.hpp"

#include <stdexcept>

#include "restless/format.hpp"

namespace restless {

namespace {

void check_model(const RestlessInstance& inst) {
  auto report = validate_assumptions(inst, 0.0);
  for (const auto& c : report.checks)
    if (!c.pass && (c.assumption == "A1" || c.assumption == "A3"))
      throw std::invalid_argument("invalid instance: " + report.summary());
  // Ergodicity: every coupling strictly positive.
  for (const auto& arm : inst.arms)
    for (int k = 0; k + 1 < arm.chain.num_states(); ++k)
      if (arm.chain.up(k) <= 0.0 || arm.chain.down(k) <= 0.0)
        throw std::invalid_argument("invalid instance: zero transition coupling");
}

}  // namespace

Env::Env(RestlessInstance instance, std::uint64_t seed, RewardMode mode)
    : instance_(std::move(instance)), mode_(mode) {
  check_model(instance_);
  reset(seed);
}

void Env::reset(std::uint64_t seed) {
  int n = instance_.num_arms();
  auto seeds = derive_stream_seeds(seed, n + 1);
  chain_streams_.clear();
  for (int i = 0; i < n; ++i) chain_streams_.emplace_back(seeds[i]);
  reward_stream_.seed(seeds[n]);
  states_ = instance_.initial_states;
  t_ = 0;
}

int Env::sample_transition(int arm, int state) {
  const BirthDeathChain& chain = instance_.arms[arm].chain;
  int m = chain.num_states();
  double u = chain_streams_[arm].uniform();
  double acc = state > 0 ? chain.down(state - 1) : 0.0;
  if (u < acc) return state - 1;
  acc += chain.stay(state);
  if (u < acc || state + 1 >= m) return state;
  return state + 1;
}

Observation Env::step(int action) {
  int n = instance_.num_arms();
  if (action < 0 || action > n)
    throw std::out_of_range("env: action out of range");
  Observation obs;
  obs.t = t_;
  obs.action = action;
  if (action > 0) {
    int arm = action - 1;
    obs.observed_state = states_[arm];
    double r = instance_.arms[arm].rewards[states_[arm]];
    obs.reward = mode_ == RewardMode::kBernoulli
                     ? (reward_stream_.bernoulli(r) ? 1.0 : 0.0)
                     : r;
  }
  for (int i = 0; i < n; ++i) states_[i] = sample_transition(i, states_[i]);
  ++t_;
  return obs;
}

TrajectoryLog::TrajectoryLog(const std::string& path) : out_(path) {
  if (!out_) throw std::runtime_error("cannot open trajectory log: " + path);
  out_ << "t,action,observed_state,reward\n";
}

void TrajectoryLog::record(const Observation& obs) {
  out_ << obs.t << ',' << obs.action << ',' << obs.observed_state << ','
       << format_double(obs.reward) << '\n';
}

}  // namespace restless
