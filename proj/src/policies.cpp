#include "restless/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace restless {

EmpiricalStats::EmpiricalStats(int num_arms, int num_states)
    : num_arms_(num_arms), num_states_(num_states) {
  if (num_arms < 1 || num_states < 1)
    throw std::invalid_argument("stats: need at least one arm and one state");
  completed_.assign(num_arms, std::vector<std::int64_t>(num_states, 0));
  trans_.assign(num_arms, std::vector<std::array<std::int64_t, 3>>(
                              num_states, {0, 0, 0}));
  visits_.assign(num_arms, std::vector<std::int64_t>(num_states, 0));
  reward_sum_.assign(num_arms, std::vector<double>(num_states, 0.0));
  reward_count_.assign(num_arms, std::vector<std::int64_t>(num_states, 0));
}

void EmpiricalStats::record(std::int64_t t, int action, int observed_state,
                            double reward) {
  if (action == 0) return;
  if (action < 1 || action > num_arms_)
    throw std::out_of_range("stats: action out of range");
  if (observed_state < 0 || observed_state >= num_states_)
    throw std::out_of_range("stats: observed state out of range");
  const int a = action - 1;
  visits_[a][observed_state]++;
  if (num_states_ == 1) {
    // The self loop is the only transition; every visit completes at once.
    trans_[a][0][1]++;
    completed_[a][0]++;
    reward_sum_[a][0] += reward;
    reward_count_[a][0]++;
  } else if (last_arm_ == action && last_t_ == t - 1) {
    const int d = observed_state - last_state_;
    if (d < -1 || d > 1)
      throw std::logic_error("stats: non-adjacent transition observed");
    trans_[a][last_state_][d + 1]++;
    completed_[a][last_state_]++;
    reward_sum_[a][last_state_] += last_reward_;
    reward_count_[a][last_state_]++;
  }
  last_arm_ = action;
  last_t_ = t;
  last_state_ = observed_state;
  last_reward_ = reward;
}

std::int64_t EmpiricalStats::completed(int arm, int state) const {
  return completed_.at(arm - 1).at(state);
}

std::int64_t EmpiricalStats::min_completed(int arm) const {
  const auto& row = completed_.at(arm - 1);
  return *std::min_element(row.begin(), row.end());
}

std::int64_t EmpiricalStats::transition_count(int arm, int from, int to) const {
  const int d = to - from;
  if (d < -1 || d > 1) return 0;
  return trans_.at(arm - 1).at(from)[d + 1];
}

std::int64_t EmpiricalStats::visits(int arm, int state) const {
  return visits_.at(arm - 1).at(state);
}

double EmpiricalStats::reward_sum(int arm, int state) const {
  return reward_sum_.at(arm - 1).at(state);
}

std::int64_t EmpiricalStats::reward_count(int arm, int state) const {
  return reward_count_.at(arm - 1).at(state);
}

RestlessInstance EmpiricalStats::estimates() const {
  std::vector<Arm> arms;
  arms.reserve(num_arms_);
  for (int i = 0; i < num_arms_; ++i) {
    for (int k = 0; k < num_states_; ++k) {
      if (completed_[i][k] == 0) {
        std::ostringstream os;
        os << "insufficient data: arm " << (i + 1) << ", state " << k
           << " has no completed observations";
        throw std::runtime_error(os.str());
      }
    }
    ProbVector up(num_states_ - 1), down(num_states_ - 1);
    for (int k = 0; k + 1 < num_states_; ++k) {
      up[k] = static_cast<double>(trans_[i][k][2]) /
              static_cast<double>(completed_[i][k]);
      down[k] = static_cast<double>(trans_[i][k + 1][0]) /
                static_cast<double>(completed_[i][k + 1]);
    }
    ProbVector rewards(num_states_);
    for (int k = 0; k < num_states_; ++k)
      rewards[k] = reward_sum_[i][k] / static_cast<double>(reward_count_[i][k]);
    arms.push_back(Arm(BirthDeathChain(std::move(up), std::move(down)),
                       std::move(rewards)));
  }
  return RestlessInstance(std::move(arms), std::vector<int>(num_arms_, 0));
}

std::int64_t default_m(std::int64_t horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  const auto cube = [](std::int64_t x) {
    return static_cast<__int128>(x) * x * x;
  };
  const __int128 target = static_cast<__int128>(horizon) * horizon;
  auto m = static_cast<std::int64_t>(
      std::llround(std::pow(static_cast<double>(horizon), 2.0 / 3.0)));
  m = std::max<std::int64_t>(m, 1);
  while (cube(m) < target) ++m;
  while (m > 1 && cube(m - 1) >= target) --m;
  return m;
}

ConfidenceRadius confidence_radius(std::int64_t horizon, std::int64_t m) {
  if (horizon < 2 || m < 1)
    throw std::invalid_argument("confidence radius needs horizon >= 2, m >= 1");
  ConfidenceRadius c;
  c.m = m;
  c.rad = std::sqrt(std::log(static_cast<double>(horizon)) /
                    (2.0 * static_cast<double>(m)));
  return c;
}

bool within_radius(const RestlessInstance& truth,
                   const RestlessInstance& estimate, double rad) {
  if (truth.num_arms() != estimate.num_arms() ||
      truth.num_states() != estimate.num_states())
    throw std::invalid_argument("within_radius: shape mismatch");
  for (int i = 0; i < truth.num_arms(); ++i) {
    const auto& ct = truth.arms[i].chain;
    const auto& ce = estimate.arms[i].chain;
    for (int k = 0; k + 1 < truth.num_states(); ++k) {
      if (std::abs(ct.up(k) - ce.up(k)) > rad) return false;
      if (std::abs(ct.down(k) - ce.down(k)) > rad) return false;
    }
    for (int k = 0; k < truth.num_states(); ++k) {
      if (std::abs(ct.stay(k) - ce.stay(k)) > rad) return false;
      if (std::abs(truth.arms[i].rewards[k] - estimate.arms[i].rewards[k]) > rad)
        return false;
    }
  }
  return true;
}

RestlessInstance build_optimistic_instance(const RestlessInstance& estimated,
                                           double rad) {
  if (rad < 0.0) throw std::invalid_argument("rad must be nonnegative");
  const int m = estimated.num_states();
  std::vector<Arm> arms;
  arms.reserve(estimated.arms.size());
  for (const Arm& arm : estimated.arms) {
    ProbVector up(std::max(m - 1, 0)), down(std::max(m - 1, 0));
    for (int k = 0; k + 1 < m; ++k) {
      up[k] = arm.chain.up(k);
      down[k] = arm.chain.down(k);
    }
    for (int k = 0; k + 1 < m; ++k) {
      // Row k's up entry loses delta; for interior rows the row's down entry
      // (stored at down[k-1]) gains it, for the first row stay absorbs it.
      const double delta = std::min(rad, up[k]);
      up[k] -= delta;
      if (k > 0) down[k - 1] += delta;
    }
    if (m >= 2) {
      const double delta = std::min(rad, 1.0 - down[m - 2]);
      down[m - 2] += delta;
    }
    ProbVector rewards(m);
    for (int k = 0; k < m; ++k)
      rewards[k] = std::min(arm.rewards[k] + rad, 1.0);
    arms.push_back(
        Arm(BirthDeathChain(std::move(up), std::move(down)), std::move(rewards)));
  }
  return RestlessInstance(std::move(arms),
                          std::vector<int>(estimated.arms.size(), 0));
}

ScheduleStatus exploration_schedule(const EmpiricalStats& stats, int current_arm,
                                    std::int64_t m_target) {
  if (m_target < 1) throw std::invalid_argument("m_target must be >= 1");
  ScheduleStatus status;
  int arm = current_arm;
  while (arm <= stats.num_arms() && stats.min_completed(arm) >= m_target) {
    ++arm;
    status.arm_advanced = true;
  }
  if (arm > stats.num_arms()) {
    status.complete = true;
    arm = stats.num_arms();
  }
  status.next_arm = arm;
  return status;
}

RestlessUcbPolicy::RestlessUcbPolicy(RestlessUcbOptions opts)
    : opts_(std::move(opts)) {}

void RestlessUcbPolicy::reset(const PolicyContext& ctx) {
  if (ctx.num_arms < 1 || ctx.num_chain_states < 1 || ctx.horizon < 1)
    throw std::invalid_argument("policy reset: bad context");
  ctx_ = ctx;
  m_target_ = opts_.m_override > 0 ? opts_.m_override : default_m(ctx.horizon);
  if (opts_.rad_override >= 0.0) {
    radius_.rad = opts_.rad_override;
    radius_.m = m_target_;
  } else {
    radius_ = confidence_radius(std::max<std::int64_t>(ctx.horizon, 2), m_target_);
  }
  stats_ = EmpiricalStats(ctx.num_arms, ctx.num_chain_states);
  current_arm_ = 1;
  committed_ = false;
  commit_time_ = -1;
  last_state_.assign(ctx.num_arms, 0);
  last_time_.assign(ctx.num_arms, -1);
  belief_ = BeliefState{};
  tau_max_eff_ = 0;
  estimated_.reset();
  optimistic_.reset();
  table_.reset();
}

int RestlessUcbPolicy::choose(std::int64_t) const {
  if (!committed_) return current_arm_;
  if (opts_.oracle == OracleKind::kMyopic)
    return myopic_action(*optimistic_, belief_);
  return table_->action(belief_);
}

void RestlessUcbPolicy::observe(const Observation& obs) {
  if (obs.action >= 1) {
    last_state_[obs.action - 1] = obs.observed_state;
    last_time_[obs.action - 1] = obs.t;
  }
  if (committed_) {
    if (obs.action >= 1)
      advance_belief(belief_, obs.action, obs.observed_state, tau_max_eff_);
    return;
  }
  stats_.record(obs.t, obs.action, obs.observed_state, obs.reward);
  ScheduleStatus status = exploration_schedule(stats_, current_arm_, m_target_);
  if (status.complete) {
    committed_ = true;
    commit_time_ = obs.t + 1;
    if (commit_time_ < ctx_.horizon) commit(obs.t);
  } else {
    current_arm_ = status.next_arm;
  }
}

void RestlessUcbPolicy::commit(std::int64_t t_observed) {
  estimated_ = stats_.estimates();
  optimistic_ = build_optimistic_instance(*estimated_, radius_.rad);
  tau_max_eff_ =
      opts_.tau_max > 0 ? opts_.tau_max : default_tau_max(*optimistic_);
  belief_.state.assign(ctx_.num_arms, 0);
  belief_.tau.assign(ctx_.num_arms, 1);
  for (int i = 0; i < ctx_.num_arms; ++i) {
    belief_.state[i] = last_state_[i];
    belief_.tau[i] = saturate_tau(t_observed + 1 - last_time_[i], tau_max_eff_);
  }
  if (opts_.oracle == OracleKind::kExactRvi) {
    MdpBuildOptions mopts;
    mopts.state_cap = opts_.state_cap;
    mopts.seed_belief = belief_;
    TruncatedBeliefMdp mdp = build_truncated_mdp(*optimistic_, tau_max_eff_, mopts);
    RviOptions ropts;
    ropts.epsilon = opts_.epsilon;
    table_ = relative_value_iteration(mdp, ropts);
  }
}

std::string RestlessUcbPolicy::name() const {
  return opts_.oracle == OracleKind::kMyopic ? "restless-ucb-myopic"
                                             : "restless-ucb";
}

const RestlessInstance* RestlessUcbPolicy::estimated() const {
  return estimated_ ? &*estimated_ : nullptr;
}

const RestlessInstance* RestlessUcbPolicy::optimistic() const {
  return optimistic_ ? &*optimistic_ : nullptr;
}

const PolicyTable* RestlessUcbPolicy::table() const {
  return table_ ? &*table_ : nullptr;
}

ThompsonDiscretePolicy::ThompsonDiscretePolicy(ThompsonOptions opts)
    : opts_(std::move(opts)) {
  if (opts_.first_episode < 1)
    throw std::invalid_argument("thompson: first episode must be >= 1");
}

void ThompsonDiscretePolicy::reset(const PolicyContext& ctx) {
  if (ctx.num_arms < 1 || ctx.horizon < 1)
    throw std::invalid_argument("policy reset: bad context");
  ctx_ = ctx;
  cells_.assign(ctx.num_arms, {});
  for (int i = 0; i < ctx.num_arms; ++i) {
    if (i < static_cast<int>(opts_.explicit_cells.size()) &&
        !opts_.explicit_cells[i].empty()) {
      cells_[i] = opts_.explicit_cells[i];
    } else {
      if (opts_.grid.empty())
        throw std::invalid_argument("thompson: empty candidate grid");
      for (double a : opts_.grid)
        for (double b : opts_.grid) cells_[i].emplace_back(a, b);
    }
  }
  if (ctx.num_chain_states != 2)
    throw std::invalid_argument(
        "thompson: diagonal-cell candidates require 2-state arms");
  if (static_cast<int>(opts_.initial_states.size()) != ctx.num_arms)
    throw std::invalid_argument("thompson: initial states must cover all arms");
  if (!opts_.known_rewards.empty() &&
      static_cast<int>(opts_.known_rewards.size()) != ctx.num_arms)
    throw std::invalid_argument("thompson: known rewards must cover all arms");
  log_like_.assign(ctx.num_arms, {});
  for (int i = 0; i < ctx.num_arms; ++i)
    log_like_[i].assign(cells_[i].size(), 0.0);
  stats_ = EmpiricalStats(ctx.num_arms, ctx.num_chain_states);
  rng_ = RandomStream(derive_stream_seeds(ctx.seed, 1)[0]);
  last_state_ = opts_.initial_states;
  last_time_.assign(ctx.num_arms, -1);
  table_.reset();
  solve_count_ = 0;
  episode_len_ = opts_.first_episode;
  episode_end_ = episode_len_;
  solve_episode(0);
}

BeliefState ThompsonDiscretePolicy::belief_at(std::int64_t t, int tau_max) const {
  BeliefState z;
  z.state.resize(ctx_.num_arms);
  z.tau.resize(ctx_.num_arms);
  for (int i = 0; i < ctx_.num_arms; ++i) {
    z.state[i] = last_state_[i];
    z.tau[i] = saturate_tau(t - last_time_[i], tau_max);
  }
  return z;
}

RestlessInstance ThompsonDiscretePolicy::sample_instance() {
  std::vector<Arm> arms;
  arms.reserve(ctx_.num_arms);
  for (int i = 0; i < ctx_.num_arms; ++i) {
    const auto& like = log_like_[i];
    const double peak = *std::max_element(like.begin(), like.end());
    ProbVector weights(like.size());
    for (std::size_t c = 0; c < like.size(); ++c)
      weights[c] = std::exp(like[c] - peak);
    double total = 0.0;
    for (double w : weights) total += w;
    for (double& w : weights) w /= total;
    const int pick = rng_.categorical(weights);
    const auto [stay0, stay1] = cells_[i][pick];
    ProbVector rewards(2, 0.5);
    if (!opts_.known_rewards.empty()) {
      rewards = opts_.known_rewards[i];
    } else {
      for (int k = 0; k < 2; ++k)
        if (stats_.reward_count(i + 1, k) > 0)
          rewards[k] = stats_.reward_sum(i + 1, k) /
                       static_cast<double>(stats_.reward_count(i + 1, k));
    }
    arms.push_back(Arm(BirthDeathChain({1.0 - stay0}, {1.0 - stay1}),
                       std::move(rewards)));
  }
  return RestlessInstance(std::move(arms), opts_.initial_states);
}

void ThompsonDiscretePolicy::solve_episode(std::int64_t start_t) {
  RestlessInstance sampled = sample_instance();
  tau_max_eff_ = opts_.tau_max > 0 ? opts_.tau_max : default_tau_max(sampled);
  MdpBuildOptions mopts;
  mopts.state_cap = opts_.state_cap;
  mopts.seed_belief = belief_at(start_t, tau_max_eff_);
  TruncatedBeliefMdp mdp = build_truncated_mdp(sampled, tau_max_eff_, mopts);
  RviOptions ropts;
  ropts.epsilon = opts_.epsilon;
  table_ = relative_value_iteration(mdp, ropts);
  solve_count_++;
}

int ThompsonDiscretePolicy::choose(std::int64_t t) const {
  return table_->action(belief_at(t, tau_max_eff_));
}

void ThompsonDiscretePolicy::observe(const Observation& obs) {
  if (obs.action >= 1) {
    stats_.record(obs.t, obs.action, obs.observed_state, obs.reward);
    const auto& cell_list = cells_[obs.action - 1];
    if (last_time_[obs.action - 1] == obs.t - 1) {
      const int from = last_state_[obs.action - 1];
      const int to = obs.observed_state;
      auto& like = log_like_[obs.action - 1];
      for (std::size_t c = 0; c < cell_list.size(); ++c) {
        const auto [stay0, stay1] = cell_list[c];
        const double p = from == 0 ? (to == 0 ? stay0 : 1.0 - stay0)
                                   : (to == 1 ? stay1 : 1.0 - stay1);
        like[c] += std::log(std::max(p, 1e-300));
      }
    }
    last_state_[obs.action - 1] = obs.observed_state;
    last_time_[obs.action - 1] = obs.t;
  }
  if (obs.t + 1 == episode_end_ && obs.t + 1 < ctx_.horizon) {
    episode_len_ *= 2;
    episode_end_ += episode_len_;
    solve_episode(obs.t + 1);
  }
}

const std::vector<std::pair<double, double>>& ThompsonDiscretePolicy::cells(
    int arm) const {
  return cells_.at(arm - 1);
}

std::vector<double> ThompsonDiscretePolicy::posterior(int arm) const {
  const auto& like = log_like_.at(arm - 1);
  const double peak = *std::max_element(like.begin(), like.end());
  std::vector<double> mass(like.size());
  double total = 0.0;
  for (std::size_t c = 0; c < like.size(); ++c) {
    mass[c] = std::exp(like[c] - peak);
    total += mass[c];
  }
  for (double& w : mass) w /= total;
  return mass;
}

std::string ThompsonDiscretePolicy::name() const {
  if (!opts_.explicit_cells.empty() && !opts_.explicit_cells[0].empty())
    return "thompson-custom";
  return "thompson-" + std::to_string(opts_.grid.size());
}

void FixedArmPolicy::reset(const PolicyContext& ctx) {
  if (arm_ < 0 || arm_ > ctx.num_arms)
    throw std::invalid_argument("fixed arm out of range");
}

std::string FixedArmPolicy::name() const {
  return "fixed-arm-" + std::to_string(arm_);
}

OracleReplayPolicy::OracleReplayPolicy(RestlessInstance instance, double epsilon,
                                       int tau_max, std::int64_t state_cap)
    : instance_(std::move(instance)),
      epsilon_(epsilon),
      tau_max_(tau_max),
      state_cap_(state_cap) {}

void OracleReplayPolicy::reset(const PolicyContext& ctx) {
  if (ctx.num_arms != instance_.num_arms() ||
      ctx.num_chain_states != instance_.num_states())
    throw std::invalid_argument("oracle replay: context does not match instance");
  tau_max_eff_ = tau_max_ > 0 ? tau_max_ : default_tau_max(instance_);
  MdpBuildOptions mopts;
  mopts.state_cap = state_cap_;
  TruncatedBeliefMdp mdp = build_truncated_mdp(instance_, tau_max_eff_, mopts);
  RviOptions ropts;
  ropts.epsilon = epsilon_;
  table_ = relative_value_iteration(mdp, ropts);
  belief_ = initial_belief(instance_);
}

int OracleReplayPolicy::choose(std::int64_t) const {
  return table_->action(belief_);
}

void OracleReplayPolicy::observe(const Observation& obs) {
  if (obs.action >= 1)
    advance_belief(belief_, obs.action, obs.observed_state, tau_max_eff_);
}

std::string OracleReplayPolicy::name() const { return "oracle-replay"; }

}  // namespace restless
