#include "restless/solver.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace restless {

namespace {

constexpr const char* kPolicyFileTag = "restless-policy-table";
constexpr int kPolicyFileVersion = 1;

}  // namespace

int PolicyTable::action(const BeliefState& z) const {
  auto it = index.find(pack_belief(z, num_chain_states, tau_max));
  if (it == index.end())
    throw std::out_of_range("policy table: belief not in the enumerated set");
  return actions[it->second];
}

double PolicyTable::bias_at(const BeliefState& z) const {
  auto it = index.find(pack_belief(z, num_chain_states, tau_max));
  if (it == index.end())
    throw std::out_of_range("policy table: belief not in the enumerated set");
  if (bias.empty())
    throw std::logic_error("policy table: bias not available (loaded from disk)");
  return bias[it->second];
}

PolicyTable relative_value_iteration(const TruncatedBeliefMdp& mdp,
                                     const RviOptions& opts) {
  const std::size_t s_count = mdp.states.size();
  const int a_count = mdp.num_arms;
  if (s_count == 0) throw std::invalid_argument("rvi: empty MDP");

  std::vector<double> v(s_count, 0.0), w(s_count, 0.0);
  double kappa = 1.0;
  bool damped = false;
  double window_span = std::numeric_limits<double>::infinity();
  double lo = 0.0, hi = 0.0;
  bool converged = false;
  std::int64_t it = 0;
  std::vector<double> spans;

  auto bellman = [&](std::size_t z) {
    double best = -std::numeric_limits<double>::infinity();
    const std::size_t base = z * a_count;
    for (int a = 0; a < a_count; ++a) {
      double q = mdp.reward[base + a];
      for (const auto& [p, next] : mdp.transitions[base + a]) q += p * v[next];
      if (q > best) best = q;
    }
    return best;
  };

  while (it < opts.max_iterations) {
    ++it;
    lo = std::numeric_limits<double>::infinity();
    hi = -std::numeric_limits<double>::infinity();
    for (std::size_t z = 0; z < s_count; ++z) {
      w[z] = bellman(z);
      double d = w[z] - v[z];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    double span = hi - lo;
    if (opts.record_spans) spans.push_back(span);
    if (span < opts.epsilon) {
      converged = true;
      break;
    }
    if (it % opts.stall_window == 0) {
      if (!damped && span >= opts.stall_ratio * window_span) {
        damped = true;
        kappa = opts.stall_damping;
      }
      window_span = span;
    }
    double ref = kappa == 1.0 ? w[mdp.initial_index]
                              : (1.0 - kappa) * v[mdp.initial_index] +
                                    kappa * w[mdp.initial_index];
    if (kappa == 1.0) {
      for (std::size_t z = 0; z < s_count; ++z) v[z] = w[z] - ref;
    } else {
      for (std::size_t z = 0; z < s_count; ++z)
        v[z] = (1.0 - kappa) * v[z] + kappa * w[z] - ref;
    }
  }

  if (!converged) {
    std::ostringstream os;
    os << "rvi did not converge in " << opts.max_iterations
       << " iterations; final span " << (hi - lo);
    throw RviNotConverged(os.str(), hi - lo);
  }

  PolicyTable table;
  table.num_arms = a_count;
  table.num_chain_states = mdp.num_chain_states;
  table.tau_max = mdp.tau_max;
  table.epsilon = opts.epsilon;
  table.gain = (lo + hi) / 2.0;
  table.states = mdp.states;
  table.index = mdp.index;
  table.certificate.gain_lower = lo;
  table.certificate.gain_upper = hi;
  table.certificate.iterations = it;
  table.certificate.final_span = hi - lo;
  table.certificate.damped = damped;
  table.certificate.span_history = std::move(spans);

  // Greedy extraction from the converged values; ties toward the lowest arm.
  table.actions.resize(s_count);
  table.bias.resize(s_count);
  for (std::size_t z = 0; z < s_count; ++z) {
    const std::size_t base = z * a_count;
    double best = -std::numeric_limits<double>::infinity();
    int best_a = 1;
    for (int a = 0; a < a_count; ++a) {
      double q = mdp.reward[base + a];
      for (const auto& [p, next] : mdp.transitions[base + a]) q += p * v[next];
      if (q > best) {
        best = q;
        best_a = a + 1;
      }
    }
    table.actions[z] = best_a;
  }
  double ref = v[mdp.initial_index];
  for (std::size_t z = 0; z < s_count; ++z) table.bias[z] = v[z] - ref;
  return table;
}

int myopic_action(const RestlessInstance& inst, const BeliefState& z) {
  int best_a = 1;
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 1; a <= inst.num_arms(); ++a) {
    double r = expected_reward(inst, z, a);
    if (r > best) {
      best = r;
      best_a = a;
    }
  }
  return best_a;
}

void save_policy_table(const PolicyTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open policy file for writing: " + path);
  out << kPolicyFileTag << " v" << kPolicyFileVersion << "\n";
  out.precision(17);
  out << "arms " << table.num_arms << " states " << table.num_chain_states
      << " tau_max " << table.tau_max << " gain " << table.gain << " epsilon "
      << table.epsilon << " entries " << table.states.size() << "\n";
  for (std::size_t z = 0; z < table.states.size(); ++z) {
    const BeliefState& b = table.states[z];
    for (std::size_t i = 0; i < b.state.size(); ++i)
      out << b.state[i] << ' ' << b.tau[i] << ' ';
    out << table.actions[z] << "\n";
  }
  if (!out) throw std::runtime_error("failed writing policy file: " + path);
}

PolicyTable load_policy_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open policy file: " + path);
  std::string tag, version;
  in >> tag >> version;
  if (tag != kPolicyFileTag || version != "v" + std::to_string(kPolicyFileVersion))
    throw std::runtime_error("unrecognized policy file header in " + path);
  PolicyTable table;
  std::string label;
  std::size_t entries = 0;
  in >> label >> table.num_arms >> label >> table.num_chain_states >> label >>
      table.tau_max >> label >> table.gain >> label >> table.epsilon >> label >>
      entries;
  if (!in) throw std::runtime_error("malformed policy file header in " + path);
  table.states.reserve(entries);
  table.actions.reserve(entries);
  for (std::size_t z = 0; z < entries; ++z) {
    BeliefState b;
    b.state.resize(table.num_arms);
    b.tau.resize(table.num_arms);
    for (int i = 0; i < table.num_arms; ++i) in >> b.state[i] >> b.tau[i];
    int action = 0;
    in >> action;
    if (!in) throw std::runtime_error("malformed policy file entry in " + path);
    table.index.emplace(pack_belief(b, table.num_chain_states, table.tau_max),
                        static_cast<std::int32_t>(table.states.size()));
    table.states.push_back(std::move(b));
    table.actions.push_back(action);
  }
  return table;
}

}  // namespace restless
