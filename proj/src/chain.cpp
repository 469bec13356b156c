#include "restless/chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace restless {

namespace {

// Eigenvalues of a symmetric tridiagonal matrix by QL with implicit shifts.
// diag has n entries, off has n-1.
std::vector<double> sym_tridiag_eigenvalues(std::vector<double> diag,
                                            std::vector<double> off) {
  int n = static_cast<int>(diag.size());
  if (n == 0) return {};
  off.push_back(0.0);
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        double dd = std::abs(diag[m]) + std::abs(diag[m + 1]);
        if (std::abs(off[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m != l) {
        if (iter++ == 100)
          throw std::runtime_error("tridiagonal eigensolve did not converge");
        double g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
        double r = std::hypot(g, 1.0);
        g = diag[m] - diag[l] + off[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i = m - 1;
        bool underflow = false;
        for (; i >= l; --i) {
          double f = s * off[i];
          double b = c * off[i];
          r = std::hypot(f, g);
          off[i + 1] = r;
          if (r == 0.0) {
            diag[i + 1] -= p;
            off[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = diag[i + 1] - p;
          r = (diag[i] - g) * s + 2.0 * c * b;
          p = s * r;
          diag[i + 1] = g + p;
          g = c * r - b;
        }
        if (underflow && i >= l) continue;
        diag[l] -= p;
        off[l] = g;
        off[m] = 0.0;
      }
    } while (m != l);
  }
  return diag;
}

std::string entry_name(const char* what, int index) {
  std::ostringstream os;
  os << what << "[" << index << "]";
  return os.str();
}

}  // namespace

bool is_prob_vector(const ProbVector& v, double tol) {
  if (v.empty()) return false;
  double sum = 0.0;
  for (double x : v) {
    if (!(x >= -tol && x <= 1.0 + tol)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= std::max(tol, 1e-9);
}

bool prefix_dominates(const ProbVector& v, const ProbVector& w, double slack) {
  if (v.size() != w.size())
    throw std::invalid_argument("prefix_dominates: size mismatch");
  double sv = 0.0, sw = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    sv += v[k];
    sw += w[k];
    if (sv < sw - slack) return false;
  }
  return true;
}

BirthDeathChain::BirthDeathChain(std::vector<double> up, std::vector<double> down,
                                 std::int64_t power_cache_cap)
    : up_(std::move(up)), down_(std::move(down)), cache_cap_(power_cache_cap) {
  if (up_.size() != down_.size())
    throw std::invalid_argument("birth-death chain: up/down size mismatch");
  if (cache_cap_ < 1) throw std::invalid_argument("birth-death chain: cache cap < 1");
  int m = num_states();
  for (int k = 0; k < m - 1; ++k) {
    if (!(up_[k] >= 0.0 && up_[k] <= 1.0 + kProbTol))
      throw std::invalid_argument(entry_name("up", k) + " outside [0, 1]");
    if (!(down_[k] >= 0.0 && down_[k] <= 1.0 + kProbTol))
      throw std::invalid_argument(entry_name("down", k) + " outside [0, 1]");
  }
  for (int k = 0; k < m; ++k) {
    double out = (k > 0 ? down_[k - 1] : 0.0) + (k + 1 < m ? up_[k] : 0.0);
    if (out > 1.0 + kProbTol)
      throw std::invalid_argument("row " + std::to_string(k) +
                                  " exceeds unit mass; diagonal would be negative");
  }
  cache_.resize(m);
}

BirthDeathChain::BirthDeathChain(const BirthDeathChain& other)
    : up_(other.up_), down_(other.down_), cache_cap_(other.cache_cap_) {
  cache_.resize(num_states());
}

BirthDeathChain& BirthDeathChain::operator=(const BirthDeathChain& other) {
  if (this != &other) {
    up_ = other.up_;
    down_ = other.down_;
    cache_cap_ = other.cache_cap_;
    cache_.assign(num_states(), {});
  }
  return *this;
}

double BirthDeathChain::stay(int k) const {
  int m = num_states();
  double out = (k > 0 ? down_[k - 1] : 0.0) + (k + 1 < m ? up_[k] : 0.0);
  return std::max(0.0, 1.0 - out);
}

double BirthDeathChain::prob(int j, int k) const {
  if (k == j) return stay(j);
  if (k == j + 1 && k < num_states()) return up_[j];
  if (k == j - 1 && k >= 0) return down_[k];
  return 0.0;
}

ProbVector BirthDeathChain::row(int s) const {
  int m = num_states();
  ProbVector r(m, 0.0);
  if (s > 0) r[s - 1] = down_[s - 1];
  r[s] = stay(s);
  if (s + 1 < m) r[s + 1] = up_[s];
  return r;
}

ProbVector BirthDeathChain::stationary() const {
  int m = num_states();
  ProbVector w(m);
  w[0] = 1.0;
  double sum = 1.0;
  for (int k = 0; k + 1 < m; ++k) {
    if (down_[k] <= 0.0)
      throw std::domain_error("stationary distribution undefined: " +
                              entry_name("down", k) + " = 0");
    w[k + 1] = w[k] * up_[k] / down_[k];
    sum += w[k + 1];
  }
  for (double& x : w) x /= sum;
  return w;
}

double BirthDeathChain::slem() const {
  int m = num_states();
  if (m == 1) return 0.0;
  // Split at zero couplings: if up[k] or down[k] vanishes the matrix is block
  // triangular there, so the spectrum is the union of the block spectra. Each
  // block with positive couplings is symmetrized by the diagonal similarity
  // diag(1, sqrt(d0/u0), sqrt(d0 d1 / u0 u1), ...).
  std::vector<double> moduli;
  int start = 0;
  while (start < m) {
    int end = start;
    while (end + 1 < m && up_[end] > 0.0 && down_[end] > 0.0) ++end;
    int n = end - start + 1;
    std::vector<double> d(n), e(std::max(0, n - 1));
    for (int j = 0; j < n; ++j) d[j] = stay(start + j);
    for (int j = 0; j + 1 < n; ++j) e[j] = std::sqrt(up_[start + j] * down_[start + j]);
    for (double lam : sym_tridiag_eigenvalues(std::move(d), std::move(e)))
      moduli.push_back(std::abs(lam));
    start = end + 1;
  }
  std::sort(moduli.begin(), moduli.end(), std::greater<double>());
  return moduli.size() > 1 ? moduli[1] : 0.0;
}

ProbVector BirthDeathChain::advance(const ProbVector& v) const {
  int m = num_states();
  ProbVector out(m, 0.0);
  for (int j = 0; j < m; ++j) {
    double x = v[j];
    if (x == 0.0) continue;
    if (j > 0) out[j - 1] += x * down_[j - 1];
    out[j] += x * stay(j);
    if (j + 1 < m) out[j + 1] += x * up_[j];
  }
  return out;
}

ProbVector BirthDeathChain::row_power(int s, std::int64_t tau) const {
  int m = num_states();
  if (s < 0 || s >= m) throw std::out_of_range("row_power: state out of range");
  if (tau < 0) throw std::invalid_argument("row_power: negative tau");
  if (tau > cache_cap_) return stationary();
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto& col = cache_[s];
  if (col.empty()) {
    ProbVector e(m, 0.0);
    e[s] = 1.0;
    col.push_back(std::move(e));
  }
  while (static_cast<std::int64_t>(col.size()) <= tau)
    col.push_back(advance(col.back()));
  return col[static_cast<std::size_t>(tau)];
}

ProbVector BirthDeathChain::row_power_uncached(int s, std::int64_t tau) const {
  int m = num_states();
  if (s < 0 || s >= m) throw std::out_of_range("row_power: state out of range");
  if (tau < 0) throw std::invalid_argument("row_power: negative tau");
  if (tau > cache_cap_) return stationary();
  ProbVector v(m, 0.0);
  v[s] = 1.0;
  for (std::int64_t t = 0; t < tau; ++t) v = advance(v);
  return v;
}

Arm::Arm(BirthDeathChain chain_in, std::vector<double> rewards_in)
    : chain(std::move(chain_in)), rewards(std::move(rewards_in)) {
  if (static_cast<int>(rewards.size()) != chain.num_states())
    throw std::invalid_argument("arm: rewards size does not match state count");
  for (double r : rewards)
    if (!(r >= 0.0 && r <= 1.0))
      throw std::invalid_argument("arm: reward outside [0, 1]");
}

RestlessInstance::RestlessInstance(std::vector<Arm> arms_in,
                                   std::vector<int> initial_states_in)
    : arms(std::move(arms_in)), initial_states(std::move(initial_states_in)) {
  if (arms.empty()) throw std::invalid_argument("instance: no arms");
  int m = arms.front().chain.num_states();
  for (const auto& a : arms)
    if (a.chain.num_states() != m)
      throw std::invalid_argument("instance: arms disagree on state count");
  if (static_cast<int>(initial_states.size()) != static_cast<int>(arms.size()))
    throw std::invalid_argument("instance: initial_states size mismatch");
  for (int s : initial_states)
    if (s < 0 || s >= m)
      throw std::invalid_argument("instance: initial state out of range");
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  os << (ok ? "all assumptions hold" : "assumption violations:");
  if (!ok)
    for (const auto& c : checks)
      if (!c.pass) os << " [" << c.assumption << " arm " << c.arm << ": " << c.detail << "]";
  return os.str();
}

ValidationReport validate_assumptions(const RestlessInstance& inst, double c1) {
  ValidationReport report;
  int m = inst.num_states();
  for (int i = 0; i < inst.num_arms(); ++i) {
    const Arm& arm = inst.arms[i];

    AssumptionCheck a1{"A1", i, true, "rewards nonincreasing in state"};
    for (int k = 0; k + 1 < m; ++k) {
      if (arm.rewards[k] < arm.rewards[k + 1] - kProbTol) {
        a1.pass = false;
        std::ostringstream os;
        os << "rewards increase between states " << k << " and " << k + 1 << " ("
           << arm.rewards[k] << " < " << arm.rewards[k + 1] << ")";
        a1.detail = os.str();
        break;
      }
    }

    AssumptionCheck a2{"A2", i, true, "tridiagonal by representation"};

    AssumptionCheck a3{"A3", i, true, "up[k] + down[k] <= 1"};
    for (int k = 0; k + 1 < m; ++k) {
      double s = arm.chain.up(k) + arm.chain.down(k);
      if (s > 1.0 + kProbTol) {
        a3.pass = false;
        std::ostringstream os;
        os << "up[" << k << "] + down[" << k << "] = " << s << " > 1";
        a3.detail = os.str();
        break;
      }
    }

    AssumptionCheck a4{"A4", i, true, "near-diagonal entries at least c1"};
    for (int j = 0; j < m && a4.pass; ++j) {
      for (int k = std::max(0, j - 1); k <= std::min(m - 1, j + 1); ++k) {
        if (arm.chain.prob(j, k) < c1 - kProbTol) {
          a4.pass = false;
          std::ostringstream os;
          os << "P(" << j << ", " << k << ") = " << arm.chain.prob(j, k) << " < c1 = " << c1;
          a4.detail = os.str();
          break;
        }
      }
    }

    for (auto& check : {a1, a2, a3, a4}) {
      report.ok = report.ok && check.pass;
      report.checks.push_back(check);
    }
  }
  return report;
}

double min_stationary_mass(const RestlessInstance& inst) {
  double best = 1.0;
  for (const auto& arm : inst.arms)
    for (double d : arm.chain.stationary()) best = std::min(best, d);
  return best;
}

double max_slem(const RestlessInstance& inst) {
  double worst = 0.0;
  for (const auto& arm : inst.arms) worst = std::max(worst, arm.chain.slem());
  return worst;
}

}  // namespace restless
