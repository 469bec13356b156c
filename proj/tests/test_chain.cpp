#include <algorithm>
#include <cmath>
#include <complex>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "restless/chain.hpp"
#include "restless/random_instances.hpp"
#include "restless/rng.hpp"

using namespace restless;

namespace {

Eigen::MatrixXd dense_matrix(const BirthDeathChain& c) {
  int m = c.num_states();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) p(j, k) = c.prob(j, k);
  return p;
}

// Oracle: stationary distribution from the linear system d P = d, sum d = 1,
// solved densely. Independent of the product-form route in the library.
std::vector<double> stationary_by_linear_solve(const BirthDeathChain& c) {
  int m = c.num_states();
  Eigen::MatrixXd a = dense_matrix(c).transpose() - Eigen::MatrixXd::Identity(m, m);
  for (int k = 0; k < m; ++k) a(m - 1, k) = 1.0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  b(m - 1) = 1.0;
  Eigen::VectorXd d = a.fullPivLu().solve(b);
  return std::vector<double>(d.data(), d.data() + m);
}

// Oracle: second largest eigenvalue modulus from a dense general eigensolve.
double slem_by_dense_eigensolve(const BirthDeathChain& c) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(dense_matrix(c), false);
  std::vector<double> moduli;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    moduli.push_back(std::abs(es.eigenvalues()(i)));
  std::sort(moduli.begin(), moduli.end(), std::greater<double>());
  return moduli.size() > 1 ? moduli[1] : 0.0;
}

std::vector<double> multiply(const std::vector<double>& v, const BirthDeathChain& c) {
  int m = c.num_states();
  std::vector<double> out(m, 0.0);
  for (int j = 0; j < m; ++j)
    for (int k = std::max(0, j - 1); k <= std::min(m - 1, j + 1); ++k)
      out[k] += v[j] * c.prob(j, k);
  return out;
}

// Row-wise optimistic shift with magnitude delta: every row moves delta of
// probability mass toward lower states (clamped so entries stay valid).
BirthDeathChain shifted_chain(const BirthDeathChain& c, double delta) {
  int m = c.num_states();
  std::vector<double> up(m - 1), down(m - 1);
  for (int k = 0; k < m - 1; ++k) up[k] = c.up(k) - std::min(delta, c.up(k));
  for (int k = 0; k < m - 1; ++k) {
    int row = k + 1;
    double head = row == m - 1 ? c.stay(row) : c.up(row);
    down[k] = c.down(k) + std::min(delta, head);
  }
  return BirthDeathChain(std::move(up), std::move(down));
}

BirthDeathChain paper_arm_1() { return BirthDeathChain({0.3}, {0.2}); }
BirthDeathChain paper_arm_2() { return BirthDeathChain({0.5}, {0.4}); }

RestlessInstance paper_instance_1() {
  std::vector<Arm> arms;
  arms.emplace_back(paper_arm_1(), std::vector<double>{1.0, 0.0});
  arms.emplace_back(paper_arm_2(), std::vector<double>{0.8, 0.0});
  return RestlessInstance(std::move(arms), {1, 1});
}

}  // namespace

TEST_CASE("prob vector and prefix domination basics") {
  CHECK(is_prob_vector({0.25, 0.75}));
  CHECK(is_prob_vector({1.0}));
  CHECK_FALSE(is_prob_vector({0.5, 0.6}));
  CHECK_FALSE(is_prob_vector({-0.1, 1.1}));

  CHECK(prefix_dominates({1.0, 0.0, 0.0}, {0.0, 0.0, 1.0}));
  CHECK_FALSE(prefix_dominates({0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}));
  ProbVector v{0.3, 0.3, 0.4};
  CHECK(prefix_dominates(v, v));
  CHECK(prefix_dominates({0.3 + 1e-13, 0.3, 0.4 - 1e-13}, v));
  CHECK(prefix_dominates({0.3 - 1e-13, 0.3, 0.4 + 1e-13}, v));
}

TEST_CASE("chain construction validates shape and entries") {
  CHECK_THROWS(BirthDeathChain({0.5, 0.5}, {0.5}));
  CHECK_THROWS(BirthDeathChain({-0.1}, {0.2}));
  CHECK_THROWS(BirthDeathChain({0.3}, {1.2}));
  // Interior diagonal would go negative: row 1 has down[0] + up[1] > 1.
  CHECK_THROWS(BirthDeathChain({0.3, 0.6}, {0.7, 0.1}));
  // A3 violations are data, not construction errors.
  CHECK_NOTHROW(BirthDeathChain({0.7}, {0.5}));
  // Single state chain.
  BirthDeathChain unit({}, {});
  CHECK(unit.num_states() == 1);
  CHECK(unit.stay(0) == 1.0);
}

TEST_CASE("stationary distribution matches frozen values and linear solve") {
  auto d1 = paper_arm_1().stationary();
  CHECK(d1[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(d1[1] == doctest::Approx(0.6).epsilon(1e-12));

  auto d2 = paper_arm_2().stationary();
  CHECK(d2[0] == doctest::Approx(4.0 / 9.0).epsilon(1e-12));
  CHECK(d2[1] == doctest::Approx(5.0 / 9.0).epsilon(1e-12));

  RandomStream rng(20240811);
  for (int trial = 0; trial < 200; ++trial) {
    int m = 2 + static_cast<int>(rng.raw() % 5);
    auto c = random_chain(rng, m, 0.05);
    auto got = c.stationary();
    auto want = stationary_by_linear_solve(c);
    for (int k = 0; k < m; ++k) CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-11));
    // Fixed point check in max norm.
    auto dp = multiply(got, c);
    for (int k = 0; k < m; ++k) CHECK(std::abs(dp[k] - got[k]) <= 1e-12);
  }
}

TEST_CASE("stationary requires positive downward rates") {
  CHECK_THROWS(BirthDeathChain({0.3}, {0.0}).stationary());
}

TEST_CASE("slem matches the two-state analytic value and dense eigensolve") {
  // Two states: eigenvalues are 1 and P(0,0) + P(1,1) - 1.
  CHECK(paper_arm_1().slem() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(paper_arm_2().slem() == doctest::Approx(0.1).epsilon(1e-12));

  BirthDeathChain uniform3({1.0 / 3.0, 1.0 / 3.0}, {1.0 / 3.0, 1.0 / 3.0});
  CHECK(std::abs(uniform3.slem() - slem_by_dense_eigensolve(uniform3)) <= 1e-10);
  CHECK(uniform3.slem() == doctest::Approx(2.0 / 3.0).epsilon(1e-10));

  RandomStream rng(77001);
  for (int trial = 0; trial < 200; ++trial) {
    int m = 2 + static_cast<int>(rng.raw() % 5);
    auto c = random_chain(rng, m, 0.05);
    CHECK(std::abs(c.slem() - slem_by_dense_eigensolve(c)) <= 1e-10);
  }

  CHECK(BirthDeathChain({}, {}).slem() == 0.0);
}

TEST_CASE("slem handles chains with zero couplings via block splitting") {
  // up[0] = 0 decouples the spectrum into block upper/lower triangular parts.
  BirthDeathChain c({0.0, 0.2}, {0.3, 0.4});
  CHECK(std::abs(c.slem() - slem_by_dense_eigensolve(c)) <= 1e-10);
  BirthDeathChain d({0.25, 0.0}, {0.0, 0.4});
  CHECK(std::abs(d.slem() - slem_by_dense_eigensolve(d)) <= 1e-10);
}

TEST_CASE("row_power matches hand computed powers and the uncached path") {
  auto c = paper_arm_1();
  auto r0 = c.row_power(0, 0);
  CHECK(r0[0] == 1.0);
  CHECK(r0[1] == 0.0);
  auto r1 = c.row_power(0, 1);
  CHECK(r1[0] == doctest::Approx(0.7).epsilon(1e-15));
  auto r2 = c.row_power(0, 2);
  CHECK(r2[0] == doctest::Approx(0.55).epsilon(1e-12));
  CHECK(r2[1] == doctest::Approx(0.45).epsilon(1e-12));

  RandomStream rng(5150);
  auto rc = random_chain(rng, 5, 0.05);
  for (std::int64_t tau : {0, 1, 2, 3, 7, 19, 64, 511}) {
    for (int s = 0; s < rc.num_states(); ++s) {
      auto cached = rc.row_power(s, tau);
      auto plain = rc.row_power_uncached(s, tau);
      CHECK(cached == plain);  // bit identical
      double sum = 0.0;
      for (double x : cached) {
        CHECK(x >= 0.0);
        sum += x;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("row_power substitutes the stationary distribution beyond the cache cap") {
  BirthDeathChain c({0.3}, {0.2}, 64);
  auto far = c.row_power(0, 65);
  auto d = c.stationary();
  CHECK(far == d);
  CHECK(c.row_power_uncached(0, 65) == d);
  auto at_cap = c.row_power(0, 64);
  CHECK(std::abs(at_cap[0] - d[0]) <= 1e-9);  // mixed long before the cap
}

TEST_CASE("row_power cache is safe under concurrent access") {
  BirthDeathChain c({0.2, 0.3, 0.1}, {0.25, 0.15, 0.3});
  std::vector<ProbVector> want;
  for (int s = 0; s < 4; ++s)
    for (int tau = 0; tau <= 200; ++tau) want.push_back(c.row_power_uncached(s, tau));

  std::vector<std::thread> workers;
  std::vector<int> bad(4, 0);
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&, w] {
      for (int rep = 0; rep < 3; ++rep) {
        std::size_t i = 0;
        for (int s = 0; s < 4; ++s)
          for (int tau = 0; tau <= 200; ++tau, ++i)
            if (c.row_power(s, tau) != want[i]) ++bad[w];
      }
    });
  }
  for (auto& t : workers) t.join();
  for (int w = 0; w < 4; ++w) CHECK(bad[w] == 0);
}

TEST_CASE("validate_assumptions flags each violation") {
  auto inst = paper_instance_1();
  auto report = validate_assumptions(inst, 0.1);
  CHECK(report.ok);

  // A1: rewards increasing in the state index.
  std::vector<Arm> arms;
  arms.emplace_back(paper_arm_1(), std::vector<double>{0.2, 0.9});
  RestlessInstance bad1(std::move(arms), {0});
  auto r1 = validate_assumptions(bad1, 0.1);
  CHECK_FALSE(r1.ok);
  bool a1_failed = false;
  for (const auto& c : r1.checks)
    if (c.assumption == "A1" && !c.pass) a1_failed = true;
  CHECK(a1_failed);

  // A3: up[0] + down[0] = 1.2 > 1.
  std::vector<Arm> arms3;
  arms3.emplace_back(BirthDeathChain({0.7}, {0.5}), std::vector<double>{1.0, 0.0});
  RestlessInstance bad3(std::move(arms3), {0});
  auto r3 = validate_assumptions(bad3, 0.1);
  CHECK_FALSE(r3.ok);
  bool a3_failed = false, a1_ok = true;
  for (const auto& c : r3.checks) {
    if (c.assumption == "A3" && !c.pass) a3_failed = true;
    if (c.assumption == "A1" && !c.pass) a1_ok = false;
  }
  CHECK(a3_failed);
  CHECK(a1_ok);

  // A4: diagonal entry below the floor.
  std::vector<Arm> arms4;
  arms4.emplace_back(BirthDeathChain({0.95}, {0.5}), std::vector<double>{1.0, 0.0});
  RestlessInstance bad4(std::move(arms4), {0});
  auto r4 = validate_assumptions(bad4, 0.1);
  bool a4_failed = false;
  for (const auto& c : r4.checks)
    if (c.assumption == "A4" && !c.pass) a4_failed = true;
  CHECK(a4_failed);

  // Single state arm: only P(0,0) = 1 exists, so A4 holds for any c1 <= 1.
  std::vector<Arm> arms5;
  arms5.emplace_back(BirthDeathChain({}, {}), std::vector<double>{0.7});
  RestlessInstance single(std::move(arms5), {0});
  CHECK(validate_assumptions(single, 0.9).ok);
}

TEST_CASE("min stationary mass of the first benchmark instance") {
  CHECK(min_stationary_mass(paper_instance_1()) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("rows of a shifted chain prefix dominate the original rows") {
  RandomStream rng(90210);
  for (int trial = 0; trial < 200; ++trial) {
    int m = 2 + static_cast<int>(rng.raw() % 5);
    double c1 = 0.05 + 0.1 * rng.uniform();
    auto c = random_chain(rng, m, c1);
    double delta = rng.uniform() * c1 / 3.0;
    auto cp = shifted_chain(c, delta);
    for (int k = 0; k < m; ++k) CHECK(prefix_dominates(cp.row(k), c.row(k)));
  }
}

TEST_CASE("lower rows prefix dominate higher rows under A2 and A3") {
  RandomStream rng(31415);
  for (int trial = 0; trial < 200; ++trial) {
    int m = 2 + static_cast<int>(rng.raw() % 5);
    auto c = random_chain(rng, m, 0.05);
    for (int k = 0; k + 1 < m; ++k) CHECK(prefix_dominates(c.row(k), c.row(k + 1)));
  }
}

TEST_CASE("one transition step preserves prefix domination") {
  RandomStream rng(2718);
  for (int trial = 0; trial < 200; ++trial) {
    int m = 2 + static_cast<int>(rng.raw() % 5);
    auto c = random_chain(rng, m, 0.05);
    auto w = random_prob_vector(rng, m);
    auto v = shift_mass_down(rng, w);
    REQUIRE(prefix_dominates(v, w));
    CHECK(prefix_dominates(multiply(v, c), multiply(w, c), 1e-10));
  }
}

TEST_CASE("powers of entrywise close chains stay within 2 tau delta") {
  RandomStream rng(1729);
  for (int trial = 0; trial < 50; ++trial) {
    int m = 2 + static_cast<int>(rng.raw() % 5);
    double c1 = 0.05 + 0.1 * rng.uniform();
    auto c = random_chain(rng, m, c1);
    double delta = rng.uniform() * c1 / 3.0;
    auto cp = shifted_chain(c, delta);
    auto v = random_prob_vector(rng, m);
    auto a = v, b = v;
    for (int tau = 1; tau <= 50; ++tau) {
      a = multiply(a, c);
      b = multiply(b, cp);
      for (int k = 0; k < m; ++k)
        CHECK(std::abs(a[k] - b[k]) <= 2.0 * tau * delta + 1e-10);
    }
  }
}
