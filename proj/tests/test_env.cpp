#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "restless/env.hpp"

using namespace restless;

namespace {

RestlessInstance paper_instance_1() {
  std::vector<Arm> arms;
  arms.emplace_back(BirthDeathChain({0.3}, {0.2}), std::vector<double>{1.0, 0.0});
  arms.emplace_back(BirthDeathChain({0.5}, {0.4}), std::vector<double>{0.8, 0.0});
  return RestlessInstance(std::move(arms), {1, 1});
}

RestlessInstance single_state_arm(double reward) {
  std::vector<Arm> arms;
  arms.emplace_back(BirthDeathChain({}, {}), std::vector<double>{reward});
  return RestlessInstance(std::move(arms), {0});
}

}  // namespace

TEST_CASE("replaying an action sequence with the same seed reproduces observations") {
  auto inst = paper_instance_1();
  Env a(inst, 42), b(inst, 42);
  RandomStream actions(7);
  std::vector<int> seq(5000);
  for (int& x : seq) x = static_cast<int>(actions.raw() % 3);
  for (int x : seq) {
    Observation oa = a.step(x);
    Observation ob = b.step(x);
    CHECK(oa.t == ob.t);
    CHECK(oa.observed_state == ob.observed_state);
    CHECK(oa.reward == ob.reward);
  }
}

TEST_CASE("different seeds give different trajectories") {
  auto inst = paper_instance_1();
  int distinct = 0;
  for (int pair = 0; pair < 100; ++pair) {
    Env a(inst, 1000 + pair), b(inst, 900000 + pair);
    bool differ = false;
    for (int t = 0; t < 10000 && !differ; ++t) {
      if (a.step(1).reward != b.step(1).reward) differ = true;
    }
    if (differ) ++distinct;
  }
  CHECK(distinct == 100);
}

TEST_CASE("action choices never perturb the chains' sample paths") {
  auto inst = paper_instance_1();
  Env a(inst, 99), b(inst, 99);
  RandomStream actions(3);
  for (int t = 0; t < 20000; ++t) {
    a.step(1);
    b.step(static_cast<int>(actions.raw() % 3));
    CHECK(a.hidden_states() == b.hidden_states());
  }
}

TEST_CASE("marginal transition frequencies match the chain within 0.01") {
  auto inst = paper_instance_1();
  Env env(inst, 2024);
  int n = inst.num_arms(), m = inst.num_states();
  std::vector<std::vector<std::vector<long>>> count(
      n, std::vector<std::vector<long>>(m, std::vector<long>(m, 0)));
  std::vector<int> prev = env.hidden_states();
  RandomStream actions(11);
  for (int t = 0; t < 1000000; ++t) {
    env.step(static_cast<int>(actions.raw() % 3));
    for (int i = 0; i < n; ++i) ++count[i][prev[i]][env.hidden_states()[i]];
    prev = env.hidden_states();
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      long total = 0;
      for (int k = 0; k < m; ++k) total += count[i][j][k];
      REQUIRE(total > 0);
      for (int k = 0; k < m; ++k) {
        double freq = static_cast<double>(count[i][j][k]) / total;
        CHECK(std::abs(freq - inst.arms[i].chain.prob(j, k)) <= 0.01);
      }
    }
  }
}

TEST_CASE("mean reward of always pulling arm 1 approaches 0.4") {
  auto inst = paper_instance_1();
  Env env(inst, 5);
  double sum = 0.0;
  const int steps = 1000000;
  for (int t = 0; t < steps; ++t) sum += env.step(1).reward;
  CHECK(std::abs(sum / steps - 0.4) <= 0.01);
}

TEST_CASE("rewards are Bernoulli draws of the state reward") {
  auto inst = single_state_arm(0.3);
  Env env(inst, 321);
  double sum = 0.0;
  const int steps = 100000;
  for (int t = 0; t < steps; ++t) {
    Observation obs = env.step(1);
    CHECK((obs.reward == 0.0 || obs.reward == 1.0));
    sum += obs.reward;
  }
  double se = std::sqrt(0.3 * 0.7 / steps);
  CHECK(std::abs(sum / steps - 0.3) <= 3.0 * se);
}

TEST_CASE("expected reward mode pays the state reward deterministically") {
  auto inst = paper_instance_1();
  Env env(inst, 17, RewardMode::kExpected);
  for (int t = 0; t < 1000; ++t) {
    Observation obs = env.step(1);
    CHECK(obs.reward == inst.arms[0].rewards[obs.observed_state]);
  }
}

TEST_CASE("observation is the pre-transition state of the pulled arm") {
  auto inst = paper_instance_1();
  Env env(inst, 8);
  for (int t = 0; t < 2000; ++t) {
    int before = env.hidden_states()[1];
    Observation obs = env.step(2);
    CHECK(obs.observed_state == before);
    CHECK(obs.t == t);
  }
}

TEST_CASE("the default arm pays zero and observes nothing but time advances") {
  auto inst = paper_instance_1();
  Env env(inst, 31);
  std::vector<int> first = env.hidden_states();
  bool moved = false;
  for (int t = 0; t < 200; ++t) {
    Observation obs = env.step(0);
    CHECK(obs.reward == 0.0);
    CHECK(obs.observed_state == -1);
    CHECK(obs.action == 0);
    if (env.hidden_states() != first) moved = true;
  }
  CHECK(moved);
  CHECK(env.t() == 200);
}

TEST_CASE("env rejects instances that break the model assumptions") {
  std::vector<Arm> arms;
  arms.emplace_back(BirthDeathChain({0.7}, {0.5}), std::vector<double>{1.0, 0.0});
  RestlessInstance bad(std::move(arms), {0});
  CHECK_THROWS(Env(bad, 1));

  std::vector<Arm> inc;
  inc.emplace_back(BirthDeathChain({0.3}, {0.2}), std::vector<double>{0.2, 0.9});
  RestlessInstance bad_rewards(std::move(inc), {0});
  CHECK_THROWS(Env(bad_rewards, 1));
}

TEST_CASE("reset rewinds to the same trajectory") {
  auto inst = paper_instance_1();
  Env env(inst, 123);
  std::vector<double> first;
  for (int t = 0; t < 1000; ++t) first.push_back(env.step(1).reward);
  env.reset(123);
  for (int t = 0; t < 1000; ++t) CHECK(env.step(1).reward == first[t]);
}

TEST_CASE("trajectory log writes one CSV record per step") {
  auto inst = paper_instance_1();
  Env env(inst, 55);
  std::string path = "test_trajectory_tmp.csv";
  {
    TrajectoryLog log(path);
    for (int t = 0; t < 10; ++t) log.record(env.step(t % 3));
  }
  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "t,action,observed_state,reward");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 10);
  std::remove(path.c_str());
}
