#include "restless/instance_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace restless {

using nlohmann::json;

RestlessInstance builtin_instance(const std::string& name) {
  std::vector<Arm> arms;
  if (name == "paper-1") {
    arms.push_back(Arm(BirthDeathChain({0.3}, {0.2}), {1.0, 0.0}));
    arms.push_back(Arm(BirthDeathChain({0.5}, {0.4}), {0.8, 0.0}));
    return RestlessInstance(std::move(arms), {1, 1});
  }
  if (name == "paper-2") {
    arms.push_back(Arm(BirthDeathChain({0.3}, {0.1}), {0.8, 0.0}));
    arms.push_back(Arm(BirthDeathChain({0.3}, {0.5}), {0.4, 0.0}));
    return RestlessInstance(std::move(arms), {1, 1});
  }
  throw std::invalid_argument("unknown builtin instance: " + name);
}

namespace {

json instance_to_json(const RestlessInstance& inst) {
  json j;
  j["arms"] = json::array();
  const int m = inst.num_states();
  for (const Arm& arm : inst.arms) {
    json a;
    std::vector<double> up, down;
    for (int k = 0; k + 1 < m; ++k) {
      up.push_back(arm.chain.up(k));
      down.push_back(arm.chain.down(k));
    }
    a["up"] = up;
    a["down"] = down;
    a["rewards"] = arm.rewards;
    j["arms"].push_back(std::move(a));
  }
  j["initial_states"] = inst.initial_states;
  return j;
}

RestlessInstance instance_from_json(const json& j) {
  if (!j.contains("arms") || !j["arms"].is_array() || j["arms"].empty())
    throw std::invalid_argument("instance json: missing arms array");
  std::vector<Arm> arms;
  for (const json& a : j["arms"]) {
    std::vector<double> up = a.at("up").get<std::vector<double>>();
    std::vector<double> down = a.at("down").get<std::vector<double>>();
    std::vector<double> rewards = a.at("rewards").get<std::vector<double>>();
    arms.push_back(
        Arm(BirthDeathChain(std::move(up), std::move(down)), std::move(rewards)));
  }
  std::vector<int> init(arms.size(), 0);
  if (j.contains("initial_states"))
    init = j["initial_states"].get<std::vector<int>>();
  return RestlessInstance(std::move(arms), std::move(init));
}

}  // namespace

std::string instance_to_json_text(const RestlessInstance& inst) {
  return instance_to_json(inst).dump(2) + "\n";
}

RestlessInstance instance_from_json_text(const std::string& text) {
  return instance_from_json(json::parse(text));
}

RestlessInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return instance_from_json_text(buf.str());
  } catch (const json::exception& e) {
    throw std::runtime_error("instance file " + path + ": " + e.what());
  }
}

void save_instance(const RestlessInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write instance file: " + path);
  out << instance_to_json_text(inst);
}

RestlessInstance resolve_instance(const std::string& reference) {
  if (reference == "paper-1" || reference == "paper-2")
    return builtin_instance(reference);
  return load_instance(reference);
}

}  // namespace restless
