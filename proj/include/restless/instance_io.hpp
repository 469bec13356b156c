#pragma once

#include <string>

#include "restless/chain.hpp"

namespace restless {

// Shipped benchmark instances ("paper-1", "paper-2"); throws
// std::invalid_argument for unknown names.
RestlessInstance builtin_instance(const std::string& name);

// JSON file format:
//   {"arms": [{"up": [..], "down": [..], "rewards": [..]}, ..],
//    "initial_states": [..]}
RestlessInstance load_instance(const std::string& path);
void save_instance(const RestlessInstance& inst, const std::string& path);

std::string instance_to_json_text(const RestlessInstance& inst);
RestlessInstance instance_from_json_text(const std::string& text);

// Builtin name if known, otherwise a file path.
RestlessInstance resolve_instance(const std::string& reference);

}  // namespace restless
