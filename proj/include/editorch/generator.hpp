#pragma once

#include <cstdint>
#include <string>

#include "editorch/scene.hpp"

namespace editorch {

enum class Difficulty { Small, Medium };

std::string to_string(Difficulty d);
Difficulty difficulty_from(const std::string& s);

struct Instance {
  std::string id;
  std::uint64_t seed = 0;
  Difficulty difficulty = Difficulty::Small;
  SceneDoc doc;
  Instruction instruction;
  Checklist checklist;

  friend bool operator==(const Instance&, const Instance&) = default;
};

// Pure function of (seed, difficulty). Small scenes hold 3-5 elements and
// need at most 3 subtasks; medium scenes hold up to 12 elements.
Instance generate_instance(std::uint64_t seed, Difficulty difficulty);

json to_json(const Instance& inst);  // "schema": "scene/1"
Instance instance_from_json(const json& j);

}  // namespace editorch
