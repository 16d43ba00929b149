#pragma once

#include <cstdint>
#include <vector>

#include "editorch/generator.hpp"
#include "editorch/planner.hpp"

namespace editorch {

// One subtask per edit constraint, in goal order; an add and its relation
// constraint share one subtask. Preserve items produce nothing.
std::vector<SubTask> canonical_subtasks(const SceneDoc& doc, const std::vector<Constraint>& goal);

// Canonical plan, sometimes followed by a font change on an unpreserved
// text element.
Plan template_plan(const Instance& inst, Rng& rng, double extra_probability = 0.3);

// The same edits phrased differently: replacements split into remove + add,
// background changes first, remaining steps in reverse order.
Plan ood_plan(const Instance& inst);

std::vector<PlanExample> template_corpus(const std::vector<Instance>& instances, std::uint64_t seed);
std::vector<PlanExample> ood_corpus(const std::vector<Instance>& instances);

}  // namespace editorch
