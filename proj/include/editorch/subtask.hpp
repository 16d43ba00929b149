#pragma once

#include <optional>
#include <string>
#include <vector>

#include "editorch/scene.hpp"

namespace editorch {

inline constexpr std::size_t kMaxSubtaskTokens = 16;
inline constexpr std::size_t kMaxPlanLength = 10;

// One atomic editing step. Token layout (always terminated by ";"):
//   add_object     <label> <relation> [<anchor>]
//   add_text       <word>  <relation> [<anchor>]
//   remove_object  <label>
//   remove_text    <word>
//   replace_object <label> <label>
//   replace_text   <word>  <word>
//   recolor_object <label> <color>
//   change_font    <word>  <font>
//   recolor_background <color>
//   change_motif   <motif>
// The anchor is present iff relation != none; it names an existing element
// by label or content word.
struct SubTask {
  std::string id;
  std::string verb;
  std::optional<std::string> target;   // existing element named by label/word
  std::optional<std::string> payload;  // new label/word/color/font/motif
  std::optional<std::string> relation; // add_*: placement relation or "none"
  std::optional<std::string> anchor;

  std::vector<std::string> tokens() const;
  friend bool operator==(const SubTask&, const SubTask&) = default;
};

// Throws Data error on a grammar violation.
SubTask parse_subtask(const std::vector<std::string>& tokens, std::string id = {});

enum class Provenance { ChecklistGuided, Sampled, Refined, Template };
std::string to_string(Provenance p);
Provenance provenance_from(const std::string& s);

struct Plan {
  std::string instruction_id;
  std::vector<SubTask> subtasks;
  Provenance provenance = Provenance::Sampled;

  std::vector<std::string> tokens() const;  // all subtasks then <eop>
  friend bool operator==(const Plan&, const Plan&) = default;
};

Plan parse_plan_tokens(const std::vector<std::string>& tokens, std::string instruction_id, Provenance p);
void validate(const Plan& plan);

// Grammar slots used by masked decoding.
enum class Slot { Verb, Label, Word, Color, Motif, Font, Relation, Anchor, StepEnd };

// Next slot given the tokens of the current (unfinished) subtask; empty prefix
// means a verb (or <eop>) comes next.
Slot next_slot(const std::vector<std::string>& step_prefix);

bool verb_is_add(const std::string& verb);
bool verb_targets_text(const std::string& verb);
bool verb_targets_object(const std::string& verb);
bool verb_is_background(const std::string& verb);

Pattern pattern_for_token(const std::string& token);  // label -> object, word -> text

// Constraints this subtask should establish, resolved against `doc`.
std::vector<Constraint> derive_constraints(const SceneDoc& doc, const SubTask& s);

// Element ids in `doc` that the subtask directly targets.
std::set<std::string> subtask_subjects(const SceneDoc& doc, const SubTask& s);

json to_json(const Plan& p);
Plan plan_from_json(const json& j);
json plans_to_json(const std::vector<Plan>& plans);
std::vector<Plan> plans_from_json(const json& j);

}  // namespace editorch
