#include "editorch/subtask.hpp"

#include <algorithm>
#include <set>

#include "editorch/vocab.hpp"

namespace editorch {

bool verb_is_add(const std::string& verb) { return verb == "add_object" || verb == "add_text"; }

bool verb_targets_text(const std::string& verb) {
  return verb == "remove_text" || verb == "replace_text" || verb == "change_font";
}

bool verb_targets_object(const std::string& verb) {
  return verb == "remove_object" || verb == "replace_object" || verb == "recolor_object";
}

bool verb_is_background(const std::string& verb) { return verb == "recolor_background" || verb == "change_motif"; }

std::vector<std::string> SubTask::tokens() const {
  std::vector<std::string> out{verb};
  if (verb_is_add(verb)) {
    out.push_back(payload.value_or(""));
    out.push_back(relation.value_or("none"));
    if (relation && *relation != "none") out.push_back(anchor.value_or(""));
  } else if (verb_is_background(verb)) {
    out.push_back(payload.value_or(""));
  } else {
    out.push_back(target.value_or(""));
    if (payload) out.push_back(*payload);
  }
  out.emplace_back(vocab::kStepEnd);
  return out;
}

Slot next_slot(const std::vector<std::string>& prefix) {
  if (prefix.empty()) return Slot::Verb;
  const std::string& verb = prefix[0];
  const std::size_t pos = prefix.size();
  if (verb == "add_object" || verb == "add_text") {
    if (pos == 1) return verb == "add_object" ? Slot::Label : Slot::Word;
    if (pos == 2) return Slot::Relation;
    if (pos == 3) return prefix[2] == "none" ? Slot::StepEnd : Slot::Anchor;
    return Slot::StepEnd;
  }
  if (verb == "recolor_background") return pos == 1 ? Slot::Color : Slot::StepEnd;
  if (verb == "change_motif") return pos == 1 ? Slot::Motif : Slot::StepEnd;
  if (verb == "remove_object") return pos == 1 ? Slot::Label : Slot::StepEnd;
  if (verb == "remove_text") return pos == 1 ? Slot::Word : Slot::StepEnd;
  if (pos == 1) return verb_targets_text(verb) ? Slot::Word : Slot::Label;
  if (pos == 2) {
    if (verb == "replace_object") return Slot::Label;
    if (verb == "replace_text") return Slot::Word;
    if (verb == "recolor_object") return Slot::Color;
    if (verb == "change_font") return Slot::Font;
  }
  return Slot::StepEnd;
}

namespace {

bool token_fits(Slot slot, const std::string& t) {
  switch (slot) {
    case Slot::Verb: return vocab::is_verb(t);
    case Slot::Label: return vocab::is_label(t);
    case Slot::Word: return vocab::is_word(t);
    case Slot::Color: return vocab::is_color(t);
    case Slot::Motif: return vocab::is_motif(t);
    case Slot::Font: return vocab::is_font(t);
    case Slot::Relation: return vocab::is_relation(t);
    case Slot::Anchor: return vocab::is_label(t) || vocab::is_word(t);
    case Slot::StepEnd: return t == vocab::kStepEnd;
  }
  return false;
}

}  // namespace

SubTask parse_subtask(const std::vector<std::string>& tokens, std::string id) {
  if (tokens.empty() || tokens.size() > kMaxSubtaskTokens) throw Error(ErrorCode::Data, "subtask length out of range");
  std::vector<std::string> prefix;
  for (const auto& t : tokens) {
    Slot slot = next_slot(prefix);
    if (!token_fits(slot, t)) throw Error(ErrorCode::Data, "token '" + t + "' does not fit subtask grammar");
    prefix.push_back(t);
    if (slot == Slot::StepEnd) break;
  }
  if (prefix.size() != tokens.size() || prefix.back() != vocab::kStepEnd)
    throw Error(ErrorCode::Data, "subtask not terminated by ';'");
  SubTask s;
  s.id = std::move(id);
  s.verb = tokens[0];
  if (verb_is_add(s.verb)) {
    s.payload = tokens[1];
    s.relation = tokens[2];
    if (tokens[2] != "none") s.anchor = tokens[3];
  } else if (verb_is_background(s.verb)) {
    s.payload = tokens[1];
  } else {
    s.target = tokens[1];
    if (tokens.size() == 4) s.payload = tokens[2];
  }
  return s;
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::ChecklistGuided: return "checklist-guided";
    case Provenance::Sampled: return "sampled";
    case Provenance::Refined: return "refined";
    case Provenance::Template: return "template";
  }
  return "sampled";
}

Provenance provenance_from(const std::string& s) {
  if (s == "checklist-guided") return Provenance::ChecklistGuided;
  if (s == "sampled") return Provenance::Sampled;
  if (s == "refined") return Provenance::Refined;
  if (s == "template") return Provenance::Template;
  throw Error(ErrorCode::Data, "unknown provenance " + s);
}

std::vector<std::string> Plan::tokens() const {
  std::vector<std::string> out;
  for (const auto& s : subtasks) {
    auto t = s.tokens();
    out.insert(out.end(), t.begin(), t.end());
  }
  out.emplace_back(vocab::kEop);
  return out;
}

Plan parse_plan_tokens(const std::vector<std::string>& tokens, std::string instruction_id, Provenance p) {
  Plan plan;
  plan.instruction_id = std::move(instruction_id);
  plan.provenance = p;
  std::vector<std::string> step;
  bool ended = false;
  for (const auto& t : tokens) {
    if (ended) throw Error(ErrorCode::Data, "tokens after <eop>");
    if (t == vocab::kEop && step.empty()) {
      ended = true;
      continue;
    }
    step.push_back(t);
    if (t == vocab::kStepEnd) {
      plan.subtasks.push_back(parse_subtask(step, "s" + std::to_string(plan.subtasks.size() + 1)));
      step.clear();
    }
  }
  if (!ended || !step.empty()) throw Error(ErrorCode::Data, "plan not terminated by <eop>");
  validate(plan);
  return plan;
}

void validate(const Plan& plan) {
  if (plan.subtasks.empty() || plan.subtasks.size() > kMaxPlanLength)
    throw Error(ErrorCode::Data, "plan length out of range");
  std::set<std::string> ids;
  for (const auto& s : plan.subtasks) {
    if (!ids.insert(s.id).second) throw Error(ErrorCode::Data, "duplicate subtask id " + s.id);
    parse_subtask(s.tokens());
  }
}

Pattern pattern_for_token(const std::string& token) {
  if (vocab::is_label(token)) return Pattern{"object", std::nullopt, {{"label", token}}};
  if (vocab::is_word(token)) return Pattern{"text", std::nullopt, {{"content", token}}};
  throw Error(ErrorCode::Selector, "token does not name an element: " + token);
}

namespace {

const Element* first_match(const SceneDoc& doc, const Pattern& p) {
  for (const auto& e : doc.elements)
    if (p.matches(e)) return &e;
  return nullptr;
}

}  // namespace

std::vector<Constraint> derive_constraints(const SceneDoc& doc, const SubTask& s) {
  std::vector<Constraint> out;
  const std::string& v = s.verb;
  if (verb_is_add(v)) {
    Pattern added = v == "add_object" ? Pattern{"object", std::nullopt, {{"label", *s.payload}}}
                                      : Pattern{"text", std::nullopt, {{"content", *s.payload}}};
    out.push_back(Constraint{ConstraintKind::Add, added, {}, {}, {}, {}});
    if (s.relation && *s.relation != "none")
      out.push_back(Constraint{ConstraintKind::Relation, added, {}, *s.relation, pattern_for_token(*s.anchor), {}});
  } else if (v == "remove_object" || v == "remove_text") {
    out.push_back(Constraint{ConstraintKind::Remove, pattern_for_token(*s.target), {}, {}, {}, {}});
  } else if (v == "replace_object") {
    out.push_back(Constraint{ConstraintKind::Replace, pattern_for_token(*s.target), pattern_for_token(*s.payload), {}, {}, {}});
  } else if (v == "replace_text") {
    out.push_back(Constraint{ConstraintKind::Replace, pattern_for_token(*s.target), pattern_for_token(*s.payload), {}, {}, {}});
  } else if (v == "recolor_object" || v == "change_font") {
    const std::string key = v == "recolor_object" ? "color" : "font";
    Pattern original = pattern_for_token(*s.target);
    Pattern wanted = original;
    wanted.attrs[key] = *s.payload;
    if (const Element* e = first_match(doc, original); e && e->attrs.count(key)) original.attrs[key] = e->attrs.at(key);
    out.push_back(Constraint{ConstraintKind::Replace, original, wanted, {}, {}, {}});
  } else if (verb_is_background(v)) {
    const std::string key = v == "recolor_background" ? "color" : "motif";
    const std::string current = key == "color" ? doc.background.color : doc.background.motif;
    Pattern original{"background", std::nullopt, {{key, current}}};
    Pattern wanted{"background", std::nullopt, {{key, *s.payload}}};
    out.push_back(Constraint{ConstraintKind::Replace, original, wanted, {}, {}, {}});
  } else {
    throw Error(ErrorCode::Verb, "unknown verb " + v);
  }
  return out;
}

std::set<std::string> subtask_subjects(const SceneDoc& doc, const SubTask& s) {
  std::set<std::string> out;
  if (!s.target) return out;
  Pattern p = pattern_for_token(*s.target);
  for (const auto& e : doc.elements)
    if (p.matches(e)) out.insert(e.id);
  return out;
}

json to_json(const Plan& p) {
  json subtasks = json::array();
  for (const auto& s : p.subtasks) subtasks.push_back(json{{"id", s.id}, {"tokens", s.tokens()}});
  return json{{"schema", "plan/1"}, {"instruction", p.instruction_id}, {"provenance", to_string(p.provenance)},
              {"subtasks", subtasks}};
}

Plan plan_from_json(const json& j) {
  if (j.value("schema", "") != "plan/1") throw Error(ErrorCode::Data, "expected schema plan/1");
  Plan p;
  p.instruction_id = j.at("instruction").get<std::string>();
  p.provenance = provenance_from(j.at("provenance").get<std::string>());
  for (const auto& s : j.at("subtasks"))
    p.subtasks.push_back(parse_subtask(s.at("tokens").get<std::vector<std::string>>(), s.at("id").get<std::string>()));
  validate(p);
  return p;
}

json plans_to_json(const std::vector<Plan>& plans) {
  json arr = json::array();
  for (const auto& p : plans) arr.push_back(to_json(p));
  return json{{"schema", "plans/1"}, {"plans", arr}};
}

std::vector<Plan> plans_from_json(const json& j) {
  std::vector<Plan> out;
  for (const auto& p : j.at("plans")) out.push_back(plan_from_json(p));
  return out;
}

}  // namespace editorch
