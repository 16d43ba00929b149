#include "editorch/corpora.hpp"

#include <algorithm>

namespace editorch {

namespace {

std::string name_of(const Pattern& p) {
  if (p.kind == "object") return p.attrs.at("label");
  if (p.kind == "text") return p.attrs.at("content");
  throw Error(ErrorCode::Data, "pattern has no name token");
}

SubTask make(std::string verb, std::optional<std::string> target, std::optional<std::string> payload,
             std::optional<std::string> relation = std::nullopt, std::optional<std::string> anchor = std::nullopt) {
  return SubTask{{}, std::move(verb), std::move(target), std::move(payload), std::move(relation), std::move(anchor)};
}

std::optional<SubTask> subtask_for(const Constraint& c, const std::vector<Constraint>& goal) {
  switch (c.kind) {
    case ConstraintKind::Preserve:
    case ConstraintKind::Relation: return std::nullopt;
    case ConstraintKind::Add: {
      const std::string verb = c.subject.kind == "object" ? "add_object" : "add_text";
      for (const auto& r : goal)
        if (r.kind == ConstraintKind::Relation && r.subject == c.subject)
          return make(verb, std::nullopt, name_of(c.subject), *r.relation, name_of(*r.other));
      return make(verb, std::nullopt, name_of(c.subject), "none");
    }
    case ConstraintKind::Remove:
      return make(c.subject.kind == "object" ? "remove_object" : "remove_text", name_of(c.subject), std::nullopt);
    case ConstraintKind::Replace: {
      const Pattern& from = c.subject;
      const Pattern& to = *c.replacement;
      if (from.kind == "background") {
        if (to.attrs.count("color")) return make("recolor_background", std::nullopt, to.attrs.at("color"));
        return make("change_motif", std::nullopt, to.attrs.at("motif"));
      }
      if (from.kind == "text") return make("replace_text", name_of(from), name_of(to));
      if (to.attrs.count("color") && from.attrs.count("color") && from.attrs.at("label") == to.attrs.at("label"))
        return make("recolor_object", name_of(from), to.attrs.at("color"));
      return make("replace_object", name_of(from), name_of(to));
    }
  }
  return std::nullopt;
}

void number(std::vector<SubTask>& steps) {
  for (std::size_t i = 0; i < steps.size(); ++i) steps[i].id = "s" + std::to_string(i + 1);
}

}  // namespace

std::vector<SubTask> canonical_subtasks(const SceneDoc&, const std::vector<Constraint>& goal) {
  std::vector<SubTask> out;
  for (const auto& c : goal)
    if (auto s = subtask_for(c, goal)) out.push_back(*s);
  number(out);
  return out;
}

Plan template_plan(const Instance& inst, Rng& rng, double extra_probability) {
  Plan plan{inst.id, canonical_subtasks(inst.doc, inst.instruction.goal), Provenance::Template};
  if (rng.bernoulli(extra_probability) && plan.subtasks.size() < kMaxPlanLength) {
    std::vector<std::string> words;
    for (const auto& e : inst.doc.elements) {
      if (e.kind != ElementKind::Text) continue;
      bool preserved = false;
      for (const auto& c : inst.instruction.goal)
        if (c.kind == ConstraintKind::Preserve && c.reference->id == e.id) preserved = true;
      if (!preserved) words.push_back(e.name_token());
    }
    if (!words.empty()) {
      const auto fonts = vocab::fonts();
      plan.subtasks.push_back(make("change_font", words[rng.below(words.size())], std::string(fonts[rng.below(fonts.size())])));
      number(plan.subtasks);
    }
  }
  if (plan.subtasks.empty()) throw Error(ErrorCode::Data, "instance " + inst.id + " has no edits");
  return plan;
}

Plan ood_plan(const Instance& inst) {
  std::vector<SubTask> background, rest;
  for (const auto& s : canonical_subtasks(inst.doc, inst.instruction.goal)) {
    if (verb_is_background(s.verb)) {
      background.push_back(s);
    } else if (s.verb == "replace_object") {
      rest.push_back(make("remove_object", s.target, std::nullopt));
      rest.push_back(make("add_object", std::nullopt, s.payload, "none"));
    } else if (s.verb == "replace_text") {
      rest.push_back(make("remove_text", s.target, std::nullopt));
      rest.push_back(make("add_text", std::nullopt, s.payload, "none"));
    } else {
      rest.push_back(s);
    }
  }
  std::reverse(rest.begin(), rest.end());
  background.insert(background.end(), rest.begin(), rest.end());
  if (background.size() > kMaxPlanLength) background.resize(kMaxPlanLength);
  number(background);
  return Plan{inst.id, background, Provenance::Template};
}

std::vector<PlanExample> template_corpus(const std::vector<Instance>& instances, std::uint64_t seed) {
  std::vector<PlanExample> out;
  Rng rng(seed);
  for (const auto& inst : instances) out.push_back(make_example(inst.instruction, template_plan(inst, rng)));
  return out;
}

std::vector<PlanExample> ood_corpus(const std::vector<Instance>& instances) {
  std::vector<PlanExample> out;
  for (const auto& inst : instances) out.push_back(make_example(inst.instruction, ood_plan(inst)));
  return out;
}

}  // namespace editorch
