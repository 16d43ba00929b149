#include "editorch/oracle_check.hpp"

#include <algorithm>
#include <cmath>

#include "editorch/corpora.hpp"

namespace editorch {

namespace {

std::vector<Constraint> union_goal(const SceneDoc& doc, const Plan& plan) {
  std::vector<Constraint> goal;
  for (const auto& s : plan.subtasks)
    for (auto& c : derive_constraints(doc, s)) goal.push_back(std::move(c));
  return goal;
}

OracleCase make_case(const Instance& inst, std::string kind, std::vector<SubTask> steps, std::uint64_t seed) {
  for (std::size_t i = 0; i < steps.size(); ++i) steps[i].id = "s" + std::to_string(i + 1);
  OracleCase c;
  c.instance_id = inst.id;
  c.kind = std::move(kind);
  c.doc = inst.doc;
  c.plan = Plan{inst.id, std::move(steps), Provenance::Template};
  c.goal = union_goal(inst.doc, c.plan);
  c.seed = seed;
  return c;
}

bool name_unique(const SceneDoc& doc, const Element& e) {
  const Pattern p = pattern_for_token(e.name_token());
  return std::count_if(doc.elements.begin(), doc.elements.end(), [&](const Element& o) { return p.matches(o); }) == 1;
}

std::string other_color(const std::string& c) {
  for (auto v : vocab::colors())
    if (v != c) return std::string(v);
  return c;
}

std::string unused_word(const SceneDoc& doc) {
  for (auto w : vocab::words()) {
    bool used = false;
    for (const auto& e : doc.elements)
      if (e.kind == ElementKind::Text)
        for (const auto& cw : e.content_words()) used |= cw == w;
    if (!used) return std::string(w);
  }
  return {};
}

}  // namespace

std::vector<OracleCase> build_oracle_cases(const std::vector<Instance>& instances, std::uint64_t seed) {
  std::vector<OracleCase> out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const Instance& inst = instances[i];
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(i));

    auto steps = canonical_subtasks(inst.doc, inst.instruction.goal);
    if (!steps.empty()) out.push_back(make_case(inst, "t1", {steps.front()}, derive_seed(s, 1)));

    std::vector<SubTask> attr;
    for (const auto& e : inst.doc.elements) {
      if (attr.size() == 3) break;
      if (e.kind == ElementKind::Decoration || !name_unique(inst.doc, e)) continue;
      if (e.kind == ElementKind::Object) {
        attr.push_back(SubTask{{}, "recolor_object", e.name_token(), other_color(e.attrs.at("color")), {}, {}});
      } else if (e.kind == ElementKind::Text) {
        const std::string w = unused_word(inst.doc);
        if (!w.empty()) attr.push_back(SubTask{{}, "replace_text", e.name_token(), w, {}, {}});
      }
    }
    if (attr.size() >= 2) out.push_back(make_case(inst, "disjoint", attr, derive_seed(s, 2)));

    std::vector<const Element*> by_area;
    for (const auto& e : inst.doc.elements) by_area.push_back(&e);
    std::stable_sort(by_area.begin(), by_area.end(),
                     [](const Element* a, const Element* b) { return a->bbox.area() > b->bbox.area(); });
    if (by_area.size() >= 3 && by_area[0]->kind != ElementKind::Decoration && by_area[1]->kind == ElementKind::Object &&
        name_unique(inst.doc, *by_area[0]) && name_unique(inst.doc, *by_area[1])) {
      const Element& big = *by_area[0];
      const Element& second = *by_area[1];
      std::vector<SubTask> shift = {
          SubTask{{}, big.kind == ElementKind::Object ? "remove_object" : "remove_text", big.name_token(), {}, {}, {}},
          SubTask{{}, "recolor_object", second.name_token(), other_color(second.attrs.at("color")), {}, {}}};
      out.push_back(make_case(inst, "index_shift", shift, derive_seed(s, 3)));
    }
  }
  return out;
}

namespace {

json summary_json(const OracleSummary& s) {
  return json{{"count", s.count}, {"exact", s.exact}, {"positive_gap", s.positive_gap}, {"mean_gap", s.mean_gap}};
}

void add_to(OracleSummary& s, const OracleCaseResult& r) {
  s.mean_gap = (s.mean_gap * static_cast<double>(s.count) + r.gap) / static_cast<double>(s.count + 1);
  ++s.count;
  if (r.exact) ++s.exact;
  if (r.gap > 1e-9) ++s.positive_gap;
}

}  // namespace

json OracleReport::to_json() const {
  json rows = json::array();
  for (const auto& c : cases)
    rows.push_back(json{{"instance", c.instance_id},
                        {"kind", c.kind},
                        {"steps", c.steps},
                        {"table_keys", c.table_keys},
                        {"table_best_sum", c.table_best_sum},
                        {"rollout_reward", c.rollout_reward},
                        {"oracle_reward", c.oracle_reward},
                        {"oracle_keys", c.oracle_keys},
                        {"gap", c.gap},
                        {"exact", c.exact}});
  return json{{"schema", "oracle/1"},
              {"cases", rows},
              {"summary",
               {{"t1", summary_json(t1)},
                {"disjoint", summary_json(disjoint)},
                {"index_shift", summary_json(index_shift)},
                {"all", summary_json(all)}}}};
}

OracleReport run_oracle_check(const std::vector<OracleCase>& cases, const ProfileSet& profiles, int n_repeats) {
  if (!profiles.deterministic()) throw Error(ErrorCode::Config, "oracle check needs deterministic profiles", "oracle_profiles");
  OracleReport report;
  PrecomputeOptions opts;
  opts.n_repeats = n_repeats;
  opts.mode = CandidateMode::Restricted;
  for (const auto& oc : cases) {
    OracleCaseResult r;
    r.instance_id = oc.instance_id;
    r.kind = oc.kind;
    r.steps = oc.plan.subtasks.size();
    const RewardTable table = precompute_rewards_serial({PrecomputeTask{oc.instance_id, oc.doc, oc.plan, oc.seed}}, profiles, opts);
    for (const auto& e : table.entries) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < e.records.size(); ++i)
        if (e.records[i].reward > e.records[best].reward) best = i;
      r.table_keys.push_back(e.candidates[best].key);
      r.table_best_sum += e.records[best].reward;
    }
    const OracleResult oracle = brute_force_oracle(oc.doc, oc.goal, oc.plan, profiles, oc.seed);
    r.oracle_reward = oracle.best_reward;
    r.oracle_keys = oracle.best_keys;
    const SceneDoc rolled = rollout_keys(oc.doc, oc.plan, r.table_keys, profiles, oc.seed, CandidateMode::Restricted);
    r.rollout_reward = aggregate(score_edit(oc.doc, rolled, oc.goal));
    r.gap = r.oracle_reward - r.rollout_reward;
    r.exact = oc.kind == "t1" ? std::abs(r.table_best_sum - r.oracle_reward) <= 1e-9
                              : std::abs(r.rollout_reward - r.oracle_reward) <= 1e-9;
    add_to(report.all, r);
    if (oc.kind == "t1") add_to(report.t1, r);
    if (oc.kind == "disjoint") add_to(report.disjoint, r);
    if (oc.kind == "index_shift") add_to(report.index_shift, r);
    report.cases.push_back(std::move(r));
  }
  return report;
}

}  // namespace editorch
