#include "editorch/search.hpp"

#include <algorithm>
#include <set>

namespace editorch {

namespace {

std::string digest(const SceneDoc& d) { return hex64(scene_digest(d)); }

}  // namespace

json TrajectoryTrace::to_json() const {
  json steps_j = json::array();
  for (const auto& s : steps) {
    json top = json::array();
    for (std::size_t i = 0; i < s.top.size(); ++i) {
      json t{{"candidate", s.candidates[s.top[i]]}, {"verifier", s.verifier[i]}};
      if (!s.errors[i].empty()) t["error"] = s.errors[i];
      top.push_back(t);
    }
    json step{{"index", s.index},
              {"subtask", s.subtask.tokens()},
              {"input_digest", s.input_digest},
              {"output_digest", s.output_digest},
              {"candidates", s.candidates},
              {"scores", s.scores},
              {"top", top}};
    step["chosen"] = s.chosen ? json(s.candidates[*s.chosen]) : json(nullptr);
    steps_j.push_back(step);
  }
  return json{{"schema", "trace/1"},
              {"instance", instance_id},
              {"steps", steps_j},
              {"polished", polished},
              {"final_digest", final_digest},
              {"final", json::array({final_triple.ie, final_triple.ip, final_triple.vq})},
              {"final_reward", final_reward},
              {"final_satisfaction", final_satisfaction},
              {"plan_final", json::array({plan_triple.ie, plan_triple.ip, plan_triple.vq})},
              {"plan_reward", plan_reward},
              {"plan_satisfaction", plan_satisfaction}};
}

std::vector<Constraint> plan_checklist(const SceneDoc& doc, const Plan& plan) {
  std::vector<Constraint> out;
  for (const auto& s : plan.subtasks)
    for (auto& c : derive_constraints(doc, s))
      if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(std::move(c));
  return out;
}

EpisodeResult run_episode(const std::string& instance_id, const SceneDoc& doc, const Instruction& instr, const Plan& plan,
                          const OrchestratorPolicy& policy, const ProfileSet& profiles, const SearchConfig& cfg) {
  if (plan.subtasks.empty()) throw Error(ErrorCode::Data, "empty plan");
  if (cfg.k < 1) throw Error(ErrorCode::Config, "K must be >= 1", "k");
  EpisodeResult out;
  out.trace.instance_id = instance_id;
  SceneDoc state = doc;
  for (std::size_t t = 0; t < plan.subtasks.size(); ++t) {
    const SubTask& s = plan.subtasks[t];
    StepRecord rec;
    rec.index = t;
    rec.subtask = s;
    rec.input_digest = digest(state);
    const CandidateSet set = enumerate_candidates(state, s, analysis_seed(cfg.episode_seed, t), cfg.mode);
    for (const auto& c : set.candidates) rec.candidates.push_back(c.key);
    rec.scores = policy_scores(policy, s, set);
    rec.top = topk(rec.scores, cfg.k);

    std::optional<SceneDoc> best_doc;
    double best_score = -1.0;
    for (std::size_t i : rec.top) {
      const Candidate& c = set.candidates[i];
      try {
        SceneDoc after = execute_candidate(state, set, c, s, execution_seed(cfg.episode_seed, t, c.key), profiles);
        const double v = verifier_score(state, after, s, cfg.verifier,
                                        derive_seed(cfg.episode_seed, static_cast<std::uint64_t>(t), fnv1a64(c.key),
                                                    fnv1a64("verifier")));
        rec.verifier.push_back(v);
        rec.errors.emplace_back();
        if (v > best_score) {
          best_score = v;
          best_doc = std::move(after);
          rec.chosen = i;
        }
      } catch (const Error& e) {
        rec.verifier.push_back(0.0);
        rec.errors.emplace_back(e.what());
      }
    }
    if (best_doc) state = std::move(*best_doc);
    rec.output_digest = digest(state);
    out.trace.steps.push_back(std::move(rec));
  }
  const std::vector<Constraint> checklist = plan_checklist(doc, plan);
  if (cfg.polish) {
    std::vector<Constraint> protect = instr.goal;
    protect.insert(protect.end(), checklist.begin(), checklist.end());
    state = polish(state, protect, cfg.polish_max);
    out.trace.polished = true;
  }
  out.trace.final_digest = digest(state);
  out.trace.final_triple = score_edit(doc, state, instr.goal, cfg.verifier.bands);
  out.trace.final_reward = aggregate(out.trace.final_triple);
  out.trace.final_satisfaction = constraint_satisfaction(state, instr.goal);
  out.trace.plan_triple = score_edit(doc, state, checklist, cfg.verifier.bands);
  out.trace.plan_reward = aggregate(out.trace.plan_triple);
  out.trace.plan_satisfaction = constraint_satisfaction(state, checklist);
  out.doc = std::move(state);
  return out;
}

bool verify_trace(const TrajectoryTrace& trace, const SceneDoc& initial) {
  std::string prev = digest(initial);
  for (const auto& s : trace.steps) {
    if (s.input_digest != prev) return false;
    if (s.chosen && std::find(s.top.begin(), s.top.end(), *s.chosen) == s.top.end()) return false;
    if (!s.chosen && s.output_digest != s.input_digest) return false;
    prev = s.output_digest;
  }
  return trace.polished || trace.final_digest == prev;
}

SceneDoc polish(const SceneDoc& doc, const std::vector<Constraint>& goal, int max_removals) {
  std::set<std::string> protected_ids;
  for (const auto& c : goal) {
    if (!constraint_satisfied(doc, c)) continue;
    for (const auto& e : doc.elements) {
      if (c.kind == ConstraintKind::Preserve ? e.id == c.reference->id
                                              : (c.subject.matches(e) || (c.replacement && c.replacement->matches(e)) ||
                                                 (c.other && c.other->matches(e))))
        protected_ids.insert(e.id);
    }
  }
  SceneDoc out = doc;
  out.defects.clear();
  int removed = 0;
  for (const auto& d : doc.defects) {
    const bool locked = d.element && protected_ids.count(*d.element);
    if (!locked && removed < max_removals) {
      ++removed;
      continue;
    }
    out.defects.push_back(d);
  }
  return out;
}

namespace {

struct OracleSearch {
  const std::vector<Constraint>& goal;
  const Plan& plan;
  const ProfileSet& profiles;
  std::uint64_t seed;
  const OracleLimits& limits;
  const SceneDoc& original;
  OracleResult best;
  std::vector<std::string> keys;
  bool any = false;

  void visit(const SceneDoc& state, std::size_t t) {
    if (t == plan.subtasks.size()) {
      ++best.evaluated;
      const RewardTriple tr = score_edit(original, state, goal);
      const double r = aggregate(tr);
      if (!any || r > best.best_reward) {
        any = true;
        best.best_reward = r;
        best.best_triple = tr;
        best.best_keys = keys;
      }
      return;
    }
    const SubTask& s = plan.subtasks[t];
    const CandidateSet set = enumerate_candidates(state, s, analysis_seed(seed, t), CandidateMode::Restricted);
    if (set.candidates.size() > limits.max_candidates)
      throw Error(ErrorCode::Size, std::to_string(set.candidates.size()) + " candidates exceed the oracle limit");
    for (const auto& c : set.candidates) {
      SceneDoc next;
      try {
        next = execute_candidate(state, set, c, s, execution_seed(seed, t, c.key), profiles);
      } catch (const Error&) {
        next = state;
      }
      keys.push_back(c.key);
      visit(next, t + 1);
      keys.pop_back();
    }
  }
};

}  // namespace

OracleResult brute_force_oracle(const SceneDoc& doc, const std::vector<Constraint>& goal, const Plan& plan,
                                const ProfileSet& profiles, std::uint64_t episode_seed, const OracleLimits& limits) {
  if (plan.subtasks.empty() || plan.subtasks.size() > limits.max_steps)
    throw Error(ErrorCode::Size, "plan length " + std::to_string(plan.subtasks.size()) + " outside oracle limit");
  if (!profiles.deterministic()) throw Error(ErrorCode::Config, "oracle needs deterministic tool profiles");
  OracleSearch search{goal, plan, profiles, episode_seed, limits, doc, {}, {}};
  search.visit(doc, 0);
  return search.best;
}

SceneDoc rollout_keys(const SceneDoc& doc, const Plan& plan, const std::vector<std::string>& keys,
                      const ProfileSet& profiles, std::uint64_t episode_seed, CandidateMode mode) {
  if (keys.size() != plan.subtasks.size()) throw Error(ErrorCode::Data, "one key per subtask expected");
  SceneDoc state = doc;
  for (std::size_t t = 0; t < keys.size(); ++t) {
    const SubTask& s = plan.subtasks[t];
    const CandidateSet set = enumerate_candidates(state, s, analysis_seed(episode_seed, t), mode);
    const Candidate* c = set.find(keys[t]);
    if (!c) continue;
    try {
      state = execute_candidate(state, set, *c, s, execution_seed(episode_seed, t, c->key), profiles);
    } catch (const Error&) {
    }
  }
  return state;
}

}  // namespace editorch
