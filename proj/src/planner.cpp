#include "editorch/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace editorch {

PlanExample make_example(const Instruction& instr, const Plan& plan) { return PlanExample{instr.category, plan.tokens()}; }

std::string PlannerModel::context_key(const std::string& category, const std::string& prev2, const std::string& prev1) {
  return category + "|" + prev2 + "|" + prev1;
}

namespace {

std::vector<double> softmax(const std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) norm += (p[i] = std::exp(z[i] - m));
  for (auto& v : p) v /= norm;
  return p;
}

double log_sum_exp(const std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

const std::vector<double>& zeros() {
  static const std::vector<double> z(Vocabulary::plan().size(), 0.0);
  return z;
}

template <typename F>
void for_each_transition(const PlanExample& ex, F&& f) {
  std::string prev2(vocab::kBos), prev1(vocab::kBos);
  for (const auto& t : ex.tokens) {
    f(PlannerModel::context_key(ex.category, prev2, prev1), Vocabulary::plan().id(t));
    prev2 = prev1;
    prev1 = t;
  }
}

}  // namespace

std::vector<double> PlannerModel::distribution(const std::string& key) const {
  auto it = logits_.find(key);
  return softmax(it == logits_.end() ? zeros() : it->second);
}

double PlannerModel::log_prob(const std::string& key, TokenId next) const {
  auto it = logits_.find(key);
  const auto& z = it == logits_.end() ? zeros() : it->second;
  return z[static_cast<std::size_t>(next)] - log_sum_exp(z);
}

json PlannerModel::to_json() const {
  json vocab = json::array();
  const auto& V = Vocabulary::plan();
  for (std::size_t i = 0; i < V.size(); ++i) vocab.push_back(V.token(static_cast<TokenId>(i)));
  return json{{"schema", "planner/1"}, {"alpha", alpha_}, {"vocabulary", vocab}, {"contexts", logits_}};
}

PlannerModel PlannerModel::from_json(const json& j) {
  if (j.value("schema", "") != "planner/1") throw Error(ErrorCode::Data, "expected schema planner/1");
  const auto& V = Vocabulary::plan();
  const auto vocab = j.at("vocabulary").get<std::vector<std::string>>();
  if (vocab.size() != V.size()) throw Error(ErrorCode::Data, "vocabulary size mismatch", "vocabulary");
  for (std::size_t i = 0; i < vocab.size(); ++i)
    if (vocab[i] != V.token(static_cast<TokenId>(i))) throw Error(ErrorCode::Data, "vocabulary order mismatch", "vocabulary");
  PlannerModel m(j.at("alpha").get<double>());
  m.logits_ = j.at("contexts").get<std::map<std::string, std::vector<double>>>();
  for (const auto& [k, z] : m.logits_)
    if (z.size() != V.size()) throw Error(ErrorCode::Data, "bad logit vector", "contexts." + k);
  return m;
}

TokenCounts count_tokens(const std::vector<PlanExample>& corpus) {
  TokenCounts counts;
  const std::size_t V = Vocabulary::plan().size();
  for (const auto& ex : corpus)
    for_each_transition(ex, [&](const std::string& key, TokenId id) {
      auto& c = counts[key];
      if (c.empty()) c.assign(V, 0.0);
      c[static_cast<std::size_t>(id)] += 1.0;
    });
  return counts;
}

double planner_objective(const PlannerModel& model, const TokenCounts& counts) {
  double total = 0.0;
  for (const auto& [key, n] : counts) {
    auto it = model.logits().find(key);
    const auto& z = it == model.logits().end() ? zeros() : it->second;
    const double lse = log_sum_exp(z);
    for (std::size_t v = 0; v < n.size(); ++v) total -= (n[v] + model.alpha()) * (z[v] - lse);
  }
  return total;
}

TokenCounts planner_gradient(const PlannerModel& model, const TokenCounts& counts) {
  TokenCounts grad;
  for (const auto& [key, n] : counts) {
    const auto p = model.distribution(key);
    double mass = 0.0;
    for (double v : n) mass += v + model.alpha();
    auto& g = grad[key];
    g.resize(n.size());
    for (std::size_t v = 0; v < n.size(); ++v) g[v] = mass * p[v] - (n[v] + model.alpha());
  }
  return grad;
}

double corpus_nll(const PlannerModel& model, const std::vector<PlanExample>& corpus) {
  double nll = 0.0;
  for (const auto& ex : corpus) for_each_transition(ex, [&](const std::string& key, TokenId id) { nll -= model.log_prob(key, id); });
  return nll;
}

std::size_t corpus_tokens(const std::vector<PlanExample>& corpus) {
  std::size_t n = 0;
  for (const auto& ex : corpus) n += ex.tokens.size();
  return n;
}

double perplexity(const PlannerModel& model, const std::vector<PlanExample>& corpus) {
  const std::size_t n = corpus_tokens(corpus);
  if (n == 0) throw Error(ErrorCode::Data, "empty corpus");
  return std::exp(corpus_nll(model, corpus) / static_cast<double>(n));
}

PlannerModel train_planner(const std::vector<PlanExample>& corpus, const PlannerTrainConfig& cfg,
                           PlannerTrainReport* report, const PlannerModel* init) {
  if (corpus.empty()) throw Error(ErrorCode::Data, "empty planner corpus");
  if (!(cfg.step > 0.0 && cfg.step <= 1.0)) throw Error(ErrorCode::Config, "planner step must be in (0, 1]", "planner_step");
  PlannerModel model = init ? *init : PlannerModel();
  const TokenCounts counts = count_tokens(corpus);
  const double a = model.alpha();
  TokenCounts target;
  for (const auto& [key, n] : counts) {
    double mass = 0.0;
    for (double v : n) mass += v + a;
    auto& t = target[key];
    t.resize(n.size());
    for (std::size_t v = 0; v < n.size(); ++v) t[v] = std::log((n[v] + a) / mass);
  }
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& [key, t] : target) {
      auto& z = model.logits()[key];
      if (z.empty()) z = zeros();
      for (std::size_t v = 0; v < z.size(); ++v) z[v] = (1.0 - cfg.step) * z[v] + cfg.step * t[v];
    }
    if (report) {
      report->objective.push_back(planner_objective(model, counts));
      report->nll.push_back(corpus_nll(model, corpus));
    }
  }
  return model;
}

// --- decoding ---

namespace {

void push_unique(std::vector<std::string>& v, const std::string& t) {
  if (std::find(v.begin(), v.end(), t) == v.end()) v.push_back(t);
}

std::vector<std::string> typed(const std::vector<std::string>& tokens, bool (*pred)(std::string_view)) {
  std::vector<std::string> out;
  for (const auto& t : tokens)
    if (pred(t)) push_unique(out, t);
  return out;
}

std::vector<std::string> all_of(std::span<const std::string_view> s) { return {s.begin(), s.end()}; }

std::vector<std::string> intersect_or(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> out;
  for (const auto& t : a)
    if (std::find(b.begin(), b.end(), t) != b.end()) out.push_back(t);
  return out.empty() ? a : out;
}

std::vector<std::string> prefer(const std::vector<std::string>& preferred, std::span<const std::string_view> all) {
  return preferred.empty() ? all_of(all) : preferred;
}

bool verb_has_target(const DecodeContext& ctx, const std::string& verb) {
  if (verb_targets_text(verb)) return !ctx.doc_words.empty();
  if (verb_targets_object(verb)) return !ctx.doc_labels.empty();
  return true;
}

}  // namespace

DecodeContext DecodeContext::from(const SceneDoc& doc, const Instruction& instr) {
  DecodeContext ctx;
  ctx.category = instr.category;
  for (const auto& e : doc.elements) {
    if (e.kind == ElementKind::Object) push_unique(ctx.doc_labels, e.attrs.at("label"));
    if (e.kind == ElementKind::Text)
      for (const auto& w : e.content_words()) push_unique(ctx.doc_words, w);
  }
  ctx.params = instr.params;
  return ctx;
}

std::vector<TokenId> allowed_tokens(const DecodeContext& ctx, const std::vector<std::string>& prefix,
                                    std::size_t completed) {
  const auto& V = Vocabulary::plan();
  std::vector<std::string> out;
  if (prefix.empty()) {
    if (completed < kMaxPlanLength)
      for (auto v : vocab::verbs())
        if (verb_has_target(ctx, std::string(v))) out.emplace_back(v);
    if (completed >= 1) out.emplace_back(vocab::kEop);
  } else {
    const std::string& verb = prefix[0];
    const bool target = prefix.size() == 1 && !verb_is_add(verb) && !verb_is_background(verb);
    switch (next_slot(prefix)) {
      case Slot::Verb: break;
      case Slot::Label:
        out = target ? intersect_or(ctx.doc_labels, ctx.params) : prefer(typed(ctx.params, vocab::is_label), vocab::labels());
        break;
      case Slot::Word:
        out = target ? intersect_or(ctx.doc_words, ctx.params) : prefer(typed(ctx.params, vocab::is_word), vocab::words());
        break;
      case Slot::Color: out = prefer(typed(ctx.params, vocab::is_color), vocab::colors()); break;
      case Slot::Motif: out = prefer(typed(ctx.params, vocab::is_motif), vocab::motifs()); break;
      case Slot::Font: out = prefer(typed(ctx.params, vocab::is_font), vocab::fonts()); break;
      case Slot::Relation:
        if (ctx.doc_labels.empty() && ctx.doc_words.empty())
          out = {"none"};
        else
          out = all_of(vocab::relations());
        break;
      case Slot::Anchor:
        out = ctx.doc_labels;
        for (const auto& w : ctx.doc_words) push_unique(out, w);
        break;
      case Slot::StepEnd: out = {std::string(vocab::kStepEnd)}; break;
    }
  }
  std::vector<TokenId> ids;
  for (const auto& t : out) ids.push_back(V.id(t));
  return ids;
}

namespace {

TokenId sample_from(const PlannerModel& model, const std::string& key, const std::vector<TokenId>& allowed, Rng& rng) {
  if (allowed.empty()) throw Error(ErrorCode::Data, "decoder has no legal token");
  const auto p = model.distribution(key);
  double total = 0.0;
  for (TokenId id : allowed) total += p[static_cast<std::size_t>(id)];
  double u = rng.uniform() * total;
  for (TokenId id : allowed) {
    u -= p[static_cast<std::size_t>(id)];
    if (u < 0.0) return id;
  }
  return allowed.back();
}

struct Decoder {
  Decoder(const PlannerModel& m, std::string cat) : model(m), category(std::move(cat)) {}

  const PlannerModel& model;
  std::string category;
  std::string prev2{vocab::kBos}, prev1{vocab::kBos};
  std::vector<std::string> tokens;

  std::string key() const { return PlannerModel::context_key(category, prev2, prev1); }
  void emit(const std::string& t) {
    tokens.push_back(t);
    prev2 = prev1;
    prev1 = t;
  }
};

}  // namespace

Plan generate_plan(const PlannerModel& model, const SceneDoc& doc, const Instruction& instr, std::uint64_t seed) {
  const auto ctx = DecodeContext::from(doc, instr);
  const auto& V = Vocabulary::plan();
  Rng rng(seed);
  Decoder d{model, instr.category};
  std::vector<std::string> step;
  std::size_t completed = 0;
  while (true) {
    const TokenId id = sample_from(model, d.key(), allowed_tokens(ctx, step, completed), rng);
    const std::string& t = V.token(id);
    d.emit(t);
    if (t == vocab::kEop) break;
    step.push_back(t);
    if (t == vocab::kStepEnd) {
      step.clear();
      ++completed;
    }
  }
  return parse_plan_tokens(d.tokens, instr.id, Provenance::Sampled);
}

double masked_plan_log_prob(const PlannerModel& model, const SceneDoc& doc, const Instruction& instr, const Plan& plan) {
  const auto ctx = DecodeContext::from(doc, instr);
  const auto& V = Vocabulary::plan();
  Decoder d{model, instr.category};
  std::vector<std::string> step;
  std::size_t completed = 0;
  double lp = 0.0;
  for (const auto& t : plan.tokens()) {
    const auto allowed = allowed_tokens(ctx, step, completed);
    const TokenId id = V.id(t);
    if (std::find(allowed.begin(), allowed.end(), id) == allowed.end()) return -std::numeric_limits<double>::infinity();
    const auto p = model.distribution(d.key());
    double total = 0.0;
    for (TokenId a : allowed) total += p[static_cast<std::size_t>(a)];
    lp += std::log(p[static_cast<std::size_t>(id)] / total);
    d.emit(t);
    step.push_back(t);
    if (t == vocab::kStepEnd) {
      step.clear();
      ++completed;
    }
  }
  return lp;
}

// --- checklist coverage ---

bool subtask_covers(const SceneDoc& doc, const SubTask& s, const ChecklistItem& item) {
  if (item.criterion == "preserve") return false;
  std::vector<Constraint> derived;
  try {
    derived = derive_constraints(doc, s);
  } catch (const Error&) {
    return false;
  }
  for (const auto& c : derived)
    if (checklist_item_for(c) == item) return true;
  return false;
}

namespace {

bool preserve_violated(const SceneDoc& doc, const std::vector<SubTask>& subtasks, const ChecklistItem& item) {
  if (item.detail.size() < 2) return false;
  const std::string& id = item.detail[1];
  for (const auto& s : subtasks)
    if (subtask_subjects(doc, s).count(id)) return true;
  return false;
}

// Subtasks built from scene names and checklist payloads that cover at
// least one checklist item.
std::vector<std::vector<std::string>> covering_candidates(const SceneDoc& doc, const DecodeContext& ctx,
                                                          const Checklist& checklist) {
  std::vector<std::string> detail;
  for (const auto& item : checklist.items)
    for (const auto& t : item.detail) push_unique(detail, t);
  const auto labels = typed(detail, vocab::is_label);
  const auto words = typed(detail, vocab::is_word);
  const auto colors = typed(detail, vocab::is_color);
  const auto motifs = typed(detail, vocab::is_motif);
  const auto fonts = typed(detail, vocab::is_font);
  std::vector<std::string> rels;
  for (const auto& t : detail)
    if (vocab::is_relation(t) && t != "none") push_unique(rels, t);
  std::vector<std::string> anchors;
  for (const auto& t : detail)
    if (std::find(ctx.doc_labels.begin(), ctx.doc_labels.end(), t) != ctx.doc_labels.end() ||
        std::find(ctx.doc_words.begin(), ctx.doc_words.end(), t) != ctx.doc_words.end())
      push_unique(anchors, t);

  std::vector<std::vector<std::string>> raw;
  const std::string end(vocab::kStepEnd);
  auto adds = [&](const std::string& verb, const std::vector<std::string>& payloads) {
    for (const auto& p : payloads) {
      raw.push_back({verb, p, "none", end});
      for (const auto& r : rels)
        for (const auto& a : anchors) raw.push_back({verb, p, r, a, end});
    }
  };
  adds("add_object", labels);
  adds("add_text", words);
  for (const auto& t : ctx.doc_labels) {
    raw.push_back({"remove_object", t, end});
    for (const auto& p : labels) raw.push_back({"replace_object", t, p, end});
    for (const auto& c : colors) raw.push_back({"recolor_object", t, c, end});
  }
  for (const auto& t : ctx.doc_words) {
    raw.push_back({"remove_text", t, end});
    for (const auto& p : words) raw.push_back({"replace_text", t, p, end});
    for (const auto& f : fonts) raw.push_back({"change_font", t, f, end});
  }
  for (const auto& c : colors) raw.push_back({"recolor_background", c, end});
  for (const auto& m : motifs) raw.push_back({"change_motif", m, end});

  std::vector<std::vector<std::string>> out;
  for (auto& toks : raw) {
    SubTask s = parse_subtask(toks);
    for (const auto& item : checklist.items)
      if (subtask_covers(doc, s, item)) {
        out.push_back(std::move(toks));
        break;
      }
  }
  return out;
}

}  // namespace

std::vector<std::vector<std::size_t>> coverage_map(const SceneDoc& doc, const Plan& plan, const Checklist& checklist) {
  std::vector<std::vector<std::size_t>> map(checklist.items.size());
  for (std::size_t i = 0; i < checklist.items.size(); ++i) {
    const auto& item = checklist.items[i];
    if (item.criterion == "preserve") {
      if (!preserve_violated(doc, plan.subtasks, item))
        for (std::size_t s = 0; s < plan.subtasks.size(); ++s) map[i].push_back(s);
      continue;
    }
    for (std::size_t s = 0; s < plan.subtasks.size(); ++s)
      if (subtask_covers(doc, plan.subtasks[s], item)) map[i].push_back(s);
  }
  return map;
}

ChecklistPlan generate_plan_checklist(const PlannerModel& model, const SceneDoc& doc, const Instruction& instr,
                                      const Checklist& checklist, std::uint64_t seed) {
  if (checklist.items.empty()) throw Error(ErrorCode::Data, "empty checklist");
  const auto ctx = DecodeContext::from(doc, instr);
  const auto& V = Vocabulary::plan();
  const auto candidates = covering_candidates(doc, ctx, checklist);
  std::vector<SubTask> parsed;
  for (const auto& c : candidates) parsed.push_back(parse_subtask(c));

  std::vector<std::vector<std::size_t>> covers(checklist.items.size());
  for (std::size_t i = 0; i < checklist.items.size(); ++i) {
    if (checklist.items[i].criterion == "preserve") continue;
    for (std::size_t c = 0; c < candidates.size(); ++c)
      if (subtask_covers(doc, parsed[c], checklist.items[i])) covers[i].push_back(c);
    if (covers[i].empty())
      throw Error(ErrorCode::Coverage, "no subtask can cover checklist item " + std::to_string(i + 1));
  }

  for (int attempt = 0; attempt < kCoverageRetries; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    Decoder d{model, instr.category};
    std::vector<SubTask> steps;
    std::vector<bool> covered(checklist.items.size(), false);
    for (std::size_t i = 0; i < covered.size(); ++i) covered[i] = checklist.items[i].criterion == "preserve";
    bool ended = false;
    while (!ended) {
      std::set<std::size_t> pool;
      for (std::size_t i = 0; i < covered.size(); ++i)
        if (!covered[i]) pool.insert(covers[i].begin(), covers[i].end());
      if (!pool.empty() && steps.size() >= kMaxPlanLength) break;
      std::vector<std::string> step;
      while (step.empty() || step.back() != vocab::kStepEnd) {
        std::vector<TokenId> allowed;
        if (pool.empty()) {
          allowed = allowed_tokens(ctx, step, steps.size());
        } else {
          std::set<TokenId> next;
          for (std::size_t c : pool) {
            const auto& toks = candidates[c];
            if (toks.size() > step.size() && std::equal(step.begin(), step.end(), toks.begin()))
              next.insert(V.id(toks[step.size()]));
          }
          allowed.assign(next.begin(), next.end());
        }
        const std::string& t = V.token(sample_from(model, d.key(), allowed, rng));
        d.emit(t);
        if (t == vocab::kEop) {
          ended = true;
          break;
        }
        step.push_back(t);
      }
      if (ended) break;
      steps.push_back(parse_subtask(step, "s" + std::to_string(steps.size() + 1)));
      for (std::size_t i = 0; i < covered.size(); ++i)
        if (!covered[i] && subtask_covers(doc, steps.back(), checklist.items[i])) covered[i] = true;
    }
    if (!ended) continue;
    Plan plan{instr.id, steps, Provenance::ChecklistGuided};
    auto map = coverage_map(doc, plan, checklist);
    if (std::all_of(map.begin(), map.end(), [](const auto& m) { return !m.empty(); }))
      return ChecklistPlan{plan, map, attempt + 1};
  }
  throw Error(ErrorCode::Coverage, "checklist not covered within " + std::to_string(kCoverageRetries) + " attempts");
}

// --- refinement ---

RefinementResult refine_plans(const std::vector<Plan>& plans, const BestRewards& best, const RefinementConfig& cfg) {
  if (cfg.tau < 0.0) throw Error(ErrorCode::Config, "tau must be >= 0", "tau");
  RefinementResult r;
  double pre = 0.0, post = 0.0;
  for (const auto& plan : plans) {
    Plan kept = plan;
    kept.subtasks.clear();
    std::vector<double> kept_rewards;
    for (const auto& s : plan.subtasks) {
      auto it = best.find({plan.instruction_id, s.id});
      if (it == best.end())
        throw Error(ErrorCode::Coverage, "no reward entry for " + plan.instruction_id + "/" + s.id);
      pre += it->second;
      ++r.pre_subtasks;
      if (it->second >= cfg.tau) {
        kept.subtasks.push_back(s);
        kept_rewards.push_back(it->second);
      }
    }
    if (kept.subtasks.size() < std::max<std::size_t>(1, cfg.min_subtasks)) {
      ++r.dropped_plans;
      continue;
    }
    if (kept.subtasks.size() != plan.subtasks.size()) kept.provenance = Provenance::Refined;
    for (double v : kept_rewards) post += v;
    r.post_subtasks += kept_rewards.size();
    r.plans.push_back(std::move(kept));
  }
  r.pre_mean = r.pre_subtasks ? pre / static_cast<double>(r.pre_subtasks) : 0.0;
  r.post_mean = r.post_subtasks ? post / static_cast<double>(r.post_subtasks) : 0.0;
  return r;
}

json to_json(const RefinementResult& r) {
  return json{{"pre_mean", r.pre_mean},         {"post_mean", r.post_mean},
              {"pre_subtasks", r.pre_subtasks}, {"post_subtasks", r.post_subtasks},
              {"dropped_plans", r.dropped_plans}, {"kept_plans", r.plans.size()}};
}

}  // namespace editorch
