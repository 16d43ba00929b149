#include "editorch/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

namespace editorch {

json to_json(const Candidate& c) {
  return json{{"key", c.key},   {"analysis_tool", c.analysis_tool}, {"region", c.region}, {"editor", c.editor},
              {"kind", c.region_kind}, {"area", c.area},            {"match", c.match}};
}

Candidate candidate_from_json(const json& j) {
  return Candidate{j.at("key"),  j.at("analysis_tool"), j.at("region"), j.at("editor"),
                   j.at("kind"), j.at("area"),          j.at("match")};
}

std::string serialize_candidate(const Candidate& c) {
  std::string out = "[";
  if (!c.analysis_tool.empty()) out += serialize_call(ToolCall{c.analysis_tool, std::nullopt, {}}) + ",";
  std::optional<int> region;
  if (!c.analysis_tool.empty()) region = c.region;
  out += serialize_call(ToolCall{c.editor, region, {}});
  return out + "]";
}

std::vector<std::string> tokenize_call(const std::string& text) {
  static const std::string punct = "{}[]:,\"";
  std::vector<std::string> out;
  std::string run;
  for (char ch : text) {
    if (punct.find(ch) != std::string::npos || ch == ' ') {
      if (!run.empty()) out.push_back(std::move(run));
      run.clear();
      if (ch != ' ') out.emplace_back(1, ch);
    } else {
      run += ch;
    }
  }
  if (!run.empty()) out.push_back(run);
  return out;
}

const Candidate* CandidateSet::find(const std::string& key) const {
  for (const auto& c : candidates)
    if (c.key == key) return &c;
  return nullptr;
}

namespace {

std::optional<std::string> focus_token(const SubTask& s) {
  if (verb_is_add(s.verb)) {
    if (s.relation && *s.relation != "none") return s.anchor;
    return std::nullopt;
  }
  return s.target;
}

}  // namespace

CandidateSet enumerate_candidates(const SceneDoc& doc, const SubTask& subtask, std::uint64_t seed, CandidateMode mode) {
  CandidateSet set;
  set.subtask_id = subtask.id;
  const auto focus = focus_token(subtask);
  const bool restricted = mode == CandidateMode::Restricted;
  for (const auto& tool : analysis_tool_ids()) {
    if (restricted && tool != tool_ids::kSegment && tool != tool_ids::kBBox) continue;
    auto proposals = run_analysis(doc, tool, subtask, seed);
    for (const auto& p : proposals) {
      if (restricted && tool == tool_ids::kSegment && static_cast<std::size_t>(p.index) > kRestrictedSegments) continue;
      if (restricted && tool == tool_ids::kBBox && p.index > kRestrictedBoxes) continue;
      Candidate c;
      c.key = tool + "#" + std::to_string(p.index);
      c.analysis_tool = tool;
      c.region = p.index;
      c.editor = std::string(tool_ids::kInpaint);
      c.region_kind = p.kind;
      c.area = mask_area_upper(p.mask);
      c.match = focus && std::find(p.description.begin(), p.description.end(), *focus) != p.description.end();
      set.candidates.push_back(std::move(c));
    }
    set.analysis[tool] = std::move(proposals);
  }
  for (const auto& g : global_editor_ids()) {
    Candidate c;
    c.key = g;
    c.editor = g;
    c.region_kind = "global";
    set.candidates.push_back(std::move(c));
  }
  return set;
}

ToolCall candidate_call(const Candidate& c, const SubTask& subtask) {
  ToolCall call;
  call.tool = c.editor;
  if (!c.analysis_tool.empty()) call.region_number = c.region;
  auto toks = subtask.tokens();
  toks.pop_back();  // trailing ";"
  call.instruction = toks;
  return call;
}

SceneDoc execute_candidate(const SceneDoc& doc, const CandidateSet& set, const Candidate& c, const SubTask& subtask,
                           std::uint64_t seed, const ProfileSet& profiles) {
  const std::vector<RegionProposal>* analysis = nullptr;
  if (!c.analysis_tool.empty()) {
    auto it = set.analysis.find(c.analysis_tool);
    if (it == set.analysis.end()) throw Error(ErrorCode::Composition, "no analysis result for " + c.analysis_tool);
    analysis = &it->second;
  }
  return execute_tool(doc, candidate_call(c, subtask), analysis, subtask, seed, profiles);
}

std::uint64_t execution_seed(std::uint64_t episode_seed, std::size_t index, const std::string& key, std::uint64_t attempt) {
  return derive_seed(episode_seed, static_cast<std::uint64_t>(index), fnv1a64(key), attempt);
}

std::uint64_t analysis_seed(std::uint64_t episode_seed, std::size_t index) {
  return derive_seed(episode_seed, static_cast<std::uint64_t>(index), fnv1a64("analysis"));
}

// --- reward table ---

double SubtaskRewards::best() const {
  double b = 0.0;
  for (const auto& r : records) b = std::max(b, r.reward);
  return b;
}

const SubtaskRewards* RewardTable::find(const std::string& instance_id, const std::string& subtask_id) const {
  for (const auto& e : entries)
    if (e.instance_id == instance_id && e.subtask.id == subtask_id) return &e;
  return nullptr;
}

BestRewards RewardTable::best_rewards() const {
  BestRewards out;
  for (const auto& e : entries) out[{e.instance_id, e.subtask.id}] = e.best();
  return out;
}

json RewardTable::to_json() const {
  json arr = json::array();
  for (const auto& e : entries) {
    json cands = json::array();
    for (std::size_t i = 0; i < e.candidates.size(); ++i) {
      json c = editorch::to_json(e.candidates[i]);
      c["record"] = editorch::to_json(e.records[i]);
      cands.push_back(c);
    }
    arr.push_back(json{{"instance", e.instance_id}, {"subtask", e.subtask.id}, {"tokens", e.subtask.tokens()},
                       {"candidates", cands}});
  }
  return json{{"schema", "rewards/1"}, {"entries", arr}};
}

RewardTable RewardTable::from_json(const json& j) {
  if (j.value("schema", "") != "rewards/1") throw Error(ErrorCode::Data, "expected schema rewards/1");
  RewardTable t;
  for (const auto& ej : j.at("entries")) {
    SubtaskRewards e;
    e.instance_id = ej.at("instance").get<std::string>();
    e.subtask = parse_subtask(ej.at("tokens").get<std::vector<std::string>>(), ej.at("subtask").get<std::string>());
    for (const auto& cj : ej.at("candidates")) {
      e.candidates.push_back(candidate_from_json(cj));
      e.records.push_back(reward_record_from_json(cj.at("record")));
    }
    t.entries.push_back(std::move(e));
  }
  return t;
}

namespace {

struct Job {
  std::size_t entry;
  std::size_t candidate;
};

struct Prepared {
  RewardTable table;
  std::vector<CandidateSet> sets;                 // per entry
  std::vector<const PrecomputeTask*> task_of;     // per entry
  std::vector<std::size_t> index_of;              // subtask index per entry
  std::vector<std::vector<Constraint>> goals;     // per entry
  std::vector<Job> jobs;
};

Prepared prepare(const std::vector<PrecomputeTask>& tasks, const PrecomputeOptions& opts) {
  Prepared p;
  for (const auto& task : tasks) {
    if (task.plan.subtasks.empty()) throw Error(ErrorCode::Data, "empty plan for " + task.instance_id);
    for (std::size_t t = 0; t < task.plan.subtasks.size(); ++t) {
      const SubTask& s = task.plan.subtasks[t];
      SubtaskRewards e;
      e.instance_id = task.instance_id;
      e.subtask = s;
      CandidateSet set = enumerate_candidates(task.doc, s, analysis_seed(task.episode_seed, t), opts.mode);
      e.candidates = set.candidates;
      e.records.resize(set.candidates.size());
      for (std::size_t c = 0; c < set.candidates.size(); ++c) p.jobs.push_back(Job{p.table.entries.size(), c});
      p.table.entries.push_back(std::move(e));
      p.sets.push_back(std::move(set));
      p.task_of.push_back(&task);
      p.index_of.push_back(t);
      p.goals.push_back(derive_constraints(task.doc, s));
    }
  }
  return p;
}

void run_job(Prepared& p, const Job& job, const ProfileSet& profiles, const PrecomputeOptions& opts) {
  auto& entry = p.table.entries[job.entry];
  const Candidate& c = entry.candidates[job.candidate];
  const PrecomputeTask& task = *p.task_of[job.entry];
  const auto& set = p.sets[job.entry];
  RewardRecord rec;
  try {
    const std::vector<RegionProposal>* analysis = c.analysis_tool.empty() ? nullptr : &set.analysis.at(c.analysis_tool);
    rec = reward_with_repeats(task.doc, entry.subtask, p.goals[job.entry], candidate_call(c, entry.subtask), analysis,
                              execution_seed(task.episode_seed, p.index_of[job.entry], c.key), opts.n_repeats, profiles,
                              opts.bands);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    rec = RewardRecord{};
    rec.error = true;
    rec.error_message = e.what();
    rec.reward = 0.0;
  }
  rec.subtask_id = entry.subtask.id;
  rec.candidate_key = c.key;
  entry.records[job.candidate] = std::move(rec);
}

}  // namespace

RewardTable precompute_rewards_serial(const std::vector<PrecomputeTask>& tasks, const ProfileSet& profiles,
                                      const PrecomputeOptions& opts) {
  if (opts.n_repeats < 1) throw Error(ErrorCode::Config, "n_repeats must be >= 1", "repeats");
  Prepared p = prepare(tasks, opts);
  for (const auto& job : p.jobs) run_job(p, job, profiles, opts);
  return std::move(p.table);
}

RewardTable precompute_rewards(const std::vector<PrecomputeTask>& tasks, const ProfileSet& profiles,
                               const PrecomputeOptions& opts) {
  if (opts.n_repeats < 1) throw Error(ErrorCode::Config, "n_repeats must be >= 1", "repeats");
  Prepared p = prepare(tasks, opts);
  const auto n = static_cast<long long>(p.jobs.size());
  std::vector<std::exception_ptr> failures(p.jobs.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < n; ++i) {
    try {
      run_job(p, p.jobs[static_cast<std::size_t>(i)], profiles, opts);
    } catch (...) {
      failures[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return std::move(p.table);
}

// --- features ---

namespace {

const std::vector<std::string>& action_tools() {
  static const std::vector<std::string> t = {std::string(tool_ids::kSegment), std::string(tool_ids::kOcr),
                                             std::string(tool_ids::kLayers),  std::string(tool_ids::kBBox),
                                             std::string(tool_ids::kGlobalA), std::string(tool_ids::kGlobalB)};
  return t;
}

const std::vector<std::string>& region_kinds() {
  static const std::vector<std::string> k = {"segment", "text", "layer", "bbox", "union", "global"};
  return k;
}

constexpr std::size_t kAreaBuckets = 4;
const std::array<const char*, kAreaBuckets> kAreaNames = {"empty", "lt5", "lt20", "ge20"};

std::size_t index_in(const std::vector<std::string>& v, const std::string& x) {
  auto it = std::find(v.begin(), v.end(), x);
  if (it == v.end()) throw Error(ErrorCode::Data, "unknown feature value " + x);
  return static_cast<std::size_t>(it - v.begin());
}

std::size_t verb_index(const std::string& verb) {
  auto verbs = vocab::verbs();
  for (std::size_t i = 0; i < verbs.size(); ++i)
    if (verbs[i] == verb) return i;
  throw Error(ErrorCode::Verb, "unknown verb " + verb);
}

std::size_t area_bucket(long long area) {
  const double f = static_cast<double>(area) / (static_cast<double>(kCanvasSize) * kCanvasSize);
  if (area <= 0) return 0;
  if (f < 0.05) return 1;
  if (f < 0.20) return 2;
  return 3;
}

struct Layout {
  std::size_t verbs, tools, kinds;
  std::size_t verb_tool, verb_match, tool_match, kind, verb_area, total;
};

const Layout& layout() {
  static const Layout l = [] {
    Layout x{};
    x.verbs = vocab::verbs().size();
    x.tools = action_tools().size();
    x.kinds = region_kinds().size();
    x.verb_tool = 0;
    x.verb_match = x.verb_tool + x.verbs * x.tools;
    x.tool_match = x.verb_match + x.verbs;
    x.kind = x.tool_match + x.tools;
    x.verb_area = x.kind + x.kinds;
    x.total = x.verb_area + x.verbs * kAreaBuckets;
    return x;
  }();
  return l;
}

}  // namespace

std::size_t feature_count() { return layout().total; }

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    const auto& L = layout();
    std::vector<std::string> n(L.total);
    auto verbs = vocab::verbs();
    for (std::size_t v = 0; v < L.verbs; ++v) {
      for (std::size_t t = 0; t < L.tools; ++t) n[L.verb_tool + v * L.tools + t] = std::string(verbs[v]) + "*" + action_tools()[t];
      n[L.verb_match + v] = std::string(verbs[v]) + "*match";
      for (std::size_t a = 0; a < kAreaBuckets; ++a)
        n[L.verb_area + v * kAreaBuckets + a] = std::string(verbs[v]) + "*area_" + kAreaNames[a];
    }
    for (std::size_t t = 0; t < L.tools; ++t) n[L.tool_match + t] = action_tools()[t] + "*match";
    for (std::size_t k = 0; k < L.kinds; ++k) n[L.kind + k] = "kind_" + region_kinds()[k];
    return n;
  }();
  return names;
}

std::vector<std::size_t> features(const std::string& verb, const Candidate& c) {
  const auto& L = layout();
  const std::size_t v = verb_index(verb);
  const std::size_t t = index_in(action_tools(), c.analysis_tool.empty() ? c.editor : c.analysis_tool);
  std::vector<std::size_t> f{L.verb_tool + v * L.tools + t};
  if (c.match) {
    f.push_back(L.verb_match + v);
    f.push_back(L.tool_match + t);
  }
  f.push_back(L.kind + index_in(region_kinds(), c.region_kind));
  if (c.region_kind != "global") f.push_back(L.verb_area + v * kAreaBuckets + area_bucket(c.area));
  return f;
}

// --- policy ---

OrchestratorPolicy OrchestratorPolicy::random(std::uint64_t seed) {
  OrchestratorPolicy p;
  p.kind = PolicyKind::Random;
  p.random_seed = seed;
  return p;
}

json OrchestratorPolicy::to_json() const {
  return json{{"schema", "policy/1"},
              {"kind", kind == PolicyKind::Learned ? "learned" : "random"},
              {"mode", mode == ScoringMode::Direct ? "direct" : "length_normalized"},
              {"temperature", temperature},
              {"features", feature_names()},
              {"weights", weights},
              {"random_seed", random_seed}};
}

OrchestratorPolicy OrchestratorPolicy::from_json(const json& j) {
  if (j.value("schema", "") != "policy/1") throw Error(ErrorCode::Data, "expected schema policy/1");
  OrchestratorPolicy p;
  const std::string kind = j.at("kind");
  if (kind != "learned" && kind != "random") throw Error(ErrorCode::Data, "unknown policy kind", "kind");
  p.kind = kind == "learned" ? PolicyKind::Learned : PolicyKind::Random;
  const std::string mode = j.at("mode");
  if (mode != "direct" && mode != "length_normalized") throw Error(ErrorCode::Data, "unknown scoring mode", "mode");
  p.mode = mode == "direct" ? ScoringMode::Direct : ScoringMode::LengthNormalized;
  p.temperature = j.at("temperature");
  if (j.at("features").get<std::vector<std::string>>() != feature_names())
    throw Error(ErrorCode::Data, "feature layout mismatch", "features");
  p.weights = j.at("weights").get<std::vector<double>>();
  p.random_seed = j.at("random_seed");
  for (double w : p.weights)
    if (!std::isfinite(w)) throw Error(ErrorCode::Data, "non-finite weight", "weights");
  return p;
}

double linear_score(const OrchestratorPolicy& p, const std::string& verb, const Candidate& c) {
  if (p.kind == PolicyKind::Random) {
    Rng rng(derive_seed(p.random_seed, fnv1a64(verb), fnv1a64(c.key), static_cast<std::uint64_t>(c.match)));
    return 4.0 * rng.uniform();
  }
  double s = 0.0;
  for (std::size_t f : features(verb, c)) s += p.weights[f];
  return s / p.temperature;
}

std::vector<double> candidate_probabilities(const OrchestratorPolicy& p, const std::string& verb,
                                            const std::vector<Candidate>& cands) {
  std::vector<double> z(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) z[i] = linear_score(p, verb, cands[i]);
  if (z.empty()) return z;
  const double m = *std::max_element(z.begin(), z.end());
  double norm = 0.0;
  for (auto& v : z) norm += (v = std::exp(v - m));
  for (auto& v : z) v /= norm;
  return z;
}

std::vector<double> token_log_probs(const std::vector<double>& probs, const std::vector<Candidate>& cands,
                                    std::size_t index) {
  std::vector<std::vector<std::string>> seqs;
  for (const auto& c : cands) seqs.push_back(tokenize_call(serialize_candidate(c)));
  const auto& mine = seqs[index];
  std::vector<bool> alive(cands.size(), true);
  double mass = 1.0;
  std::vector<double> out;
  for (std::size_t i = 0; i < mine.size(); ++i) {
    double next = 0.0;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      if (alive[c] && (seqs[c].size() <= i || seqs[c][i] != mine[i])) alive[c] = false;
      if (alive[c]) next += probs[c];
    }
    out.push_back(std::log(next / mass));
    mass = next;
  }
  return out;
}

double length_normalized_score(const std::vector<double>& lp) {
  if (lp.empty()) throw Error(ErrorCode::Data, "empty token sequence");
  return std::accumulate(lp.begin(), lp.end(), 0.0) / static_cast<double>(lp.size());
}

std::vector<double> policy_scores(const OrchestratorPolicy& p, const SubTask& subtask, const CandidateSet& set) {
  const auto probs = candidate_probabilities(p, subtask.verb, set.candidates);
  std::vector<double> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i)
    out[i] = p.mode == ScoringMode::Direct ? std::log(probs[i])
                                           : length_normalized_score(token_log_probs(probs, set.candidates, i));
  return out;
}

double policy_score(const OrchestratorPolicy& p, const SubTask& subtask, const CandidateSet& set, const Candidate& c) {
  for (std::size_t i = 0; i < set.candidates.size(); ++i) {
    if (!(set.candidates[i] == c)) continue;
    const auto probs = candidate_probabilities(p, subtask.verb, set.candidates);
    return p.mode == ScoringMode::Direct ? std::log(probs[i])
                                         : length_normalized_score(token_log_probs(probs, set.candidates, i));
  }
  throw Error(ErrorCode::Membership, "candidate " + c.key + " is not in the candidate set");
}

std::vector<std::size_t> topk(const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

// --- training ---

std::vector<TrainingExample> build_training_set(const RewardTable& table, double tau) {
  std::vector<TrainingExample> out;
  for (const auto& e : table.entries) {
    const double best = e.best();
    if (e.records.empty() || best < tau) continue;
    TrainingExample ex{e.subtask.verb, e.candidates, std::vector<double>(e.candidates.size(), 0.0)};
    std::size_t ties = 0;
    for (const auto& r : e.records)
      if (r.reward >= best - kTieEpsilon) ++ties;
    for (std::size_t i = 0; i < e.records.size(); ++i)
      if (e.records[i].reward >= best - kTieEpsilon) ex.target[i] = 1.0 / static_cast<double>(ties);
    out.push_back(std::move(ex));
  }
  return out;
}

double orchestrator_loss(const OrchestratorPolicy& p, const std::vector<TrainingExample>& data, double l2) {
  double loss = 0.0;
  for (const auto& ex : data) {
    const auto probs = candidate_probabilities(p, ex.verb, ex.candidates);
    for (std::size_t i = 0; i < probs.size(); ++i)
      if (ex.target[i] > 0.0) loss -= ex.target[i] * std::log(probs[i]);
  }
  loss /= static_cast<double>(std::max<std::size_t>(1, data.size()));
  double norm = 0.0;
  for (double w : p.weights) norm += w * w;
  return loss + 0.5 * l2 * norm;
}

std::vector<double> orchestrator_gradient(const OrchestratorPolicy& p, const std::vector<TrainingExample>& data,
                                          double l2) {
  std::vector<double> g(p.weights.size(), 0.0);
  for (const auto& ex : data) {
    const auto probs = candidate_probabilities(p, ex.verb, ex.candidates);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const double d = (probs[i] - ex.target[i]) / p.temperature;
      if (d == 0.0) continue;
      for (std::size_t f : features(ex.verb, ex.candidates[i])) g[f] += d;
    }
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, data.size()));
  for (std::size_t f = 0; f < g.size(); ++f) g[f] = g[f] / n + l2 * p.weights[f];
  return g;
}

OrchestratorPolicy train_orchestrator(const std::vector<TrainingExample>& data, const OrchestratorTrainConfig& cfg,
                                      std::vector<double>* losses) {
  if (data.empty()) throw Error(ErrorCode::Data, "empty orchestrator training set");
  OrchestratorPolicy p;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (losses) losses->push_back(orchestrator_loss(p, data, cfg.l2));
    const auto g = orchestrator_gradient(p, data, cfg.l2);
    for (std::size_t f = 0; f < g.size(); ++f) p.weights[f] -= cfg.step * g[f];
  }
  if (losses) losses->push_back(orchestrator_loss(p, data, cfg.l2));
  return p;
}

double mean_target_log_prob(const OrchestratorPolicy& p, const std::vector<TrainingExample>& data) {
  double total = 0.0;
  for (const auto& ex : data) {
    const auto probs = candidate_probabilities(p, ex.verb, ex.candidates);
    for (std::size_t i = 0; i < probs.size(); ++i)
      if (ex.target[i] > 0.0) total += ex.target[i] * std::log(probs[i]);
  }
  return total / static_cast<double>(std::max<std::size_t>(1, data.size()));
}

}  // namespace editorch
