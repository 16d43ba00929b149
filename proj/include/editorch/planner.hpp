#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "editorch/generator.hpp"
#include "editorch/subtask.hpp"
#include "editorch/vocab.hpp"

namespace editorch {

// One training sequence: instruction features plus the plan tokens
// (subtasks followed by <eop>).
struct PlanExample {
  std::string category;
  std::vector<std::string> tokens;
};

PlanExample make_example(const Instruction& instr, const Plan& plan);

// p(next | category, prev2, prev1) = softmax(logits) over the whole plan
// vocabulary. Contexts without logits are uniform.
class PlannerModel {
 public:
  static constexpr double kDefaultAlpha = 0.1;

  explicit PlannerModel(double alpha = kDefaultAlpha) : alpha_(alpha) {}

  static std::string context_key(const std::string& category, const std::string& prev2, const std::string& prev1);

  double alpha() const { return alpha_; }
  std::vector<double> distribution(const std::string& key) const;
  double log_prob(const std::string& key, TokenId next) const;

  const std::map<std::string, std::vector<double>>& logits() const { return logits_; }
  std::map<std::string, std::vector<double>>& logits() { return logits_; }

  json to_json() const;  // "schema": "planner/1"
  static PlannerModel from_json(const json& j);
  friend bool operator==(const PlannerModel&, const PlannerModel&) = default;

 private:
  double alpha_;
  std::map<std::string, std::vector<double>> logits_;
};

// Next-token counts per context key.
using TokenCounts = std::map<std::string, std::vector<double>>;
TokenCounts count_tokens(const std::vector<PlanExample>& corpus);

// Smoothed training objective -sum (n + alpha) log p, and its gradient with
// respect to the logits of every counted context.
double planner_objective(const PlannerModel& model, const TokenCounts& counts);
TokenCounts planner_gradient(const PlannerModel& model, const TokenCounts& counts);

// -sum log p over all corpus tokens.
double corpus_nll(const PlannerModel& model, const std::vector<PlanExample>& corpus);
std::size_t corpus_tokens(const std::vector<PlanExample>& corpus);
double perplexity(const PlannerModel& model, const std::vector<PlanExample>& corpus);

struct PlannerTrainConfig {
  int epochs = 30;
  double step = 0.5;
};

struct PlannerTrainReport {
  std::vector<double> objective;  // per epoch, after the update
  std::vector<double> nll;
};

// Each epoch moves every counted context along the mirror-descent path
// theta <- (1 - step) theta + step log q, with q the smoothed empirical
// distribution. Starts from `init` when given (fine-tuning).
PlannerModel train_planner(const std::vector<PlanExample>& corpus, const PlannerTrainConfig& cfg,
                           PlannerTrainReport* report = nullptr, const PlannerModel* init = nullptr);

// Tokens a decoder may emit at the current position.
struct DecodeContext {
  std::string category;
  std::vector<std::string> doc_labels, doc_words;  // element names present in the scene
  std::vector<std::string> params;

  static DecodeContext from(const SceneDoc& doc, const Instruction& instr);
};

std::vector<TokenId> allowed_tokens(const DecodeContext& ctx, const std::vector<std::string>& step_prefix,
                                    std::size_t completed_steps);

// Free sampling with grammar masking.
Plan generate_plan(const PlannerModel& model, const SceneDoc& doc, const Instruction& instr, std::uint64_t seed);

// log probability of `plan` under the same masked decoder.
double masked_plan_log_prob(const PlannerModel& model, const SceneDoc& doc, const Instruction& instr, const Plan& plan);

bool subtask_covers(const SceneDoc& doc, const SubTask& s, const ChecklistItem& item);

// For each checklist item, indices of the subtasks covering it. Preserve
// items are covered by every subtask when no subtask touches the preserved
// element, otherwise by none.
std::vector<std::vector<std::size_t>> coverage_map(const SceneDoc& doc, const Plan& plan, const Checklist& checklist);

inline constexpr int kCoverageRetries = 64;

struct ChecklistPlan {
  Plan plan;
  std::vector<std::vector<std::size_t>> coverage;
  int attempts = 0;
};

// Samples until every checklist item is covered. Throws Coverage error when
// the retry budget runs out.
ChecklistPlan generate_plan_checklist(const PlannerModel& model, const SceneDoc& doc, const Instruction& instr,
                                      const Checklist& checklist, std::uint64_t seed);

struct RefinementConfig {
  double tau = 3.0;
  std::size_t min_subtasks = 1;
};

struct RefinementResult {
  std::vector<Plan> plans;
  double pre_mean = 0.0;   // mean per-subtask max reward before filtering
  double post_mean = 0.0;
  std::size_t pre_subtasks = 0, post_subtasks = 0, dropped_plans = 0;
};

// best: (instruction id, subtask id) -> max reward over candidates.
using BestRewards = std::map<std::pair<std::string, std::string>, double>;

RefinementResult refine_plans(const std::vector<Plan>& plans, const BestRewards& best, const RefinementConfig& cfg);

json to_json(const RefinementResult& r);

}  // namespace editorch
