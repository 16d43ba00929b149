#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "editorch/judge.hpp"
#include "editorch/planner.hpp"
#include "editorch/tools.hpp"

namespace editorch {

// One legal action: an analysis tool's region fed to the region editor, or
// a global editor on its own.
struct Candidate {
  std::string key;            // "<analysis tool>#<region>" or "<global editor>"
  std::string analysis_tool;  // empty for global editors
  int region = 0;
  std::string editor;
  std::string region_kind;  // segment|text|layer|bbox|union|global
  long long area = 0;       // mask area, 0 for global editors
  bool match = false;       // region description names the subtask's target or anchor

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

json to_json(const Candidate& c);
Candidate candidate_from_json(const json& j);

// Serialized call sequence: analysis call then editor call, or the single
// global call, as a JSON array.
std::string serialize_candidate(const Candidate& c);
// Splits on JSON punctuation; runs of other characters form one token.
std::vector<std::string> tokenize_call(const std::string& text);

enum class CandidateMode { Full, Restricted };

inline constexpr std::size_t kRestrictedSegments = 4;
inline constexpr int kRestrictedBoxes = 2;

struct CandidateSet {
  std::string subtask_id;
  std::vector<Candidate> candidates;
  std::map<std::string, std::vector<RegionProposal>> analysis;

  const Candidate* find(const std::string& key) const;
};

// Runs every analysis tool once on `doc`; `seed` drives the bbox proposer.
CandidateSet enumerate_candidates(const SceneDoc& doc, const SubTask& subtask, std::uint64_t seed,
                                  CandidateMode mode = CandidateMode::Full);

ToolCall candidate_call(const Candidate& c, const SubTask& subtask);

SceneDoc execute_candidate(const SceneDoc& doc, const CandidateSet& set, const Candidate& c, const SubTask& subtask,
                           std::uint64_t seed, const ProfileSet& profiles);

// Seed for executing candidate `key` for subtask `index` within an episode.
std::uint64_t execution_seed(std::uint64_t episode_seed, std::size_t index, const std::string& key,
                             std::uint64_t attempt = 0);
std::uint64_t analysis_seed(std::uint64_t episode_seed, std::size_t index);

// --- reward table ---

struct SubtaskRewards {
  std::string instance_id;
  SubTask subtask;
  std::vector<Candidate> candidates;
  std::vector<RewardRecord> records;  // parallel to candidates

  double best() const;
};

struct RewardTable {
  std::vector<SubtaskRewards> entries;

  const SubtaskRewards* find(const std::string& instance_id, const std::string& subtask_id) const;
  BestRewards best_rewards() const;
  json to_json() const;  // "schema": "rewards/1"
  static RewardTable from_json(const json& j);
  friend bool operator==(const RewardTable&, const RewardTable&) = default;
};

inline bool operator==(const SubtaskRewards& a, const SubtaskRewards& b) {
  return a.instance_id == b.instance_id && a.subtask == b.subtask && a.candidates == b.candidates && a.records == b.records;
}

struct PrecomputeTask {
  std::string instance_id;
  SceneDoc doc;
  Plan plan;
  std::uint64_t episode_seed = 0;
};

struct PrecomputeOptions {
  int n_repeats = 2;
  CandidateMode mode = CandidateMode::Full;
  BandConfig bands;
};

// Every candidate of every subtask is executed on the task's original doc
// and scored against that subtask's constraints. Tool errors become R = 0
// entries with the error flag set.
RewardTable precompute_rewards_serial(const std::vector<PrecomputeTask>& tasks, const ProfileSet& profiles,
                                      const PrecomputeOptions& opts = {});
// Same table, candidates evaluated in parallel.
RewardTable precompute_rewards(const std::vector<PrecomputeTask>& tasks, const ProfileSet& profiles,
                               const PrecomputeOptions& opts = {});

// --- policy ---

std::size_t feature_count();
const std::vector<std::string>& feature_names();
// Active feature indices (binary features).
std::vector<std::size_t> features(const std::string& verb, const Candidate& c);

enum class ScoringMode { Direct, LengthNormalized };
enum class PolicyKind { Learned, Random };

struct OrchestratorPolicy {
  PolicyKind kind = PolicyKind::Learned;
  ScoringMode mode = ScoringMode::Direct;
  double temperature = 1.0;
  std::vector<double> weights = std::vector<double>(feature_count(), 0.0);
  std::uint64_t random_seed = 0;

  static OrchestratorPolicy random(std::uint64_t seed);

  json to_json() const;  // "schema": "policy/1"
  static OrchestratorPolicy from_json(const json& j);
  friend bool operator==(const OrchestratorPolicy&, const OrchestratorPolicy&) = default;
};

double linear_score(const OrchestratorPolicy& p, const std::string& verb, const Candidate& c);
std::vector<double> candidate_probabilities(const OrchestratorPolicy& p, const std::string& verb,
                                            const std::vector<Candidate>& cands);

// Per-token log probabilities of candidate `index`'s serialized call when
// the candidate-set distribution is factored over a token trie.
std::vector<double> token_log_probs(const std::vector<double>& probs, const std::vector<Candidate>& cands,
                                    std::size_t index);
double length_normalized_score(const std::vector<double>& token_log_probs);

// Throws Membership error when `c` is not in `set`.
double policy_score(const OrchestratorPolicy& p, const SubTask& subtask, const CandidateSet& set, const Candidate& c);
std::vector<double> policy_scores(const OrchestratorPolicy& p, const SubTask& subtask, const CandidateSet& set);

// Indices of the min(K, n) highest scores, ties by lower index.
std::vector<std::size_t> topk(const std::vector<double>& scores, std::size_t k);

inline constexpr double kTieEpsilon = 1e-6;

struct TrainingExample {
  std::string verb;
  std::vector<Candidate> candidates;
  std::vector<double> target;  // mass per candidate, sums to 1
};

std::vector<TrainingExample> build_training_set(const RewardTable& table, double tau);

struct OrchestratorTrainConfig {
  int epochs = 200;
  double step = 0.25;
  double l2 = 1e-4;
};

double orchestrator_loss(const OrchestratorPolicy& p, const std::vector<TrainingExample>& data, double l2);
std::vector<double> orchestrator_gradient(const OrchestratorPolicy& p, const std::vector<TrainingExample>& data,
                                          double l2);

// Full-batch gradient descent on mean cross-entropy; `losses` gets the loss
// before each epoch's update and once after the last.
OrchestratorPolicy train_orchestrator(const std::vector<TrainingExample>& data, const OrchestratorTrainConfig& cfg,
                                      std::vector<double>* losses = nullptr);

// Mean log-probability the policy assigns to target mass.
double mean_target_log_prob(const OrchestratorPolicy& p, const std::vector<TrainingExample>& data);

}  // namespace editorch
