#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "editorch/judge.hpp"
#include "editorch/orchestrator.hpp"

namespace editorch {

struct SearchConfig {
  std::size_t k = 5;
  VerifierConfig verifier;
  bool polish = true;
  int polish_max = 5;
  std::uint64_t episode_seed = 0;
  CandidateMode mode = CandidateMode::Full;
};

struct StepRecord {
  std::size_t index = 0;
  SubTask subtask;
  std::string input_digest, output_digest;
  std::vector<std::string> candidates;
  std::vector<double> scores;          // policy score per candidate
  std::vector<std::size_t> top;        // indices into candidates
  std::vector<double> verifier;        // per top entry; 0 for failed executions
  std::vector<std::string> errors;     // per top entry; empty when it ran
  std::optional<std::size_t> chosen;   // index into candidates; none when skipped
};

struct TrajectoryTrace {
  std::string instance_id;
  std::vector<StepRecord> steps;
  bool polished = false;
  std::string final_digest;
  RewardTriple final_triple;
  double final_reward = 0.0;
  double final_satisfaction = 0.0;
  // Same, against the checklist derived from the executed plan.
  RewardTriple plan_triple;
  double plan_reward = 0.0;
  double plan_satisfaction = 0.0;

  json to_json() const;  // "schema": "trace/1"
};

// Union of the subtasks' constraints resolved against the initial doc,
// duplicates dropped.
std::vector<Constraint> plan_checklist(const SceneDoc& doc, const Plan& plan);

struct EpisodeResult {
  SceneDoc doc;
  TrajectoryTrace trace;
};

// Algorithm 1: per subtask, enumerate candidates on the current state, keep
// the policy's top K, execute them, commit the verifier's argmax.
EpisodeResult run_episode(const std::string& instance_id, const SceneDoc& doc, const Instruction& instr, const Plan& plan,
                          const OrchestratorPolicy& policy, const ProfileSet& profiles, const SearchConfig& cfg);

// Recomputes every digest in the chain; false on any break.
bool verify_trace(const TrajectoryTrace& trace, const SceneDoc& initial);

// Removes up to `max_removals` defects, skipping defects bound to elements a
// satisfied goal constraint references. Elements are never modified.
SceneDoc polish(const SceneDoc& doc, const std::vector<Constraint>& goal, int max_removals);

struct OracleLimits {
  std::size_t max_steps = 3;
  std::size_t max_candidates = 8;
};

struct OracleResult {
  std::vector<std::string> best_keys;
  double best_reward = 0.0;
  RewardTriple best_triple;
  std::size_t evaluated = 0;
};

// Exhaustive search over restricted candidate sequences with deterministic
// profiles, scored end-to-end against `goal`. Throws Size error past limits.
OracleResult brute_force_oracle(const SceneDoc& doc, const std::vector<Constraint>& goal, const Plan& plan,
                                const ProfileSet& profiles, std::uint64_t episode_seed, const OracleLimits& limits = {});

// Executes a fixed key per subtask on the evolving state; a key that is not
// in the current candidate set, or that fails, leaves the state unchanged.
SceneDoc rollout_keys(const SceneDoc& doc, const Plan& plan, const std::vector<std::string>& keys,
                      const ProfileSet& profiles, std::uint64_t episode_seed, CandidateMode mode);

}  // namespace editorch
