#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "editorch/generator.hpp"
#include "editorch/search.hpp"

namespace editorch {

// t1: a single subtask; disjoint: attribute-only edits on distinct
// elements; index_shift: the first step removes the largest element, so a
// segment index stored for the second step points elsewhere at rollout.
struct OracleCase {
  std::string instance_id;
  std::string kind;  // t1 | disjoint | index_shift
  SceneDoc doc;
  Plan plan;
  std::vector<Constraint> goal;  // union of the subtasks' derived constraints
  std::uint64_t seed = 0;
};

std::vector<OracleCase> build_oracle_cases(const std::vector<Instance>& instances, std::uint64_t seed);

struct OracleCaseResult {
  std::string instance_id;
  std::string kind;
  std::size_t steps = 0;
  std::vector<std::string> table_keys;  // per-subtask reward-table argmax
  double table_best_sum = 0.0;          // sum over subtasks of the table max
  double rollout_reward = 0.0;          // end-to-end reward of the table keys
  double oracle_reward = 0.0;
  std::vector<std::string> oracle_keys;
  double gap = 0.0;                     // oracle_reward - rollout_reward
  bool exact = false;                   // t1: table max == oracle; else rollout == oracle
};

struct OracleSummary {
  std::size_t count = 0, exact = 0, positive_gap = 0;
  double mean_gap = 0.0;
};

struct OracleReport {
  std::vector<OracleCaseResult> cases;
  OracleSummary t1, disjoint, index_shift, all;

  json to_json() const;
};

OracleReport run_oracle_check(const std::vector<OracleCase>& cases, const ProfileSet& profiles, int n_repeats = 2);

}  // namespace editorch
