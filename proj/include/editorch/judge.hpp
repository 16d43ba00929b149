#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "editorch/scene.hpp"
#include "editorch/subtask.hpp"
#include "editorch/tools.hpp"

namespace editorch {

struct RewardTriple {
  int ie = 0, ip = 0, vq = 0;
  friend bool operator==(const RewardTriple&, const RewardTriple&) = default;
};

// Fraction -> score: 0 when nothing holds, otherwise 1 + number of cut points
// at or below the fraction (so a fraction >= the last cut scores 5).
struct BandConfig {
  std::array<double, 4> cuts = {0.2, 0.5, 0.8, 0.99};
  friend bool operator==(const BandConfig&, const BandConfig&) = default;
};

int band(double fraction, const BandConfig& cfg = {});

// Scores `after` against `goal`. IP counts elements of `before` outside the
// subjects the goal edits.
RewardTriple score_edit(const SceneDoc& before, const SceneDoc& after, const std::vector<Constraint>& goal,
                        const BandConfig& bands = {});

double aggregate(const RewardTriple& t);

inline constexpr int kScoreLevels = 6;

struct ScoreDistribution {
  std::array<std::array<double, kScoreLevels>, 3> logits{};  // IE, IP, VQ
};

std::array<double, 3> expected_scores(const ScoreDistribution& d);
double expected_reward(const ScoreDistribution& d);  // geometric mean of expected scores

struct RewardRecord {
  std::string subtask_id;
  std::string candidate_key;
  std::vector<RewardTriple> samples;
  double reward = 0.0;
  bool error = false;
  std::string error_message;

  friend bool operator==(const RewardRecord&, const RewardRecord&) = default;
};

json to_json(const RewardRecord& r);
RewardRecord reward_record_from_json(const json& j);

// Executes `call` n_repeats times with seeds derive_seed(seed, i) and scores
// each result against `goal`.
RewardRecord reward_with_repeats(const SceneDoc& before, const SubTask& subtask, const std::vector<Constraint>& goal,
                                 const ToolCall& call, const std::vector<RegionProposal>* analysis, std::uint64_t seed,
                                 int n_repeats, const ProfileSet& profiles, const BandConfig& bands = {});

struct VerifierConfig {
  double temperature = 0.0;
  double sharpness = 4.0;    // logit slope per score level
  double noise_scale = 0.25; // spread of the perturbed score centre at temperature 1
  BandConfig bands;
};

// Noisy view of the rubric judge for one subtask. Temperature 0 is exact.
ScoreDistribution verifier_distribution(const SceneDoc& before, const SceneDoc& after, const SubTask& subtask,
                                        const VerifierConfig& cfg, std::uint64_t seed);
double verifier_score(const SceneDoc& before, const SceneDoc& after, const SubTask& subtask, const VerifierConfig& cfg,
                      std::uint64_t seed);

}  // namespace editorch
