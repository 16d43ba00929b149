#include "editorch/judge.hpp"

#include <algorithm>
#include <cmath>

namespace editorch {

int band(double fraction, const BandConfig& cfg) {
  if (fraction <= 0.0) return 0;
  int b = 1;
  for (double c : cfg.cuts)
    if (fraction >= c) ++b;
  return b;
}

RewardTriple score_edit(const SceneDoc& before, const SceneDoc& after, const std::vector<Constraint>& goal,
                        const BandConfig& bands) {
  RewardTriple t;
  t.ie = band(constraint_satisfaction(after, goal), bands);
  t.ip = band(diff_untouched(before, after, edited_subjects(before, goal)), bands);
  t.vq = 5 - static_cast<int>(std::min<std::size_t>(5, after.defects.size()));
  return t;
}

double aggregate(const RewardTriple& t) {
  const double p = static_cast<double>(t.ie) * t.ip * t.vq;
  return p <= 0.0 ? 0.0 : std::cbrt(p);
}

std::array<double, 3> expected_scores(const ScoreDistribution& d) {
  std::array<double, 3> out{};
  for (std::size_t c = 0; c < 3; ++c) {
    const auto& z = d.logits[c];
    const double m = *std::max_element(z.begin(), z.end());
    double norm = 0.0, acc = 0.0;
    for (int k = 0; k < kScoreLevels; ++k) {
      const double w = std::exp(z[static_cast<std::size_t>(k)] - m);
      norm += w;
      acc += k * w;
    }
    out[c] = acc / norm;
  }
  return out;
}

double expected_reward(const ScoreDistribution& d) {
  auto s = expected_scores(d);
  const double p = s[0] * s[1] * s[2];
  return p <= 0.0 ? 0.0 : std::cbrt(p);
}

json to_json(const RewardRecord& r) {
  json samples = json::array();
  for (const auto& s : r.samples) samples.push_back(json::array({s.ie, s.ip, s.vq}));
  json j{{"subtask", r.subtask_id}, {"candidate", r.candidate_key}, {"samples", samples}, {"reward", r.reward},
         {"error", r.error}};
  if (r.error) j["message"] = r.error_message;
  return j;
}

RewardRecord reward_record_from_json(const json& j) {
  RewardRecord r;
  r.subtask_id = j.at("subtask").get<std::string>();
  r.candidate_key = j.at("candidate").get<std::string>();
  for (const auto& s : j.at("samples")) r.samples.push_back(RewardTriple{s.at(0), s.at(1), s.at(2)});
  r.reward = j.at("reward").get<double>();
  r.error = j.at("error").get<bool>();
  r.error_message = j.value("message", "");
  return r;
}

RewardRecord reward_with_repeats(const SceneDoc& before, const SubTask& subtask, const std::vector<Constraint>& goal,
                                 const ToolCall& call, const std::vector<RegionProposal>* analysis, std::uint64_t seed,
                                 int n_repeats, const ProfileSet& profiles, const BandConfig& bands) {
  if (n_repeats < 1) throw Error(ErrorCode::Config, "n_repeats must be >= 1", "repeats");
  RewardRecord rec;
  rec.subtask_id = subtask.id;
  double sum = 0.0;
  for (int i = 0; i < n_repeats; ++i) {
    SceneDoc after = execute_tool(before, call, analysis, subtask, derive_seed(seed, static_cast<std::uint64_t>(i)), profiles);
    rec.samples.push_back(score_edit(before, after, goal, bands));
    sum += aggregate(rec.samples.back());
  }
  rec.reward = sum / n_repeats;
  return rec;
}

ScoreDistribution verifier_distribution(const SceneDoc& before, const SceneDoc& after, const SubTask& subtask,
                                        const VerifierConfig& cfg, std::uint64_t seed) {
  const RewardTriple exact = score_edit(before, after, derive_constraints(before, subtask), cfg.bands);
  const std::array<int, 3> s = {exact.ie, exact.ip, exact.vq};
  ScoreDistribution d;
  Rng rng(seed);
  for (std::size_t c = 0; c < 3; ++c) {
    double centre = s[c];
    if (cfg.temperature > 0.0) centre = std::clamp(centre + cfg.temperature * cfg.noise_scale * rng.logistic(), 0.0, 5.0);
    for (int k = 0; k < kScoreLevels; ++k) {
      // At temperature 0 the distribution collapses onto the exact score.
      d.logits[c][static_cast<std::size_t>(k)] =
          cfg.temperature > 0.0 ? -cfg.sharpness * std::abs(k - centre) : (k == s[c] ? 0.0 : -1e9);
    }
  }
  return d;
}

double verifier_score(const SceneDoc& before, const SceneDoc& after, const SubTask& subtask, const VerifierConfig& cfg,
                      std::uint64_t seed) {
  if (cfg.temperature <= 0.0) return aggregate(score_edit(before, after, derive_constraints(before, subtask), cfg.bands));
  return expected_reward(verifier_distribution(before, after, subtask, cfg, seed));
}

}  // namespace editorch
