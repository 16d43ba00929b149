#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "editorch/corpora.hpp"
#include "editorch/orchestrator.hpp"
#include "fixtures.hpp"

using namespace editorch;
using namespace editorch::fixtures;

namespace {

SubTask step(std::vector<std::string> tokens, std::string id = "s1") {
  tokens.push_back(";");
  return parse_subtask(tokens, std::move(id));
}

SceneDoc four_element_scene() {
  return scene({object("e1", "burger", "red", {100, 100, 400, 400}), object("e2", "lamp", "blue", {600, 100, 800, 300}),
                object("e3", "cup", "green", {600, 600, 700, 700}, 2), text("e4", "sale", {100, 800, 400, 900})});
}

std::vector<PrecomputeTask> tasks(std::size_t n, std::uint64_t base) {
  std::vector<PrecomputeTask> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Instance inst = generate_instance(base + i, Difficulty::Small);
    Rng rng(i);
    out.push_back(PrecomputeTask{inst.id, inst.doc, template_plan(inst, rng), derive_seed(base, i)});
  }
  return out;
}

SubtaskRewards entry_with(const std::vector<double>& rewards) {
  const SceneDoc d = four_element_scene();
  const SubTask s = step({"remove_object", "cup"});
  SubtaskRewards e{"i1", s, enumerate_candidates(d, s, 1).candidates, {}};
  e.candidates.resize(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    RewardRecord r;
    r.subtask_id = s.id;
    r.candidate_key = e.candidates[i].key;
    r.reward = rewards[i];
    e.records.push_back(r);
  }
  return e;
}

}  // namespace

TEST(Candidates, CountsForFixtureScenes) {
  const SubTask s = step({"remove_object", "cup"});
  const CandidateSet set = enumerate_candidates(four_element_scene(), s, 1);
  // 4 segments + 1 text + 4 layers + 4 boxes + 2 global editors
  EXPECT_EQ(set.candidates.size(), 15u);
  EXPECT_EQ(set.analysis.size(), 4u);
  std::set<std::string> keys;
  for (const auto& c : set.candidates) keys.insert(c.key);
  EXPECT_EQ(keys.size(), 15u);
  EXPECT_EQ(set.candidates.back().key, "flux_kontext_edit");
  EXPECT_NE(set.find("sam2_segment#4"), nullptr);
  EXPECT_TRUE(set.find("sam2_segment#4")->match);  // smallest is the cup
  EXPECT_FALSE(set.find("sam2_segment#1")->match);

  const CandidateSet empty = enumerate_candidates(scene({}), step({"add_object", "cake", "none"}), 1);
  EXPECT_EQ(empty.candidates.size(), 10u);
}

TEST(Candidates, RestrictedModeIsSmall) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Instance inst = generate_instance(seed, Difficulty::Medium);
    for (const auto& s : canonical_subtasks(inst.doc, inst.instruction.goal)) {
      const CandidateSet set = enumerate_candidates(inst.doc, s, seed, CandidateMode::Restricted);
      EXPECT_LE(set.candidates.size(), 8u);
      EXPECT_GE(set.candidates.size(), 4u);
    }
  }
}

TEST(Candidates, SerializedCallsTokenize) {
  const SubTask s = step({"remove_object", "cup"});
  const CandidateSet set = enumerate_candidates(four_element_scene(), s, 1);
  const Candidate& c = *set.find("sam2_segment#2");
  EXPECT_EQ(serialize_candidate(c),
            R"([{"tool":"sam2_segment","arguments":{}},{"tool":"flux_inpaint","arguments":{"region_number":2}}])");
  const auto toks = tokenize_call(serialize_candidate(*set.find("qwen_image_edit")));
  EXPECT_EQ(toks, (std::vector<std::string>{"[", "{", "\"", "tool", "\"", ":", "\"", "qwen_image_edit", "\"", ",", "\"",
                                            "arguments", "\"", ":", "{", "}", "}", "]"}));
  EXPECT_EQ(candidate_from_json(to_json(c)), c);
}

TEST(Features, LayoutAndActivation) {
  EXPECT_EQ(feature_count(), 122u);
  EXPECT_EQ(feature_names().size(), 122u);
  std::set<std::string> names(feature_names().begin(), feature_names().end());
  EXPECT_EQ(names.size(), 122u);
  const CandidateSet set = enumerate_candidates(four_element_scene(), step({"remove_object", "cup"}), 1);
  for (const auto& c : set.candidates) {
    const auto f = features("remove_object", c);
    EXPECT_EQ(f.size(), (c.region_kind == "global" ? 2u : 3u) + (c.match ? 2u : 0u));
    for (auto i : f) EXPECT_LT(i, feature_count());
  }
  EXPECT_THROW(features("teleport", set.candidates[0]), Error);
}

TEST(Policy, ZeroWeightsAreUniform) {
  const SubTask s = step({"remove_object", "cup"});
  const CandidateSet set = enumerate_candidates(four_element_scene(), s, 1);
  const OrchestratorPolicy p;
  for (double v : policy_scores(p, s, set)) EXPECT_NEAR(v, std::log(1.0 / 15.0), 1e-12);
  EXPECT_NEAR(policy_score(p, s, set, set.candidates[4]), std::log(1.0 / 15.0), 1e-12);
}

TEST(Policy, SoftmaxShiftInvariance) {
  const SubTask s = step({"recolor_object", "lamp", "gold"});
  const CandidateSet set = enumerate_candidates(four_element_scene(), s, 2);
  OrchestratorPolicy p;
  Rng rng(4);
  for (auto& w : p.weights) w = rng.uniform() - 0.5;
  const auto before = candidate_probabilities(p, s.verb, set.candidates);
  // every candidate activates exactly one kind feature
  for (std::size_t i = 0; i < feature_count(); ++i)
    if (feature_names()[i].rfind("kind_", 0) == 0) p.weights[i] += 3.0;
  const auto after = candidate_probabilities(p, s.verb, set.candidates);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(before[i], after[i], 1e-12);
  EXPECT_NEAR(std::accumulate(after.begin(), after.end(), 0.0), 1.0, 1e-12);
}

TEST(Policy, LengthNormalizedScoreTelescopes) {
  const SubTask s = step({"remove_object", "cup"});
  const CandidateSet set = enumerate_candidates(four_element_scene(), s, 1);
  OrchestratorPolicy p;
  Rng rng(8);
  for (auto& w : p.weights) w = 2 * rng.uniform() - 1;
  p.mode = ScoringMode::LengthNormalized;
  const auto probs = candidate_probabilities(p, s.verb, set.candidates);
  const auto scores = policy_scores(p, s, set);
  for (std::size_t i = 0; i < set.candidates.size(); ++i) {
    const auto lp = token_log_probs(probs, set.candidates, i);
    EXPECT_EQ(lp.size(), tokenize_call(serialize_candidate(set.candidates[i])).size());
    EXPECT_NEAR(std::accumulate(lp.begin(), lp.end(), 0.0), std::log(probs[i]), 1e-9);
    for (double v : lp) EXPECT_LE(v, 1e-12);
    EXPECT_NEAR(scores[i], std::log(probs[i]) / static_cast<double>(lp.size()), 1e-9);
  }
  EXPECT_THROW(length_normalized_score({}), Error);
}

TEST(Policy, MembershipError) {
  const SubTask s = step({"remove_object", "cup"});
  const CandidateSet set = enumerate_candidates(four_element_scene(), s, 1);
  Candidate stranger = set.candidates[0];
  stranger.key = "sam2_segment#42";
  stranger.region = 42;
  try {
    policy_score(OrchestratorPolicy{}, s, set, stranger);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Membership);
  }
}

TEST(Policy, RandomPolicyIsSeededAndJsonRoundTrips) {
  const SubTask s = step({"remove_object", "cup"});
  const CandidateSet set = enumerate_candidates(four_element_scene(), s, 1);
  const auto a = OrchestratorPolicy::random(5), b = OrchestratorPolicy::random(6);
  EXPECT_EQ(policy_scores(a, s, set), policy_scores(OrchestratorPolicy::random(5), s, set));
  EXPECT_NE(policy_scores(a, s, set), policy_scores(b, s, set));
  EXPECT_EQ(OrchestratorPolicy::from_json(a.to_json()), a);
  OrchestratorPolicy learned;
  learned.weights[3] = 1.25;
  learned.mode = ScoringMode::LengthNormalized;
  EXPECT_EQ(OrchestratorPolicy::from_json(learned.to_json()), learned);
  json bad = learned.to_json();
  bad["features"][0] = "nonsense";
  EXPECT_THROW(OrchestratorPolicy::from_json(bad), Error);
}

TEST(TopK, TiesBreakByIndex) {
  const std::vector<double> s = {1, 3, 3, 2};
  EXPECT_EQ(topk(s, 2), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(topk(s, 3), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(topk(s, 10).size(), 4u);
  EXPECT_TRUE(topk({}, 3).empty());
  EXPECT_EQ(topk({0, 0, 0}, 1), std::vector<std::size_t>{0});
}

TEST(TrainingSet, TiesShareMassAndTauFilters) {
  RewardTable t;
  t.entries.push_back(entry_with({3.0, 4.0, 4.0 + 1e-7, 1.0}));
  t.entries.push_back(entry_with({1.0, 2.0}));
  const auto data = build_training_set(t, 3.0);
  ASSERT_EQ(data.size(), 1u);
  EXPECT_EQ(data[0].target, (std::vector<double>{0.0, 0.5, 0.5, 0.0}));
  EXPECT_EQ(build_training_set(t, 0.0).size(), 2u);
  EXPECT_EQ(build_training_set(t, 0.0)[1].target, (std::vector<double>{0.0, 1.0}));
  EXPECT_TRUE(build_training_set(t, 4.5).empty());
}

TEST(Training, GradientMatchesFiniteDifferences) {
  RewardTable t = precompute_rewards_serial(tasks(6, 300), ProfileSet::defaults());
  const auto data = build_training_set(t, 0.0);
  ASSERT_FALSE(data.empty());
  OrchestratorPolicy p;
  p.temperature = 0.7;
  Rng rng(12);
  for (auto& w : p.weights) w = rng.uniform() - 0.5;
  const double l2 = 1e-2, h = 1e-6;
  const auto g = orchestrator_gradient(p, data, l2);
  for (std::size_t f = 0; f < feature_count(); ++f) {
    OrchestratorPolicy a = p, b = p;
    a.weights[f] += h;
    b.weights[f] -= h;
    const double fd = (orchestrator_loss(a, data, l2) - orchestrator_loss(b, data, l2)) / (2 * h);
    EXPECT_NEAR(g[f], fd, 1e-6) << feature_names()[f];
  }
}

TEST(Training, LearnsSeparableChoice) {
  // target is always the identity-preserving global editor
  std::vector<TrainingExample> data;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Instance inst = generate_instance(seed, Difficulty::Small);
    for (const auto& s : canonical_subtasks(inst.doc, inst.instruction.goal)) {
      const CandidateSet set = enumerate_candidates(inst.doc, s, seed);
      TrainingExample ex{s.verb, set.candidates, std::vector<double>(set.candidates.size(), 0.0)};
      for (std::size_t i = 0; i < set.candidates.size(); ++i)
        if (set.candidates[i].key == "qwen_image_edit") ex.target[i] = 1.0;
      data.push_back(ex);
    }
  }
  std::vector<double> losses;
  const OrchestratorPolicy p = train_orchestrator(data, {200, 0.5, 1e-4}, &losses);
  ASSERT_EQ(losses.size(), 201u);
  EXPECT_LT(losses.back(), 0.25 * losses.front());
  for (std::size_t i = 1; i < losses.size(); ++i) EXPECT_LE(losses[i], losses[i - 1] + 1e-12);
  EXPECT_GT(mean_target_log_prob(p, data), mean_target_log_prob(OrchestratorPolicy{}, data));
  for (const auto& ex : data) {
    const auto probs = candidate_probabilities(p, ex.verb, ex.candidates);
    const auto best = topk(probs, 1)[0];
    EXPECT_EQ(ex.candidates[best].key, "qwen_image_edit");
  }
  EXPECT_THROW(train_orchestrator({}, {}), Error);
}

TEST(RewardTable, SerialEqualsParallel) {
  const auto t = tasks(12, 400);
  const ProfileSet p = ProfileSet::defaults();
  const RewardTable serial = precompute_rewards_serial(t, p);
  const RewardTable parallel = precompute_rewards(t, p);
  EXPECT_EQ(serial, parallel);
  EXPECT_EQ(canonical_dump(serial.to_json()), canonical_dump(parallel.to_json()));
  EXPECT_EQ(RewardTable::from_json(serial.to_json()), serial);
  PrecomputeOptions restricted;
  restricted.mode = CandidateMode::Restricted;
  EXPECT_EQ(precompute_rewards_serial(t, p, restricted), precompute_rewards(t, p, restricted));
}

TEST(RewardTable, ShapeAndBestRewards) {
  const auto t = tasks(5, 500);
  const RewardTable table = precompute_rewards(t, ProfileSet::always_succeed());
  std::size_t subtasks = 0;
  for (const auto& task : t) subtasks += task.plan.subtasks.size();
  ASSERT_EQ(table.entries.size(), subtasks);
  const BestRewards best = table.best_rewards();
  for (const auto& e : table.entries) {
    ASSERT_EQ(e.records.size(), e.candidates.size());
    for (const auto& r : e.records) {
      EXPECT_EQ(r.samples.size(), r.error ? 0u : 2u);
      EXPECT_GE(r.reward, 0.0);
      EXPECT_LE(r.reward, 5.0);
    }
    EXPECT_DOUBLE_EQ(best.at({e.instance_id, e.subtask.id}), e.best());
    // an always-succeeding global editor reaches full marks on a template subtask
    EXPECT_GT(e.best(), 0.0);
  }
  PrecomputeOptions bad;
  bad.n_repeats = 0;
  EXPECT_THROW(precompute_rewards(t, ProfileSet::always_succeed(), bad), Error);
}
