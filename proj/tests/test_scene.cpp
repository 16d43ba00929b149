#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <set>

#include "editorch/generator.hpp"
#include "editorch/subtask.hpp"
#include "fixtures.hpp"

using namespace editorch;
using namespace editorch::fixtures;

namespace {

Constraint add_of(const std::string& token) {
  return Constraint{ConstraintKind::Add, pattern_for_token(token), {}, {}, {}, {}};
}

Constraint preserve_of(const Element& e) {
  return Constraint{ConstraintKind::Preserve, Pattern{to_string(e.kind), e.id, {}}, {}, {}, {}, e};
}

}  // namespace

TEST(Rect, Geometry) {
  const Rect r{100, 100, 300, 200};
  EXPECT_EQ(r.area(), 20000);
  EXPECT_TRUE(r.intersects({250, 150, 400, 400}));
  EXPECT_FALSE(r.intersects({300, 100, 400, 200}));  // touching edges do not intersect
  EXPECT_EQ(r.dilated(100), (Rect{0, 0, 400, 300}));
  EXPECT_EQ((Rect{-50, 900, 1100, 1200}).clipped_to_canvas(), (Rect{0, 900, 1000, 1000}));
  EXPECT_EQ(snap_outward({130, 170, 250, 260}), (Rect{100, 100, 300, 300}));
}

TEST(Relations, Predicates) {
  const Rect a{100, 0, 200, 100}, b{100, 200, 200, 300};
  EXPECT_TRUE(relation_holds("above", a, b));
  EXPECT_TRUE(relation_holds("below", b, a));
  EXPECT_FALSE(relation_holds("left_of", a, b));
  EXPECT_TRUE(relation_holds("left_of", {0, 0, 100, 100}, {200, 0, 300, 100}));
  EXPECT_TRUE(relation_holds("inside", {120, 220, 180, 280}, b));
  EXPECT_FALSE(relation_holds("inside", a, b));
}

TEST(ConstraintSatisfaction, NothingAddedIsZero) {
  const SceneDoc d = five_element_scene();
  EXPECT_DOUBLE_EQ(constraint_satisfaction(d, {add_of("cake"), add_of("gift"), add_of("deal")}), 0.0);
}

TEST(ConstraintSatisfaction, PreserveOnlyIdentityIsOne) {
  const SceneDoc d = five_element_scene();
  std::vector<Constraint> goal;
  for (const auto& e : d.elements) goal.push_back(preserve_of(e));
  EXPECT_DOUBLE_EQ(constraint_satisfaction(d, goal), 1.0);
}

TEST(ConstraintSatisfaction, TwoOfFourApplied) {
  SceneDoc d = five_element_scene();
  const std::vector<Constraint> goal = {
      Constraint{ConstraintKind::Remove, pattern_for_token("lamp"), {}, {}, {}, {}},
      Constraint{ConstraintKind::Replace, pattern_for_token("sale"), pattern_for_token("deal"), {}, {}, {}},
      add_of("cake"),
      add_of("gift")};
  EXPECT_DOUBLE_EQ(constraint_satisfaction(d, goal), 0.0);
  d.elements.erase(d.elements.begin() + 1);       // remove the lamp
  d.elements[2].attrs["content"] = "deal";        // e4: sale -> deal
  EXPECT_DOUBLE_EQ(constraint_satisfaction(d, goal), 0.5);
}

TEST(ConstraintSatisfaction, MonotoneUnderCanonicalEffects) {
  SceneDoc d = five_element_scene();
  const std::vector<Constraint> goal = {add_of("cake"), add_of("deal"),
                                        Constraint{ConstraintKind::Remove, pattern_for_token("cup"), {}, {}, {}, {}}};
  double prev = constraint_satisfaction(d, goal);
  d.elements.push_back(object("e6", "cake", "pink", {300, 500, 400, 600}));
  EXPECT_GE(constraint_satisfaction(d, goal), prev);
  prev = constraint_satisfaction(d, goal);
  d.elements.push_back(text("e7", "deal", {300, 650, 500, 700}));
  EXPECT_GE(constraint_satisfaction(d, goal), prev);
  prev = constraint_satisfaction(d, goal);
  d.elements.erase(d.elements.begin() + 2);
  EXPECT_GE(constraint_satisfaction(d, goal), prev);
  EXPECT_DOUBLE_EQ(constraint_satisfaction(d, goal), 1.0);
}

TEST(ConstraintSatisfaction, Errors) {
  const SceneDoc d = five_element_scene();
  EXPECT_THROW(constraint_satisfaction(d, {}), Error);
  const Constraint bad{ConstraintKind::Add, Pattern{"hologram", std::nullopt, {}}, {}, {}, {}, {}};
  try {
    constraint_satisfaction(d, {bad});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Selector);
  }
}

TEST(ConstraintSatisfaction, RelationConstraint) {
  SceneDoc d = five_element_scene();
  const Constraint rel{ConstraintKind::Relation, pattern_for_token("cake"), {}, "above", pattern_for_token("sale"), {}};
  EXPECT_DOUBLE_EQ(constraint_satisfaction(d, {rel}), 0.0);
  d.elements.push_back(object("e6", "cake", "pink", {100, 600, 300, 700}));
  EXPECT_DOUBLE_EQ(constraint_satisfaction(d, {rel}), 1.0);
}

TEST(DiffUntouched, Examples) {
  const SceneDoc d = five_element_scene();
  EXPECT_DOUBLE_EQ(diff_untouched(d, d, {}), 1.0);
  EXPECT_DOUBLE_EQ(diff_untouched(d, d, {"e1", "e2"}), 1.0);
  SceneDoc all = d;
  for (auto& e : all.elements) e.attrs["color"] = "purple";
  EXPECT_DOUBLE_EQ(diff_untouched(d, all, {}), 0.0);
  SceneDoc one = d;
  one.elements[3].bbox.x0 += 10;
  EXPECT_DOUBLE_EQ(diff_untouched(d, one, {}), 0.8);
  EXPECT_DOUBLE_EQ(diff_untouched(d, one, {"e4"}), 1.0);
}

TEST(SceneDoc, ValidationRejectsBrokenDocs) {
  SceneDoc d = five_element_scene();
  EXPECT_NO_THROW(validate(d));
  SceneDoc dup = d;
  dup.elements[1].id = "e1";
  EXPECT_THROW(validate(dup), Error);
  SceneDoc outside = d;
  outside.elements[0].bbox.x1 = 1200;
  EXPECT_THROW(validate(outside), Error);
  SceneDoc layer = d;
  layer.elements[0].layer = 4;
  EXPECT_THROW(validate(layer), Error);
  SceneDoc attr = d;
  attr.elements[0].attrs["font"] = "serif";  // objects carry no font
  EXPECT_THROW(validate(attr), Error);
}

TEST(SceneDoc, NextElementIdIsFresh) {
  const SceneDoc d = five_element_scene();
  EXPECT_EQ(d.next_element_id(), "e6");
}

TEST(Generator, Deterministic) {
  const Instance a = generate_instance(0, Difficulty::Small);
  const Instance b = generate_instance(0, Difficulty::Small);
  EXPECT_EQ(a, b);
  EXPECT_EQ(canonical_dump(to_json(a)), canonical_dump(to_json(b)));
}

TEST(Generator, GoldenSmallSeedZero) {
  const Instance inst = generate_instance(0, Difficulty::Small);
  const std::string path = std::string(EDITORCH_TEST_DATA) + "/instance_small_0.json";
  const std::string got = to_json(inst).dump(1) + "\n";
  if (std::getenv("EDITORCH_UPDATE_GOLDEN")) write_text_file(path, got);
  ASSERT_TRUE(std::filesystem::exists(path));
  EXPECT_EQ(read_text_file(path), got);
  EXPECT_GE(inst.doc.elements.size(), 3u);
  EXPECT_LE(inst.doc.elements.size(), 5u);
}

TEST(Generator, InvariantsOverManySeeds) {
  std::set<std::string> digests;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    for (Difficulty diff : {Difficulty::Small, Difficulty::Medium}) {
      const Instance inst = generate_instance(seed, diff);
      ASSERT_NO_THROW(validate(inst.doc));
      const std::size_t n = inst.doc.elements.size();
      ASSERT_GE(n, 3u);
      ASSERT_LE(n, diff == Difficulty::Small ? 5u : 12u);
      ASSERT_FALSE(inst.instruction.goal.empty());
      ASSERT_GE(inst.checklist.items.size(), 1u);
      ASSERT_LE(inst.checklist.items.size(), 12u);
      // checklist covers every goal constraint, items distinct
      ASSERT_EQ(inst.checklist.items.size(), inst.instruction.goal.size());
      for (std::size_t i = 0; i < inst.checklist.items.size(); ++i) {
        EXPECT_EQ(inst.checklist.items[i], checklist_item_for(inst.instruction.goal[i]));
        for (std::size_t j = 0; j < i; ++j) EXPECT_NE(inst.checklist.items[i], inst.checklist.items[j]);
      }
      for (const auto& c : inst.instruction.goal) ASSERT_NO_THROW(check_selector(c));
      // round trip
      ASSERT_EQ(deserialize_scene(serialize(inst.doc)), inst.doc);
      ASSERT_EQ(instance_from_json(to_json(inst)), inst);
      if (diff == Difficulty::Small) digests.insert(serialize(inst.doc));
    }
  }
  EXPECT_EQ(digests.size(), 1000u);
  EXPECT_NE(serialize(generate_instance(1, Difficulty::Small).doc), serialize(generate_instance(2, Difficulty::Small).doc));
}

TEST(Serialization, RejectsWrongSchema) {
  json j = to_json(generate_instance(5, Difficulty::Small));
  j["schema"] = "scene/0";
  EXPECT_THROW(instance_from_json(j), Error);
}

TEST(SceneDigest, StableAndSensitive) {
  SceneDoc d = five_element_scene();
  const auto h = scene_digest(d);
  EXPECT_EQ(h, scene_digest(five_element_scene()));
  d.defects.push_back(Defect{"seam", std::nullopt, Rect{0, 0, 100, 100}});
  EXPECT_NE(h, scene_digest(d));
}
