#include <gtest/gtest.h>

#include "editorch/tools.hpp"
#include "editorch/vocab.hpp"
#include "fixtures.hpp"
#include "protocol_corpus.hpp"

using namespace editorch;
using namespace editorch::fixtures;

namespace {

SubTask step(std::vector<std::string> tokens) {
  tokens.push_back(";");
  return parse_subtask(tokens, "s1");
}

ProfileSet all_collateral() {
  ProfileSet p = ProfileSet::always_succeed();
  for (auto& [_, t] : p.tools) t.collateral = 1.0;
  return p;
}

}  // namespace

TEST(Protocol, CorpusHasFiftyCases) { EXPECT_EQ(protocol_corpus().size(), 50u); }

TEST(Protocol, CorpusCodesAndPaths) {
  for (const auto& c : protocol_corpus()) {
    SCOPED_TRACE(c.raw);
    if (!c.error) {
      EXPECT_NO_THROW(validate_call(c.raw));
      continue;
    }
    try {
      validate_call(c.raw);
      ADD_FAILURE() << "accepted";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), *c.error);
      if (!c.path.empty()) EXPECT_EQ(e.path(), c.path);
    }
  }
}

TEST(Protocol, ExampleRoundTripsByteIdentical) {
  const std::string raw = R"({"tool":"flux_inpaint","arguments":{"region_number":3}})";
  const ToolCall call = validate_call(raw);
  EXPECT_EQ(call.tool, "flux_inpaint");
  EXPECT_EQ(call.region_number, 3);
  EXPECT_EQ(serialize_call(call), raw);
}

TEST(Protocol, SerializeThenValidateIsIdentity) {
  for (const auto& c : protocol_corpus()) {
    if (c.error) continue;
    const ToolCall call = validate_call(c.raw);
    EXPECT_EQ(validate_call(serialize_call(call)), call);
  }
}

TEST(Registry, StableOrderAndRoles) {
  const auto reg = tool_registry();
  ASSERT_EQ(reg.size(), 7u);
  EXPECT_EQ(analysis_tool_ids(), (std::vector<std::string>{"sam2_segment", "deepseek_ocr", "qwen_layered", "qwen_bbox"}));
  EXPECT_EQ(global_editor_ids(), (std::vector<std::string>{"qwen_image_edit", "flux_kontext_edit"}));
  EXPECT_EQ(find_tool("flux_inpaint")->role, ToolRole::RegionEditor);
  EXPECT_EQ(find_tool("gimp"), nullptr);
}

TEST(Analysis, SegmentsAreAreaSortedAndCapped) {
  std::vector<Element> els;
  for (int i = 0; i < 11; ++i) els.push_back(object("e" + std::to_string(i + 1), "cup", "red", {0, i * 90, 10 + 10 * i, i * 90 + 80}));
  const auto segs = analyze_segments(scene(els));
  ASSERT_EQ(segs.size(), kMaxSegments);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    EXPECT_EQ(segs[i].index, static_cast<int>(i) + 1);
    if (i) EXPECT_GE(mask_area_upper(segs[i - 1].mask), mask_area_upper(segs[i].mask));
  }
  EXPECT_EQ(segs[0].mask.front(), els[10].bbox);
}

TEST(Analysis, TextCappedAtTen) {
  std::vector<Element> els;
  for (int i = 0; i < 12; ++i) els.push_back(text("e" + std::to_string(i + 1), "sale", {0, i * 80, 100, i * 80 + 50}));
  const auto regions = analyze_text(scene(els));
  EXPECT_EQ(regions.size(), kMaxTextRegions);
  for (const auto& r : regions) EXPECT_EQ(r.kind, "text");
  EXPECT_EQ(analyze_text(five_element_scene()).size(), 2u);
}

TEST(Analysis, FourLayerBands) {
  const auto layers = analyze_layers(five_element_scene());
  ASSERT_EQ(layers.size(), 4u);
  EXPECT_EQ(layers[0].mask.size(), 2u);  // the two texts
  EXPECT_EQ(layers[1].mask.size(), 2u);
  EXPECT_EQ(layers[2].mask.size(), 1u);
  EXPECT_TRUE(layers[3].mask.empty());
}

TEST(Analysis, BBoxThreeProposalsPlusUnion) {
  const SceneDoc d = five_element_scene();
  const SubTask s = step({"add_object", "cake", "below", "lamp"});
  const auto props = propose_goal_bboxes(d, s, 11);
  ASSERT_EQ(props.size(), 4u);
  EXPECT_EQ(props[3].kind, "union");
  EXPECT_EQ(props[3].mask.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(props[3].mask[i], props[i].mask.front());
    const Rect r = props[i].mask.front();
    EXPECT_EQ(r, snap_outward(r));
  }
  EXPECT_TRUE(relation_holds("below", props[0].mask.front(), d.elements[1].bbox));
  EXPECT_EQ(props, propose_goal_bboxes(d, s, 11));
  SubTask bad = s;
  bad.verb = "teleport";
  try {
    propose_goal_bboxes(d, bad, 11);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Verb);
  }
}

TEST(Execute, RegionEditLeavesOutsideUntouched) {
  const SceneDoc d = five_element_scene();
  const SubTask s = step({"recolor_object", "burger", "gold"});
  const auto segs = analyze_segments(d);
  ASSERT_EQ(segs[0].description[1], "burger");
  const SceneDoc out = execute_tool(d, {"flux_inpaint", 1, {}}, &segs, s, 5, all_collateral());
  EXPECT_EQ(out.elements[0].attrs.at("color"), "gold");
  // nothing else lies within 100 of the burger
  for (std::size_t i = 1; i < d.elements.size(); ++i) EXPECT_EQ(out.elements[i], d.elements[i]);
}

TEST(Execute, GlobalEditorReachesEverything) {
  const SceneDoc d = five_element_scene();
  const SceneDoc out = execute_tool(d, {"flux_kontext_edit", std::nullopt, {}}, nullptr,
                                    step({"recolor_object", "burger", "gold"}), 5, all_collateral());
  EXPECT_EQ(out.elements[0].attrs.at("color"), "gold");
  for (std::size_t i = 1; i < d.elements.size(); ++i) EXPECT_NE(out.elements[i].attrs.at("color"), d.elements[i].attrs.at("color"));
}

TEST(Execute, AddPlacesNewElement) {
  const SceneDoc d = five_element_scene();
  const SubTask s = step({"add_object", "cake", "below", "lamp"});
  const auto props = propose_goal_bboxes(d, s, 3);
  const SceneDoc out = execute_tool(d, {"flux_inpaint", 1, {}}, &props, s, 7, ProfileSet::always_succeed());
  ASSERT_EQ(out.elements.size(), 6u);
  EXPECT_EQ(out.elements.back().id, "e6");
  EXPECT_EQ(out.elements.back().attrs.at("label"), "cake");
  for (const auto& c : derive_constraints(d, s)) EXPECT_TRUE(constraint_satisfied(out, c));
}

TEST(Execute, CompositionIndexAndUnknownErrors) {
  const SceneDoc d = five_element_scene();
  const SubTask s = step({"remove_object", "cup"});
  const auto segs = analyze_segments(d);
  const ProfileSet p = ProfileSet::always_succeed();
  auto code_of = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    ADD_FAILURE() << "no error";
    return ErrorCode::Io;
  };
  EXPECT_EQ(code_of([&] { execute_tool(d, {"flux_inpaint", 1, {}}, nullptr, s, 1, p); }), ErrorCode::Composition);
  EXPECT_EQ(code_of([&] { execute_tool(d, {"qwen_image_edit", std::nullopt, {}}, &segs, s, 1, p); }), ErrorCode::Composition);
  EXPECT_EQ(code_of([&] { execute_tool(d, {"sam2_segment", std::nullopt, {}}, nullptr, s, 1, p); }), ErrorCode::Composition);
  EXPECT_EQ(code_of([&] { execute_tool(d, {"flux_inpaint", 99, {}}, &segs, s, 1, p); }), ErrorCode::Index);
  EXPECT_EQ(code_of([&] { execute_tool(d, {"flux_inpaint", 0, {}}, &segs, s, 1, p); }), ErrorCode::Index);
  EXPECT_EQ(code_of([&] { execute_tool(d, {"photoshop", std::nullopt, {}}, nullptr, s, 1, p); }), ErrorCode::UnknownTool);
  EXPECT_EQ(code_of([&] { run_analysis(d, "photoshop", s, 1); }), ErrorCode::UnknownTool);
  EXPECT_EQ(code_of([&] { run_analysis(d, "flux_inpaint", s, 1); }), ErrorCode::Composition);
}

TEST(Execute, PureAndSeedDeterministic) {
  const SceneDoc d = five_element_scene();
  const SceneDoc copy = d;
  const ProfileSet p = ProfileSet::defaults();
  const SubTask s = step({"replace_text", "sale", "deal"});
  const ToolCall call{"qwen_image_edit", std::nullopt, {}};
  const SceneDoc a = execute_tool(d, call, nullptr, s, 99, p);
  EXPECT_EQ(d, copy);
  EXPECT_EQ(a, execute_tool(d, call, nullptr, s, 99, p));
  bool differs = false;
  for (std::uint64_t seed = 0; seed < 50 && !differs; ++seed) differs = execute_tool(d, call, nullptr, s, seed, p) != a;
  EXPECT_TRUE(differs);
}

TEST(Execute, MissedTargetIsNotApplied) {
  const SceneDoc d = five_element_scene();
  const SubTask s = step({"remove_object", "cup"});
  const auto segs = analyze_segments(d);
  // region 1 is the burger; the cup is elsewhere
  const SceneDoc out = execute_tool(d, {"flux_inpaint", 1, {}}, &segs, s, 1, ProfileSet::always_succeed());
  EXPECT_EQ(out, d);
}

TEST(Profiles, LoadValidateRoundTrip) {
  const ProfileSet p = ProfileSet::defaults();
  EXPECT_FALSE(p.deterministic());
  EXPECT_TRUE(ProfileSet::always_succeed().deterministic());
  EXPECT_EQ(ProfileSet::from_json(p.to_json()), p);
  json j = p.to_json();
  j["tools"]["flux_inpaint"]["collateral"] = 1.5;
  EXPECT_THROW(ProfileSet::from_json(j), Error);
  j = p.to_json();
  j["tools"]["flux_inpaint"]["success"].erase("add_text");
  EXPECT_THROW(ProfileSet::from_json(j), Error);
  j = p.to_json();
  j["tools"]["sam2_segment"] = j["tools"]["flux_inpaint"];
  EXPECT_THROW(ProfileSet::from_json(j), Error);
  EXPECT_THROW(p.at("sam2_segment"), Error);
}
