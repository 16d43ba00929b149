#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "editorch/scene.hpp"
#include "editorch/subtask.hpp"

namespace editorch {

namespace tool_ids {
inline constexpr std::string_view kSegment = "sam2_segment";
inline constexpr std::string_view kOcr = "deepseek_ocr";
inline constexpr std::string_view kLayers = "qwen_layered";
inline constexpr std::string_view kBBox = "qwen_bbox";
inline constexpr std::string_view kInpaint = "flux_inpaint";
inline constexpr std::string_view kGlobalA = "qwen_image_edit";   // preserves identity, weak on text
inline constexpr std::string_view kGlobalB = "flux_kontext_edit"; // strong execution, collateral-prone
}  // namespace tool_ids

inline constexpr int kMaskDilation = 100;
inline constexpr std::size_t kMaxSegments = 8;
inline constexpr std::size_t kMaxTextRegions = 10;
inline constexpr std::size_t kBBoxProposals = 3;

enum class ToolRole { Analysis, RegionEditor, GlobalEditor };

struct ToolSpec {
  std::string id;
  ToolRole role;
  std::string region_kind;  // analysis tools: segment|text|layer|bbox
};

// Registry in stable order: analysis tools, region editor, global editors.
std::span<const ToolSpec> tool_registry();
const ToolSpec* find_tool(std::string_view id);
std::vector<std::string> analysis_tool_ids();
std::vector<std::string> global_editor_ids();

struct RegionProposal {
  int index = 0;  // 1-based, contiguous within one analysis result
  Mask mask;
  std::vector<std::string> description;
  std::string source_tool;
  std::string kind;  // segment|text|layer|bbox|union

  friend bool operator==(const RegionProposal&, const RegionProposal&) = default;
};

struct ToolCall {
  std::string tool;
  std::optional<int> region_number;
  std::vector<std::string> instruction;  // optional subtask payload tokens

  friend bool operator==(const ToolCall&, const ToolCall&) = default;
};

// Wire format: {"tool": <string>, "arguments": <object>}, compact, "tool"
// first, argument keys sorted.
std::string serialize_call(const ToolCall& call);
ordered_json call_to_json(const ToolCall& call);

// Parses and schema-checks a raw call. Throws Parse, Schema (with field
// path) or UnknownTool errors.
ToolCall validate_call(std::string_view raw);

struct ToolProfile {
  std::map<std::string, double> success;  // per verb
  double collateral = 0.0;                // per element inside the edit's reach
  std::map<std::string, double> defect;   // per verb
  double clutter = 0.0;                   // when a placement overlaps an element

  friend bool operator==(const ToolProfile&, const ToolProfile&) = default;
};

// Profiles for the three executing tools. Loaded from "profiles/1" JSON.
struct ProfileSet {
  std::map<std::string, ToolProfile> tools;

  const ToolProfile& at(const std::string& tool) const;
  bool deterministic() const;  // every probability is 0 or 1

  static ProfileSet defaults();
  // Every verb succeeds; no collateral, defects or clutter.
  static ProfileSet always_succeed();
  static ProfileSet from_json(const json& j);
  json to_json() const;
  friend bool operator==(const ProfileSet&, const ProfileSet&) = default;
};

std::vector<RegionProposal> analyze_segments(const SceneDoc& doc);
std::vector<RegionProposal> analyze_text(const SceneDoc& doc);
std::vector<RegionProposal> analyze_layers(const SceneDoc& doc);
// Three grid-snapped boxes plus their union as proposal 4. Throws Verb error
// for an unsupported verb.
std::vector<RegionProposal> propose_goal_bboxes(const SceneDoc& doc, const SubTask& subtask, std::uint64_t seed);

std::vector<RegionProposal> run_analysis(const SceneDoc& doc, std::string_view tool, const SubTask& subtask,
                                         std::uint64_t seed);

// Applies an editing call. Region editor calls need the analysis result the
// region number indexes; global editors take none.
SceneDoc execute_tool(const SceneDoc& doc, const ToolCall& call, const std::vector<RegionProposal>* analysis,
                      const SubTask& subtask, std::uint64_t seed, const ProfileSet& profiles);

json to_json(const RegionProposal& p);

}  // namespace editorch
