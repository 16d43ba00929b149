#include "editorch/tools.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <set>

#include "editorch/vocab.hpp"

#ifndef EDITORCH_DATA_DIR
#define EDITORCH_DATA_DIR "data"
#endif

namespace editorch {

namespace {

const std::array<ToolSpec, 7> kRegistry = {{
    {std::string(tool_ids::kSegment), ToolRole::Analysis, "segment"},
    {std::string(tool_ids::kOcr), ToolRole::Analysis, "text"},
    {std::string(tool_ids::kLayers), ToolRole::Analysis, "layer"},
    {std::string(tool_ids::kBBox), ToolRole::Analysis, "bbox"},
    {std::string(tool_ids::kInpaint), ToolRole::RegionEditor, ""},
    {std::string(tool_ids::kGlobalA), ToolRole::GlobalEditor, ""},
    {std::string(tool_ids::kGlobalB), ToolRole::GlobalEditor, ""},
}};

}  // namespace

std::span<const ToolSpec> tool_registry() { return kRegistry; }

const ToolSpec* find_tool(std::string_view id) {
  for (const auto& t : kRegistry)
    if (t.id == id) return &t;
  return nullptr;
}

std::vector<std::string> analysis_tool_ids() {
  std::vector<std::string> out;
  for (const auto& t : kRegistry)
    if (t.role == ToolRole::Analysis) out.push_back(t.id);
  return out;
}

std::vector<std::string> global_editor_ids() {
  std::vector<std::string> out;
  for (const auto& t : kRegistry)
    if (t.role == ToolRole::GlobalEditor) out.push_back(t.id);
  return out;
}

// --- wire format ---

ordered_json call_to_json(const ToolCall& call) {
  ordered_json args = ordered_json::object();
  // sorted argument keys
  if (!call.instruction.empty()) args["instruction"] = call.instruction;
  if (call.region_number) args["region_number"] = *call.region_number;
  ordered_json j;
  j["tool"] = call.tool;
  j["arguments"] = args;
  return j;
}

std::string serialize_call(const ToolCall& call) { return call_to_json(call).dump(); }

ToolCall validate_call(std::string_view raw) {
  json j;
  try {
    j = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::Schema, "tool call must be an object", "$");
  if (!j.contains("tool")) throw Error(ErrorCode::Schema, "missing tool", "tool");
  if (!j["tool"].is_string()) throw Error(ErrorCode::Schema, "tool must be a string", "tool");
  ToolCall call;
  call.tool = j["tool"].get<std::string>();
  const ToolSpec* spec = find_tool(call.tool);
  if (!spec) throw Error(ErrorCode::UnknownTool, "unregistered tool '" + call.tool + "'", "tool");
  for (const auto& [key, _] : j.items())
    if (key != "tool" && key != "arguments") throw Error(ErrorCode::Schema, "unexpected key", key);
  if (!j.contains("arguments")) throw Error(ErrorCode::Schema, "missing arguments", "arguments");
  const json& args = j["arguments"];
  if (!args.is_object()) throw Error(ErrorCode::Schema, "arguments must be an object", "arguments");

  for (const auto& [key, value] : args.items()) {
    const std::string path = "arguments." + key;
    if (key == "region_number") {
      if (spec->role != ToolRole::RegionEditor) throw Error(ErrorCode::Schema, "region only valid for region editor", path);
      if (!value.is_number_integer()) throw Error(ErrorCode::Schema, "region_number must be an integer", path);
      const auto n = value.get<long long>();
      if (n < 1 || n > 1000) throw Error(ErrorCode::Schema, "region_number must be >= 1", path);
      call.region_number = static_cast<int>(n);
    } else if (key == "instruction") {
      if (!value.is_array()) throw Error(ErrorCode::Schema, "instruction must be a token array", path);
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (!value[i].is_string()) throw Error(ErrorCode::Schema, "instruction tokens must be strings", path + "[" + std::to_string(i) + "]");
        call.instruction.push_back(value[i].get<std::string>());
      }
    } else {
      throw Error(ErrorCode::Schema, "unknown argument", path);
    }
  }
  if (spec->role == ToolRole::RegionEditor && !call.region_number)
    throw Error(ErrorCode::Schema, "region editor requires region_number", "arguments.region_number");
  return call;
}

// --- profiles ---

const ToolProfile& ProfileSet::at(const std::string& tool) const {
  auto it = tools.find(tool);
  if (it == tools.end()) throw Error(ErrorCode::Config, "no profile for tool " + tool);
  return it->second;
}

bool ProfileSet::deterministic() const {
  auto binary = [](double p) { return p == 0.0 || p == 1.0; };
  for (const auto& [_, p] : tools) {
    if (!binary(p.collateral) || !binary(p.clutter)) return false;
    for (const auto& [__, v] : p.success)
      if (!binary(v)) return false;
    for (const auto& [__, v] : p.defect)
      if (!binary(v)) return false;
  }
  return true;
}

ProfileSet ProfileSet::defaults() { return from_json(read_json_file(std::string(EDITORCH_DATA_DIR) + "/profiles.json")); }

ProfileSet ProfileSet::always_succeed() {
  ProfileSet set;
  for (auto id : {tool_ids::kInpaint, tool_ids::kGlobalA, tool_ids::kGlobalB}) {
    ToolProfile p;
    for (auto v : vocab::verbs()) {
      p.success[std::string(v)] = 1.0;
      p.defect[std::string(v)] = 0.0;
    }
    set.tools[std::string(id)] = p;
  }
  return set;
}

ProfileSet ProfileSet::from_json(const json& j) {
  if (j.value("schema", "") != "profiles/1") throw Error(ErrorCode::Config, "expected schema profiles/1");
  auto prob = [](const json& v, const std::string& where) {
    if (!v.is_number()) throw Error(ErrorCode::Config, "probability must be a number", where);
    double p = v.get<double>();
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::Config, "probability outside [0,1]", where);
    return p;
  };
  ProfileSet set;
  for (const auto& [tool, pj] : j.at("tools").items()) {
    const ToolSpec* spec = find_tool(tool);
    if (!spec || spec->role == ToolRole::Analysis) throw Error(ErrorCode::Config, "profile for non-editing tool " + tool);
    ToolProfile p;
    for (auto v : vocab::verbs()) {
      const std::string verb(v);
      const std::string base = "tools." + tool;
      if (!pj.at("success").contains(verb)) throw Error(ErrorCode::Config, "missing verb", base + ".success." + verb);
      if (!pj.at("defect").contains(verb)) throw Error(ErrorCode::Config, "missing verb", base + ".defect." + verb);
      p.success[verb] = prob(pj["success"][verb], base + ".success." + verb);
      p.defect[verb] = prob(pj["defect"][verb], base + ".defect." + verb);
    }
    p.collateral = prob(pj.at("collateral"), "tools." + tool + ".collateral");
    p.clutter = prob(pj.at("clutter"), "tools." + tool + ".clutter");
    set.tools[tool] = p;
  }
  for (auto id : {tool_ids::kInpaint, tool_ids::kGlobalA, tool_ids::kGlobalB})
    if (!set.tools.count(std::string(id))) throw Error(ErrorCode::Config, "missing profile for " + std::string(id));
  return set;
}

json ProfileSet::to_json() const {
  json tj = json::object();
  for (const auto& [tool, p] : tools)
    tj[tool] = json{{"success", p.success}, {"defect", p.defect}, {"collateral", p.collateral}, {"clutter", p.clutter}};
  return json{{"schema", "profiles/1"}, {"tools", tj}};
}

// --- analysis ---

namespace {

std::vector<std::string> element_description(const Element& e) {
  std::vector<std::string> d{to_string(e.kind)};
  if (e.kind == ElementKind::Text) {
    for (auto& w : e.content_words()) d.push_back(w);
  } else {
    d.push_back(e.name_token());
  }
  d.push_back(e.attrs.count("color") ? e.attrs.at("color") : "");
  return d;
}

std::vector<const Element*> by_area(const SceneDoc& doc, bool text_only) {
  std::vector<const Element*> out;
  for (const auto& e : doc.elements)
    if (!text_only || e.kind == ElementKind::Text) out.push_back(&e);
  std::stable_sort(out.begin(), out.end(), [](const Element* a, const Element* b) { return a->bbox.area() > b->bbox.area(); });
  return out;
}

}  // namespace

std::vector<RegionProposal> analyze_segments(const SceneDoc& doc) {
  std::vector<RegionProposal> out;
  for (const Element* e : by_area(doc, false)) {
    if (out.size() == kMaxSegments) break;
    out.push_back(RegionProposal{static_cast<int>(out.size()) + 1, {e->bbox}, element_description(*e),
                                 std::string(tool_ids::kSegment), "segment"});
  }
  return out;
}

std::vector<RegionProposal> analyze_text(const SceneDoc& doc) {
  std::vector<RegionProposal> out;
  for (const Element* e : by_area(doc, true)) {
    if (out.size() == kMaxTextRegions) break;
    out.push_back(RegionProposal{static_cast<int>(out.size()) + 1, {e->bbox}, e->content_words(),
                                 std::string(tool_ids::kOcr), "text"});
  }
  return out;
}

std::vector<RegionProposal> analyze_layers(const SceneDoc& doc) {
  std::vector<RegionProposal> out;
  for (int band = 0; band < kLayerBands; ++band) {
    RegionProposal p{band + 1, {}, {"layer" + std::to_string(band)}, std::string(tool_ids::kLayers), "layer"};
    for (const auto& e : doc.elements) {
      if (e.layer != band) continue;
      p.mask.push_back(e.bbox);
      p.description.push_back(e.name_token());
    }
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

const Element* find_named(const SceneDoc& doc, const std::string& token) {
  if (!vocab::is_label(token) && !vocab::is_word(token)) return nullptr;
  Pattern p = pattern_for_token(token);
  for (const auto& e : doc.elements)
    if (p.matches(e)) return &e;
  return nullptr;
}

Rect random_grid_box(Rng& rng) {
  static constexpr std::array<int, 3> sizes = {200, 300, 400};
  const int w = sizes[rng.below(sizes.size())];
  const int h = sizes[rng.below(sizes.size())];
  const int x0 = kGridStep * static_cast<int>(rng.below(static_cast<std::size_t>((kCanvasSize - w) / kGridStep + 1)));
  const int y0 = kGridStep * static_cast<int>(rng.below(static_cast<std::size_t>((kCanvasSize - h) / kGridStep + 1)));
  return Rect{x0, y0, x0 + w, y0 + h};
}

std::uint64_t subtask_hash(const SubTask& s) {
  std::string joined;
  for (const auto& t : s.tokens()) joined += t + " ";
  return fnv1a64(joined);
}

}  // namespace

std::vector<RegionProposal> propose_goal_bboxes(const SceneDoc& doc, const SubTask& subtask, std::uint64_t seed) {
  if (!vocab::is_verb(subtask.verb)) throw Error(ErrorCode::Verb, "unsupported verb '" + subtask.verb + "'");
  Rng rng(derive_seed(seed, subtask_hash(subtask)));
  std::vector<RegionProposal> out;
  auto add = [&](Rect r, std::vector<std::string> desc) {
    out.push_back(RegionProposal{static_cast<int>(out.size()) + 1, {r}, std::move(desc), std::string(tool_ids::kBBox), "bbox"});
  };

  std::optional<Rect> focused;
  std::vector<std::string> focus_desc;
  if (verb_is_add(subtask.verb) && subtask.relation && *subtask.relation != "none" && subtask.anchor) {
    if (const Element* a = find_named(doc, *subtask.anchor)) {
      focused = relation_box(a->bbox, *subtask.relation);
      focus_desc = {*subtask.relation, *subtask.anchor};
    }
  } else if (subtask.target) {
    if (const Element* t = find_named(doc, *subtask.target)) {
      focused = snap_outward(t->bbox);
      focus_desc = {*subtask.target};
    }
  }
  // Random boxes are drawn unconditionally so their values do not depend on
  // whether the focused box exists.
  std::array<Rect, kBBoxProposals> random_boxes;
  for (auto& r : random_boxes) r = random_grid_box(rng);
  if (focused) {
    add(*focused, focus_desc);
  } else {
    add(random_boxes[0], {"region"});
  }
  add(random_boxes[1], {"region"});
  add(random_boxes[2], {"region"});

  RegionProposal uni{4, {}, {"union"}, std::string(tool_ids::kBBox), "union"};
  for (const auto& p : out) {
    uni.mask.push_back(p.mask.front());
    for (const auto& d : p.description)
      if (std::find(uni.description.begin(), uni.description.end(), d) == uni.description.end()) uni.description.push_back(d);
  }
  out.push_back(std::move(uni));
  return out;
}

std::vector<RegionProposal> run_analysis(const SceneDoc& doc, std::string_view tool, const SubTask& subtask,
                                         std::uint64_t seed) {
  if (tool == tool_ids::kSegment) return analyze_segments(doc);
  if (tool == tool_ids::kOcr) return analyze_text(doc);
  if (tool == tool_ids::kLayers) return analyze_layers(doc);
  if (tool == tool_ids::kBBox) return propose_goal_bboxes(doc, subtask, seed);
  if (!find_tool(tool)) throw Error(ErrorCode::UnknownTool, "unregistered tool '" + std::string(tool) + "'");
  throw Error(ErrorCode::Composition, std::string(tool) + " is not an analysis tool");
}

json to_json(const RegionProposal& p) {
  json mask = json::array();
  for (const auto& r : p.mask) mask.push_back(to_json(r));
  return json{{"index", p.index}, {"mask", mask}, {"description", p.description}, {"source_tool", p.source_tool},
              {"kind", p.kind}};
}

// --- execution ---

namespace {

std::string other_color(const std::string& current, Rng& rng) {
  auto colors = vocab::colors();
  std::string c;
  do {
    c = std::string(colors[rng.below(colors.size())]);
  } while (c == current);
  return c;
}

// Applies the verb's intended change. `placement` is used by add verbs.
// Returns the id of the touched or created element (may be empty).
std::string apply_intended(SceneDoc& doc, const SubTask& s, const std::optional<Rect>& placement, Rng& rng) {
  const std::string& v = s.verb;
  if (verb_is_add(v)) {
    if (!placement || placement->empty()) return {};
    Element e;
    e.id = doc.next_element_id();
    e.bbox = *placement;
    e.attrs["color"] = std::string(vocab::colors()[rng.below(vocab::colors().size())]);
    if (v == "add_object") {
      e.kind = ElementKind::Object;
      e.attrs["label"] = *s.payload;
      e.layer = 1;
    } else {
      e.kind = ElementKind::Text;
      e.attrs["content"] = *s.payload;
      e.attrs["font"] = "sans";
      e.layer = 0;
    }
    doc.elements.push_back(e);
    return e.id;
  }
  if (v == "recolor_background") {
    doc.background.color = *s.payload;
    return {};
  }
  if (v == "change_motif") {
    doc.background.motif = *s.payload;
    return {};
  }
  Pattern p = pattern_for_token(*s.target);
  auto it = std::find_if(doc.elements.begin(), doc.elements.end(), [&](const Element& e) { return p.matches(e); });
  if (it == doc.elements.end()) return {};
  const std::string id = it->id;
  if (v == "remove_object" || v == "remove_text") {
    doc.elements.erase(it);
  } else if (v == "replace_object" || v == "recolor_object") {
    it->attrs[v == "replace_object" ? "label" : "color"] = *s.payload;
  } else if (v == "change_font") {
    it->attrs["font"] = *s.payload;
  } else if (v == "replace_text") {
    auto words = it->content_words();
    std::string content;
    for (auto& w : words) {
      if (w == *s.target) w = *s.payload;
      content += (content.empty() ? "" : " ") + w;
    }
    it->attrs["content"] = content;
  }
  return id;
}

bool placement_overlaps(const SceneDoc& doc, const Rect& r, const std::string& except) {
  for (const auto& e : doc.elements)
    if (e.id != except && e.bbox.intersects(r)) return true;
  return false;
}

// Where a global editor puts a new element: the relation box when one
// exists, else the first clear 200x100 grid slot in scan order.
Rect global_placement(const SceneDoc& doc, const SubTask& s) {
  if (s.relation && *s.relation != "none" && s.anchor)
    if (const Element* a = find_named(doc, *s.anchor))
      if (auto box = relation_box(a->bbox, *s.relation)) return *box;
  for (int y = 0; y + kGridStep <= kCanvasSize; y += kGridStep)
    for (int x = 0; x + 2 * kGridStep <= kCanvasSize; x += kGridStep) {
      Rect r{x, y, x + 2 * kGridStep, y + kGridStep};
      if (!placement_overlaps(doc, r, {})) return r;
    }
  return Rect{0, 0, 2 * kGridStep, kGridStep};
}

// Placement inside a region: the mask bounds, shrunk around the centre to at
// most 300x300.
std::optional<Rect> region_placement(const Mask& mask) {
  if (mask.empty()) return std::nullopt;
  Rect b = mask_bounds(mask);
  if (b.empty()) return std::nullopt;
  auto shrink = [](int lo, int hi) {
    if (hi - lo <= 300) return std::make_pair(lo, hi);
    int mid = (lo + hi) / 2;
    return std::make_pair(mid - 150, mid + 150);
  };
  auto [x0, x1] = shrink(b.x0, b.x1);
  auto [y0, y1] = shrink(b.y0, b.y1);
  return Rect{x0, y0, x1, y1};
}

std::string defect_tag(const std::string& verb, bool region) {
  if (verb == "add_text" || verb_targets_text(verb)) return "garbled_text";
  return region ? "seam" : "blur";
}

}  // namespace

SceneDoc execute_tool(const SceneDoc& doc, const ToolCall& call, const std::vector<RegionProposal>* analysis,
                      const SubTask& subtask, std::uint64_t seed, const ProfileSet& profiles) {
  const ToolSpec* spec = find_tool(call.tool);
  if (!spec) throw Error(ErrorCode::UnknownTool, "unregistered tool '" + call.tool + "'");
  if (!vocab::is_verb(subtask.verb)) throw Error(ErrorCode::Verb, "unsupported verb '" + subtask.verb + "'");
  if (spec->role == ToolRole::Analysis)
    throw Error(ErrorCode::Composition, call.tool + " returns regions; pass its result to " + std::string(tool_ids::kInpaint));

  const ToolProfile& profile = profiles.at(call.tool);
  Rng rng(seed);
  SceneDoc out = doc;
  const std::string& verb = subtask.verb;
  const bool region = spec->role == ToolRole::RegionEditor;

  std::optional<Mask> reach;  // dilated mask; nullopt means whole scene
  std::optional<Rect> placement;
  bool applicable = true;
  if (region) {
    if (!analysis) throw Error(ErrorCode::Composition, "region editor requires an analysis result");
    if (!call.region_number) throw Error(ErrorCode::Schema, "region editor requires region_number", "arguments.region_number");
    const int n = *call.region_number;
    if (n < 1 || static_cast<std::size_t>(n) > analysis->size())
      throw Error(ErrorCode::Index, "region " + std::to_string(n) + " not in analysis of size " + std::to_string(analysis->size()));
    const Mask& mask = (*analysis)[static_cast<std::size_t>(n - 1)].mask;
    reach = dilate_mask(mask, kMaskDilation);
    if (verb_is_add(verb)) {
      placement = region_placement(mask);
      applicable = placement.has_value();
    } else if (verb_is_background(verb)) {
      applicable = mask_area_upper(mask) * 2 >= static_cast<long long>(kCanvasSize) * kCanvasSize;
    } else {
      const Element* t = find_named(doc, *subtask.target);
      applicable = t && mask_intersects(mask, t->bbox);
    }
  } else {
    if (analysis) throw Error(ErrorCode::Composition, call.tool + " is a standalone editor and takes no regions");
    if (call.region_number) throw Error(ErrorCode::Schema, "global editors take no region", "arguments.region_number");
    if (verb_is_add(verb)) placement = global_placement(doc, subtask);
  }

  // Fixed draw order: success, clutter, defect, then collateral per element.
  const bool success = rng.bernoulli(profile.success.at(verb));
  std::string touched;
  if (applicable && success) touched = apply_intended(out, subtask, placement, rng);
  if (!touched.empty() && verb_is_add(verb) && rng.bernoulli(profile.clutter) &&
      placement_overlaps(out, *placement, touched))
    out.defects.push_back(Defect{"clutter", touched, std::nullopt});
  if (rng.bernoulli(profile.defect.at(verb))) {
    Defect d{defect_tag(verb, region), std::nullopt, std::nullopt};
    if (!touched.empty() && out.find(touched))
      d.element = touched;
    else if (reach)
      d.rect = mask_bounds(*reach);
    else
      d.rect = Rect{0, 0, kCanvasSize, kCanvasSize};
    out.defects.push_back(d);
  }
  std::set<std::string> spared;
  if (subtask.target)
    if (const Element* t = find_named(doc, *subtask.target)) spared.insert(t->id);
  if (!touched.empty()) spared.insert(touched);
  for (auto& e : out.elements) {
    if (spared.count(e.id)) continue;
    if (reach && !mask_intersects(*reach, e.bbox)) continue;
    if (rng.bernoulli(profile.collateral)) e.attrs["color"] = other_color(e.attrs["color"], rng);
  }
  return out;
}

}  // namespace editorch
