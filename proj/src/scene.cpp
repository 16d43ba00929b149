#include "editorch/scene.hpp"

#include <algorithm>
#include <sstream>

#include "editorch/vocab.hpp"

namespace editorch {

Rect Rect::dilated(int by) const {
  if (empty()) return *this;
  return Rect{x0 - by, y0 - by, x1 + by, y1 + by}.clipped_to_canvas();
}

Rect Rect::clipped_to_canvas() const {
  return Rect{std::clamp(x0, 0, kCanvasSize), std::clamp(y0, 0, kCanvasSize), std::clamp(x1, 0, kCanvasSize),
              std::clamp(y1, 0, kCanvasSize)};
}

Rect Rect::bounding_union(const Rect& o) const {
  if (empty()) return o;
  if (o.empty()) return *this;
  return Rect{std::min(x0, o.x0), std::min(y0, o.y0), std::max(x1, o.x1), std::max(y1, o.y1)};
}

bool mask_intersects(const Mask& m, const Rect& r) {
  return std::any_of(m.begin(), m.end(), [&](const Rect& p) { return p.intersects(r); });
}

Rect mask_bounds(const Mask& m) {
  Rect out{0, 0, 0, 0};
  for (const auto& r : m) out = out.bounding_union(r);
  return out;
}

long long mask_area_upper(const Mask& m) {
  long long a = 0;
  for (const auto& r : m) a += r.area();
  return a;
}

Mask dilate_mask(const Mask& m, int by) {
  Mask out;
  out.reserve(m.size());
  for (const auto& r : m) out.push_back(r.dilated(by));
  return out;
}

std::string to_string(ElementKind k) {
  switch (k) {
    case ElementKind::Text: return "text";
    case ElementKind::Object: return "object";
    case ElementKind::Decoration: return "decoration";
  }
  return "object";
}

ElementKind element_kind_from(const std::string& s) {
  if (s == "text") return ElementKind::Text;
  if (s == "object") return ElementKind::Object;
  if (s == "decoration") return ElementKind::Decoration;
  throw Error(ErrorCode::Data, "unknown element kind: " + s);
}

std::vector<std::string> Element::content_words() const {
  std::vector<std::string> out;
  auto it = attrs.find("content");
  if (it == attrs.end()) return out;
  std::istringstream ss(it->second);
  for (std::string w; ss >> w;) out.push_back(w);
  return out;
}

std::string Element::name_token() const {
  switch (kind) {
    case ElementKind::Text: {
      auto w = content_words();
      return w.empty() ? std::string() : w.front();
    }
    case ElementKind::Object: return attrs.count("label") ? attrs.at("label") : std::string();
    case ElementKind::Decoration: return attrs.count("motif") ? attrs.at("motif") : std::string();
  }
  return {};
}

const Element* SceneDoc::find(const std::string& id) const {
  for (const auto& e : elements)
    if (e.id == id) return &e;
  return nullptr;
}

std::string SceneDoc::next_element_id() const {
  int best = 0;
  for (const auto& e : elements) {
    if (e.id.size() > 1 && e.id[0] == 'e') {
      try {
        best = std::max(best, std::stoi(e.id.substr(1)));
      } catch (...) {
      }
    }
  }
  return "e" + std::to_string(best + 1);
}

namespace {

bool attr_key_allowed(const std::string& kind, const std::string& key) {
  if (kind == "text") return key == "content" || key == "color" || key == "font";
  if (kind == "object") return key == "label" || key == "color";
  if (kind == "decoration") return key == "motif" || key == "color";
  if (kind == "background") return key == "color" || key == "motif";
  return false;
}

bool attr_value_allowed(const std::string& key, const std::string& value) {
  if (key == "color") return vocab::is_color(value);
  if (key == "label") return vocab::is_label(value);
  if (key == "motif") return vocab::is_motif(value);
  if (key == "font") return vocab::is_font(value);
  if (key == "content") {
    std::istringstream ss(value);
    bool any = false;
    for (std::string w; ss >> w;) {
      if (!vocab::is_word(w)) return false;
      any = true;
    }
    return any;
  }
  return false;
}

}  // namespace

void validate(const SceneDoc& doc) {
  if (doc.width <= 0 || doc.height <= 0) throw Error(ErrorCode::Data, "canvas must be positive");
  std::set<std::string> ids;
  for (const auto& e : doc.elements) {
    if (!ids.insert(e.id).second) throw Error(ErrorCode::Data, "duplicate element id " + e.id);
    const auto& b = e.bbox;
    if (!(b.x0 < b.x1 && b.y0 < b.y1)) throw Error(ErrorCode::Data, "degenerate bbox on " + e.id);
    if (b.x0 < 0 || b.y0 < 0 || b.x1 > doc.width || b.y1 > doc.height)
      throw Error(ErrorCode::Data, "bbox outside canvas on " + e.id);
    if (e.layer < 0 || e.layer >= kLayerBands) throw Error(ErrorCode::Data, "layer out of range on " + e.id);
    const std::string kind = to_string(e.kind);
    for (const auto& [k, v] : e.attrs) {
      if (!attr_key_allowed(kind, k)) throw Error(ErrorCode::Data, "attr " + k + " not allowed on " + kind);
      if (!attr_value_allowed(k, v)) throw Error(ErrorCode::Data, "bad value for " + k + " on " + e.id);
    }
    if (e.kind == ElementKind::Text && !e.attrs.count("content"))
      throw Error(ErrorCode::Data, "text element without content: " + e.id);
  }
}

bool Pattern::matches(const Element& e) const {
  if (kind != to_string(e.kind)) return false;
  if (id && *id != e.id) return false;
  for (const auto& [k, v] : attrs) {
    if (k == "content") {
      auto words = e.content_words();
      if (std::find(words.begin(), words.end(), v) == words.end()) return false;
    } else {
      auto it = e.attrs.find(k);
      if (it == e.attrs.end() || it->second != v) return false;
    }
  }
  return true;
}

bool Pattern::matches(const Background& b) const {
  if (kind != "background") return false;
  for (const auto& [k, v] : attrs) {
    if (k == "color" && b.color != v) return false;
    if (k == "motif" && b.motif != v) return false;
  }
  return true;
}

std::string to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::Preserve: return "preserve";
    case ConstraintKind::Remove: return "remove";
    case ConstraintKind::Replace: return "replace";
    case ConstraintKind::Add: return "add";
    case ConstraintKind::Relation: return "relation";
  }
  return "add";
}

ConstraintKind constraint_kind_from(const std::string& s) {
  if (s == "preserve") return ConstraintKind::Preserve;
  if (s == "remove") return ConstraintKind::Remove;
  if (s == "replace") return ConstraintKind::Replace;
  if (s == "add") return ConstraintKind::Add;
  if (s == "relation") return ConstraintKind::Relation;
  throw Error(ErrorCode::Data, "unknown constraint kind: " + s);
}

namespace {

std::vector<std::string> pattern_tokens(const Pattern& p) {
  std::vector<std::string> out{p.kind};
  if (p.id) out.push_back(*p.id);
  for (const auto& [k, v] : p.attrs) out.push_back(v);
  return out;
}

void check_pattern(const Pattern& p, const std::string& where) {
  static const std::set<std::string> kinds = {"text", "object", "decoration", "background"};
  if (!kinds.count(p.kind)) throw Error(ErrorCode::Selector, "unknown selector kind '" + p.kind + "'", where);
  for (const auto& [k, v] : p.attrs) {
    if (!attr_key_allowed(p.kind, k)) throw Error(ErrorCode::Selector, "attr '" + k + "' not valid for " + p.kind, where);
    if (!attr_value_allowed(k, v)) throw Error(ErrorCode::Selector, "value '" + v + "' not valid for " + k, where);
  }
  if (!p.id && p.attrs.empty() && p.kind != "background")
    throw Error(ErrorCode::Selector, "selector matches nothing specific", where);
}

}  // namespace

ChecklistItem checklist_item_for(const Constraint& c) {
  ChecklistItem item;
  item.criterion = c.kind == ConstraintKind::Relation ? "constraint" : to_string(c.kind);
  item.detail = pattern_tokens(c.subject);
  if (c.replacement) {
    item.detail.push_back("->");
    for (auto& t : pattern_tokens(*c.replacement)) item.detail.push_back(t);
  }
  if (c.relation) {
    item.detail.push_back(*c.relation);
    if (c.other)
      for (auto& t : pattern_tokens(*c.other)) item.detail.push_back(t);
  }
  return item;
}

void check_selector(const Constraint& c) {
  check_pattern(c.subject, "subject");
  switch (c.kind) {
    case ConstraintKind::Preserve:
      if (!c.reference) throw Error(ErrorCode::Selector, "preserve without reference", "reference");
      if (!c.subject.id) throw Error(ErrorCode::Selector, "preserve needs an element id", "subject.id");
      break;
    case ConstraintKind::Replace:
      if (!c.replacement) throw Error(ErrorCode::Selector, "replace without new payload", "replacement");
      check_pattern(*c.replacement, "replacement");
      break;
    case ConstraintKind::Relation: {
      static const std::set<std::string> rels = {"above", "below", "left_of", "right_of", "inside"};
      if (!c.relation || !rels.count(*c.relation)) throw Error(ErrorCode::Selector, "bad relation", "relation");
      if (!c.other) throw Error(ErrorCode::Selector, "relation needs two subjects", "other");
      check_pattern(*c.other, "other");
      if (c.subject.kind == "background" || c.other->kind == "background")
        throw Error(ErrorCode::Selector, "relation on background", "subject");
      break;
    }
    case ConstraintKind::Add:
      if (c.subject.kind == "background") throw Error(ErrorCode::Selector, "cannot add a background", "subject");
      break;
    case ConstraintKind::Remove:
      break;
  }
}

bool relation_holds(const std::string& relation, const Rect& a, const Rect& b) {
  if (relation == "above") return a.y1 <= b.y0;
  if (relation == "below") return a.y0 >= b.y1;
  if (relation == "left_of") return a.x1 <= b.x0;
  if (relation == "right_of") return a.x0 >= b.x1;
  if (relation == "inside") return b.contains(a);
  return false;
}

namespace {

int floor_grid(int v) { return (v / kGridStep) * kGridStep; }
int ceil_grid(int v) { return ((v + kGridStep - 1) / kGridStep) * kGridStep; }

}  // namespace

Rect snap_outward(const Rect& r) {
  return Rect{floor_grid(r.x0), floor_grid(r.y0), ceil_grid(r.x1), ceil_grid(r.y1)}.clipped_to_canvas();
}

std::optional<Rect> relation_box(const Rect& a, const std::string& relation) {
  Rect box;
  if (relation == "above" || relation == "below") {
    box.x0 = floor_grid(a.x0);
    box.x1 = std::min(kCanvasSize, box.x0 + 2 * kGridStep);
    if (relation == "above") {
      box.y1 = floor_grid(a.y0);
      box.y0 = box.y1 - kGridStep;
    } else {
      box.y0 = ceil_grid(a.y1);
      box.y1 = box.y0 + kGridStep;
    }
  } else if (relation == "left_of" || relation == "right_of") {
    box.y0 = floor_grid(a.y0);
    box.y1 = std::min(kCanvasSize, box.y0 + kGridStep);
    if (relation == "left_of") {
      box.x1 = floor_grid(a.x0);
      box.x0 = box.x1 - 2 * kGridStep;
    } else {
      box.x0 = ceil_grid(a.x1);
      box.x1 = box.x0 + 2 * kGridStep;
    }
  } else {
    return std::nullopt;
  }
  if (box.x0 < 0 || box.y0 < 0 || box.x1 > kCanvasSize || box.y1 > kCanvasSize || box.empty()) return std::nullopt;
  return box;
}

namespace {

bool any_match(const SceneDoc& doc, const Pattern& p) {
  if (p.kind == "background") return p.matches(doc.background);
  return std::any_of(doc.elements.begin(), doc.elements.end(), [&](const Element& e) { return p.matches(e); });
}

}  // namespace

bool constraint_satisfied(const SceneDoc& doc, const Constraint& c) {
  switch (c.kind) {
    case ConstraintKind::Preserve: {
      const Element* e = doc.find(c.reference->id);
      return e && *e == *c.reference;
    }
    case ConstraintKind::Remove: return !any_match(doc, c.subject);
    case ConstraintKind::Replace: return !any_match(doc, c.subject) && any_match(doc, *c.replacement);
    case ConstraintKind::Add: return any_match(doc, c.subject);
    case ConstraintKind::Relation:
      for (const auto& a : doc.elements) {
        if (!c.subject.matches(a)) continue;
        for (const auto& b : doc.elements) {
          if (&a == &b || !c.other->matches(b)) continue;
          if (relation_holds(*c.relation, a.bbox, b.bbox)) return true;
        }
      }
      return false;
  }
  return false;
}

double constraint_satisfaction(const SceneDoc& doc, const std::vector<Constraint>& goal) {
  if (goal.empty()) throw Error(ErrorCode::Data, "empty goal");
  std::size_t ok = 0;
  for (const auto& c : goal) {
    check_selector(c);
    if (constraint_satisfied(doc, c)) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(goal.size());
}

double diff_untouched(const SceneDoc& before, const SceneDoc& after, const std::set<std::string>& edited) {
  std::size_t total = 0, same = 0;
  for (const auto& e : before.elements) {
    if (edited.count(e.id)) continue;
    ++total;
    const Element* a = after.find(e.id);
    if (a && *a == e) ++same;
  }
  return total == 0 ? 1.0 : static_cast<double>(same) / static_cast<double>(total);
}

std::set<std::string> edited_subjects(const SceneDoc& before, const std::vector<Constraint>& goal) {
  std::set<std::string> out;
  for (const auto& c : goal) {
    if (c.kind != ConstraintKind::Remove && c.kind != ConstraintKind::Replace) continue;
    for (const auto& e : before.elements)
      if (c.subject.matches(e)) out.insert(e.id);
  }
  return out;
}

// --- serialization ---

json to_json(const Rect& r) { return json::array({r.x0, r.y0, r.x1, r.y1}); }

Rect rect_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorCode::Data, "rect must be [x0,y0,x1,y1]");
  return Rect{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

json to_json(const Element& e) {
  return json{{"id", e.id}, {"kind", to_string(e.kind)}, {"bbox", to_json(e.bbox)}, {"layer", e.layer}, {"attrs", e.attrs}};
}

Element element_from_json(const json& j) {
  Element e;
  e.id = j.at("id").get<std::string>();
  e.kind = element_kind_from(j.at("kind").get<std::string>());
  e.bbox = rect_from_json(j.at("bbox"));
  e.layer = j.at("layer").get<int>();
  e.attrs = j.at("attrs").get<std::map<std::string, std::string>>();
  return e;
}

json to_json(const SceneDoc& d) {
  json elements = json::array();
  for (const auto& e : d.elements) elements.push_back(to_json(e));
  json defects = json::array();
  for (const auto& f : d.defects) {
    json dj{{"tag", f.tag}};
    if (f.element) dj["element"] = *f.element;
    if (f.rect) dj["rect"] = to_json(*f.rect);
    defects.push_back(dj);
  }
  return json{{"width", d.width},
              {"height", d.height},
              {"background", {{"color", d.background.color}, {"motif", d.background.motif}}},
              {"elements", elements},
              {"defects", defects}};
}

SceneDoc scene_from_json(const json& j) {
  try {
    SceneDoc d;
    d.width = j.at("width").get<int>();
    d.height = j.at("height").get<int>();
    d.background.color = j.at("background").at("color").get<std::string>();
    d.background.motif = j.at("background").at("motif").get<std::string>();
    for (const auto& e : j.at("elements")) d.elements.push_back(element_from_json(e));
    for (const auto& f : j.at("defects")) {
      Defect df;
      df.tag = f.at("tag").get<std::string>();
      if (f.contains("element")) df.element = f.at("element").get<std::string>();
      if (f.contains("rect")) df.rect = rect_from_json(f.at("rect"));
      d.defects.push_back(df);
    }
    return d;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Data, std::string("malformed scene: ") + e.what());
  }
}

json to_json(const Pattern& p) {
  json j{{"kind", p.kind}, {"attrs", p.attrs}};
  if (p.id) j["id"] = *p.id;
  return j;
}

Pattern pattern_from_json(const json& j) {
  Pattern p;
  p.kind = j.at("kind").get<std::string>();
  if (j.contains("id")) p.id = j.at("id").get<std::string>();
  p.attrs = j.at("attrs").get<std::map<std::string, std::string>>();
  return p;
}

json to_json(const Constraint& c) {
  json j{{"kind", to_string(c.kind)}, {"subject", to_json(c.subject)}};
  if (c.replacement) j["replacement"] = to_json(*c.replacement);
  if (c.relation) j["relation"] = *c.relation;
  if (c.other) j["other"] = to_json(*c.other);
  if (c.reference) j["reference"] = to_json(*c.reference);
  return j;
}

Constraint constraint_from_json(const json& j) {
  Constraint c;
  c.kind = constraint_kind_from(j.at("kind").get<std::string>());
  c.subject = pattern_from_json(j.at("subject"));
  if (j.contains("replacement")) c.replacement = pattern_from_json(j.at("replacement"));
  if (j.contains("relation")) c.relation = j.at("relation").get<std::string>();
  if (j.contains("other")) c.other = pattern_from_json(j.at("other"));
  if (j.contains("reference")) c.reference = element_from_json(j.at("reference"));
  return c;
}

json to_json(const Instruction& i) {
  json goal = json::array();
  for (const auto& c : i.goal) goal.push_back(to_json(c));
  return json{{"id", i.id}, {"category", i.category}, {"params", i.params}, {"goal", goal}};
}

Instruction instruction_from_json(const json& j) {
  Instruction i;
  i.id = j.at("id").get<std::string>();
  i.category = j.at("category").get<std::string>();
  i.params = j.at("params").get<std::vector<std::string>>();
  for (const auto& c : j.at("goal")) i.goal.push_back(constraint_from_json(c));
  return i;
}

json to_json(const Checklist& c) {
  json items = json::array();
  for (const auto& it : c.items) items.push_back(json{{"criterion", it.criterion}, {"detail", it.detail}});
  return json{{"items", items}};
}

Checklist checklist_from_json(const json& j) {
  Checklist c;
  for (const auto& it : j.at("items"))
    c.items.push_back(ChecklistItem{it.at("criterion").get<std::string>(), it.at("detail").get<std::vector<std::string>>()});
  return c;
}

std::string serialize(const SceneDoc& d) { return canonical_dump(to_json(d)); }

SceneDoc deserialize_scene(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
  return scene_from_json(j);
}

std::uint64_t scene_digest(const SceneDoc& d) { return fnv1a64(serialize(d)); }

}  // namespace editorch
