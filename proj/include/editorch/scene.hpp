#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "editorch/common.hpp"

namespace editorch {

inline constexpr int kCanvasSize = 1000;
inline constexpr int kLayerBands = 4;

struct Rect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  long long area() const { return empty() ? 0 : static_cast<long long>(width()) * height(); }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool intersects(const Rect& o) const {
    return !empty() && !o.empty() && x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
  }
  bool contains(const Rect& o) const { return x0 <= o.x0 && y0 <= o.y0 && o.x1 <= x1 && o.y1 <= y1; }
  Rect dilated(int by) const;
  Rect clipped_to_canvas() const;
  Rect bounding_union(const Rect& o) const;

  friend bool operator==(const Rect&, const Rect&) = default;
};

// Union of rectangles, all within the canvas. Empty list means an empty mask.
using Mask = std::vector<Rect>;

bool mask_intersects(const Mask& m, const Rect& r);
Rect mask_bounds(const Mask& m);
long long mask_area_upper(const Mask& m);  // sum of member areas
Mask dilate_mask(const Mask& m, int by);

enum class ElementKind { Text, Object, Decoration };

std::string to_string(ElementKind k);
ElementKind element_kind_from(const std::string& s);

// attrs schema per kind:
//   text:       content (space separated word tokens), color, font
//   object:     label, color
//   decoration: motif, color
struct Element {
  std::string id;
  ElementKind kind = ElementKind::Object;
  Rect bbox;
  int layer = 0;
  std::map<std::string, std::string> attrs;

  std::vector<std::string> content_words() const;
  // Token that names this element in plans: label for objects, first content
  // word for text, motif for decorations.
  std::string name_token() const;

  friend bool operator==(const Element&, const Element&) = default;
};

struct Defect {
  std::string tag;  // garbled_text | seam | clutter | blur
  std::optional<std::string> element;
  std::optional<Rect> rect;

  friend bool operator==(const Defect&, const Defect&) = default;
};

struct Background {
  std::string color;
  std::string motif;
  friend bool operator==(const Background&, const Background&) = default;
};

struct SceneDoc {
  int width = kCanvasSize;
  int height = kCanvasSize;
  Background background;
  std::vector<Element> elements;
  std::vector<Defect> defects;

  const Element* find(const std::string& id) const;
  std::string next_element_id() const;
  friend bool operator==(const SceneDoc&, const SceneDoc&) = default;
};

// Throws Data error on an invariant violation.
void validate(const SceneDoc& doc);

// Selector over scene content. kind is one of text|object|decoration|background.
// For text, attrs["content"] matches when the content contains that word.
struct Pattern {
  std::string kind;
  std::optional<std::string> id;
  std::map<std::string, std::string> attrs;

  bool matches(const Element& e) const;
  bool matches(const Background& b) const;
  friend bool operator==(const Pattern&, const Pattern&) = default;
  friend auto operator<=>(const Pattern&, const Pattern&) = default;
};

enum class ConstraintKind { Preserve, Remove, Replace, Add, Relation };

std::string to_string(ConstraintKind k);
ConstraintKind constraint_kind_from(const std::string& s);

struct Constraint {
  ConstraintKind kind = ConstraintKind::Add;
  Pattern subject;
  std::optional<Pattern> replacement;  // replace: the new payload
  std::optional<std::string> relation; // relation: above|below|left_of|right_of|inside
  std::optional<Pattern> other;        // relation: second subject
  std::optional<Element> reference;    // preserve: stored snapshot

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

struct Instruction {
  std::string id;
  std::string category;
  std::vector<std::string> params;
  std::vector<Constraint> goal;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct ChecklistItem {
  std::string criterion;  // preserve|remove|replace|add|constraint
  std::vector<std::string> detail;
  friend bool operator==(const ChecklistItem&, const ChecklistItem&) = default;
};

struct Checklist {
  std::vector<ChecklistItem> items;
  friend bool operator==(const Checklist&, const Checklist&) = default;
};

ChecklistItem checklist_item_for(const Constraint& c);

// Selector well-formedness; throws Selector error.
void check_selector(const Constraint& c);

bool relation_holds(const std::string& relation, const Rect& a, const Rect& b);

inline constexpr int kGridStep = 100;  // 10% of the canvas

// Smallest grid-aligned rectangle containing r.
Rect snap_outward(const Rect& r);

// Grid-aligned placement box adjacent to `anchor` that satisfies `relation`
// (above/below/left_of/right_of), or nullopt when the canvas has no room.
std::optional<Rect> relation_box(const Rect& anchor, const std::string& relation);
bool constraint_satisfied(const SceneDoc& doc, const Constraint& c);

// Fraction of satisfied constraints. Throws Selector error on a malformed selector.
double constraint_satisfaction(const SceneDoc& doc, const std::vector<Constraint>& goal);

// Fraction of elements of `before` whose id is not in `edited` that are
// identical in `after`. 1.0 when no such elements exist.
double diff_untouched(const SceneDoc& before, const SceneDoc& after, const std::set<std::string>& edited);

// Element ids in `before` referenced by the subjects of non-preserve constraints.
std::set<std::string> edited_subjects(const SceneDoc& before, const std::vector<Constraint>& goal);

// --- serialization (canonical JSON, sorted keys) ---
json to_json(const Rect& r);
Rect rect_from_json(const json& j);
json to_json(const Element& e);
Element element_from_json(const json& j);
json to_json(const SceneDoc& d);
SceneDoc scene_from_json(const json& j);
json to_json(const Pattern& p);
Pattern pattern_from_json(const json& j);
json to_json(const Constraint& c);
Constraint constraint_from_json(const json& j);
json to_json(const Instruction& i);
Instruction instruction_from_json(const json& j);
json to_json(const Checklist& c);
Checklist checklist_from_json(const json& j);

std::string serialize(const SceneDoc& d);
SceneDoc deserialize_scene(const std::string& text);

// Stable content hash of the canonical serialization (FNV-1a 64).
std::uint64_t scene_digest(const SceneDoc& d);

}  // namespace editorch
