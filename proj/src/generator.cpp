#include "editorch/generator.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "editorch/subtask.hpp"
#include "editorch/vocab.hpp"

namespace editorch {

std::string to_string(Difficulty d) { return d == Difficulty::Small ? "small" : "medium"; }

Difficulty difficulty_from(const std::string& s) {
  if (s == "small") return Difficulty::Small;
  if (s == "medium") return Difficulty::Medium;
  throw Error(ErrorCode::Config, "unknown difficulty " + s);
}

namespace {

struct Theme {
  std::string category;
  std::string name;
  std::vector<std::string> colors;
  std::vector<std::string> objects;
  std::vector<std::string> words;
  std::string motif;
  std::vector<std::string> unwanted;  // objects an audience theme removes
};

const std::vector<Theme>& themes() {
  static const std::vector<Theme> t = {
      {"festival_adapt", "diwali", {"gold", "orange"}, {"lantern", "candle"}, {"diwali", "festive"}, "lights", {}},
      {"festival_adapt", "christmas", {"red", "green"}, {"tree", "gift", "star"}, {"christmas", "holiday"}, "snow", {}},
      {"festival_adapt", "halloween", {"orange", "purple"}, {"pumpkin", "candle"}, {"halloween", "spooky"}, "leaves", {}},
      {"audience_retarget", "vegan", {"green"}, {"salad", "fruit", "plant"}, {"vegan", "organic", "fresh"}, "leaves",
       {"steak", "burger", "pizza"}},
      {"audience_retarget", "business", {"blue", "silver"}, {"laptop", "phone", "watch", "book"},
       {"business", "office", "travel", "premium"}, "stripes", {"cake", "pillow", "gift"}},
      {"audience_retarget", "kids", {"yellow", "pink"}, {"cake", "gift", "star"}, {"kids", "family"}, "dots",
       {"watch", "laptop", "bottle"}},
  };
  return t;
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[rng.below(v.size())];
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::vector<std::string> to_strings(std::span<const std::string_view> s) {
  return std::vector<std::string>(s.begin(), s.end());
}

struct Builder {
  Rng rng;
  Difficulty difficulty;
  SceneDoc doc;
  Theme theme;
  std::string swap_old, swap_new;
  std::set<std::string> locked;          // elements touched by an edit or used as an anchor
  std::vector<Rect> planned_placements;  // boxes reserved for added elements
  std::vector<Constraint> goal;
  std::set<std::string> used_tokens;     // labels/words present or to be added

  explicit Builder(std::uint64_t seed, Difficulty d) : rng(derive_seed(seed, d == Difficulty::Small ? 1 : 2)), difficulty(d) {}

  std::string fresh_from(std::vector<std::string> pool) {
    shuffle(pool, rng);
    for (auto& t : pool)
      if (!used_tokens.count(t)) {
        used_tokens.insert(t);
        return t;
      }
    return {};
  }

  void build_scene() {
    const std::size_t n = difficulty == Difficulty::Small ? 3 + rng.below(3) : 6 + rng.below(7);
    doc.background.color = pick(to_strings(vocab::colors()), rng);
    doc.background.motif = pick(to_strings(vocab::motifs()), rng);

    std::vector<int> cells(16);
    for (int i = 0; i < 16; ++i) cells[static_cast<std::size_t>(i)] = i;
    shuffle(cells, rng);

    // Reserve theme tokens so additions are genuinely new.
    for (auto& o : theme.objects) used_tokens.insert(o);
    for (auto& w : theme.words) used_tokens.insert(w);
    if (!swap_new.empty()) used_tokens.insert(swap_new);

    std::vector<std::string> labels = to_strings(vocab::labels());
    std::vector<std::string> words = to_strings(vocab::words());
    for (std::size_t i = 0; i < n; ++i) {
      const int cell = cells[i];
      const int cx = cell % 4, cy = cell / 4;
      auto inset = [&] { return 20 + 10 * static_cast<int>(rng.below(6)); };
      Element e;
      e.id = "e" + std::to_string(i + 1);
      e.bbox = Rect{cx * 250 + inset(), cy * 250 + inset(), (cx + 1) * 250 - inset(), (cy + 1) * 250 - inset()};
      if (i == 0) {
        e.kind = ElementKind::Text;
      } else if (i == 1) {
        e.kind = ElementKind::Object;
      } else {
        const double u = rng.uniform();
        e.kind = u < 0.3 ? ElementKind::Text : (u < 0.8 ? ElementKind::Object : ElementKind::Decoration);
      }
      e.attrs["color"] = pick(to_strings(vocab::colors()), rng);
      switch (e.kind) {
        case ElementKind::Text: {
          std::string content = fresh_from(words);
          if (rng.bernoulli(0.4)) {
            std::string second = fresh_from(words);
            if (!second.empty()) content += " " + second;
          }
          e.attrs["content"] = content;
          e.attrs["font"] = pick(to_strings(vocab::fonts()), rng);
          e.layer = 0;
          break;
        }
        case ElementKind::Object: {
          std::string label;
          if (i == 1 && !swap_old.empty()) {
            label = swap_old;
            used_tokens.insert(label);
          } else if (i == 1 && !theme.unwanted.empty() && rng.bernoulli(0.7)) {
            label = fresh_from(theme.unwanted);
          }
          if (label.empty()) label = fresh_from(labels);
          e.attrs["label"] = label;
          e.layer = 1 + static_cast<int>(rng.below(2));
          break;
        }
        case ElementKind::Decoration:
          e.attrs["motif"] = pick(to_strings(vocab::motifs()), rng);
          e.layer = 3;
          break;
      }
      doc.elements.push_back(std::move(e));
    }
  }

  std::vector<const Element*> free_elements(ElementKind kind) const {
    std::vector<const Element*> out;
    for (const auto& e : doc.elements)
      if (e.kind == kind && !locked.count(e.id)) out.push_back(&e);
    return out;
  }

  bool placement_clear(const Rect& box) const {
    for (const auto& e : doc.elements)
      if (e.bbox.intersects(box)) return false;
    for (const auto& p : planned_placements)
      if (p.intersects(box)) return false;
    return true;
  }

  // Picks an anchor/relation with a clear placement box, or nothing.
  std::optional<std::pair<const Element*, std::string>> choose_relation() {
    if (!rng.bernoulli(0.6)) return std::nullopt;
    std::vector<const Element*> anchors;
    for (const auto& e : doc.elements)
      if (e.kind != ElementKind::Decoration && !locked.count(e.id)) anchors.push_back(&e);
    shuffle(anchors, rng);
    std::vector<std::string> rels = {"above", "below", "left_of", "right_of"};
    for (const Element* a : anchors) {
      shuffle(rels, rng);
      for (const auto& r : rels) {
        auto box = relation_box(a->bbox, r);
        if (box && placement_clear(*box)) {
          planned_placements.push_back(*box);
          return std::make_pair(a, r);
        }
      }
    }
    return std::nullopt;
  }

  // Each edit appends its constraints; returns false when not applicable.
  bool edit_add(bool object) {
    std::string token = object ? fresh_from(theme.objects.empty() ? to_strings(vocab::labels()) : theme.objects)
                               : fresh_from(theme.words.empty() ? std::vector<std::string>{"new", "premium", "deal", "today"}
                                                                 : theme.words);
    if (token.empty()) return false;
    Pattern added = object ? Pattern{"object", std::nullopt, {{"label", token}}}
                           : Pattern{"text", std::nullopt, {{"content", token}}};
    goal.push_back(Constraint{ConstraintKind::Add, added, {}, {}, {}, {}});
    if (auto rel = choose_relation()) {
      locked.insert(rel->first->id);
      goal.push_back(Constraint{ConstraintKind::Relation, added, {}, rel->second, pattern_for_token(rel->first->name_token()), {}});
    }
    return true;
  }

  bool edit_remove_unwanted() {
    for (const Element* e : free_elements(ElementKind::Object)) {
      if (contains(theme.unwanted, e->attrs.at("label"))) {
        locked.insert(e->id);
        goal.push_back(Constraint{ConstraintKind::Remove, pattern_for_token(e->name_token()), {}, {}, {}, {}});
        return true;
      }
    }
    return false;
  }

  bool edit_replace_object(const std::string& forced_old, const std::string& forced_new) {
    const Element* target = nullptr;
    for (const Element* e : free_elements(ElementKind::Object)) {
      if (forced_old.empty() || e->attrs.at("label") == forced_old) {
        target = e;
        break;
      }
    }
    if (!target) return false;
    std::string replacement = forced_new.empty() ? fresh_from(theme.objects) : forced_new;
    if (replacement.empty()) return false;
    locked.insert(target->id);
    goal.push_back(Constraint{ConstraintKind::Replace, pattern_for_token(target->name_token()),
                              pattern_for_token(replacement), {}, {}, {}});
    return true;
  }

  bool edit_replace_text(const std::vector<std::string>& pool) {
    auto texts = free_elements(ElementKind::Text);
    if (texts.empty()) return false;
    const Element* target = texts[rng.below(texts.size())];
    std::string replacement = fresh_from(pool);
    if (replacement.empty()) return false;
    locked.insert(target->id);
    goal.push_back(Constraint{ConstraintKind::Replace, pattern_for_token(target->name_token()),
                              pattern_for_token(replacement), {}, {}, {}});
    return true;
  }

  bool edit_recolor_object(const std::vector<std::string>& colors) {
    auto objects = free_elements(ElementKind::Object);
    if (objects.empty()) return false;
    const Element* target = objects[rng.below(objects.size())];
    std::vector<std::string> options;
    for (const auto& c : colors)
      if (c != target->attrs.at("color")) options.push_back(c);
    if (options.empty()) return false;
    const std::string color = pick(options, rng);
    locked.insert(target->id);
    Pattern original = pattern_for_token(target->name_token());
    Pattern wanted = original;
    original.attrs["color"] = target->attrs.at("color");
    wanted.attrs["color"] = color;
    goal.push_back(Constraint{ConstraintKind::Replace, original, wanted, {}, {}, {}});
    return true;
  }

  bool edit_background(bool color) {
    if (locked.count("background")) return false;
    const std::string current = color ? doc.background.color : doc.background.motif;
    std::vector<std::string> options;
    if (color) {
      for (const auto& c : theme.colors)
        if (c != current) options.push_back(c);
    } else if (theme.motif != current) {
      options.push_back(theme.motif);
    }
    if (options.empty()) return false;
    locked.insert("background");
    const std::string key = color ? "color" : "motif";
    goal.push_back(Constraint{ConstraintKind::Replace, Pattern{"background", std::nullopt, {{key, current}}},
                              Pattern{"background", std::nullopt, {{key, pick(options, rng)}}}, {}, {}, {}});
    return true;
  }

  void build_goal() {
    const std::size_t edits = difficulty == Difficulty::Small ? 1 + rng.below(2) : 2 + rng.below(4);
    enum class E { AddObject, AddText, Remove, ReplaceObject, ReplaceText, Recolor, BgColor, BgMotif, Swap };
    std::vector<E> pool;
    if (theme.category == "festival_adapt") {
      pool = {E::BgColor, E::BgMotif, E::AddObject, E::AddText, E::ReplaceText, E::Recolor};
    } else if (theme.category == "audience_retarget") {
      pool = {E::Remove, E::ReplaceObject, E::ReplaceText, E::AddText, E::AddObject};
    } else {
      pool = {E::Recolor, E::ReplaceText, E::AddText};
    }
    shuffle(pool, rng);
    if (theme.category == "product_swap") pool.insert(pool.begin(), E::Swap);

    std::size_t done = 0;
    for (E e : pool) {
      if (done == edits) break;
      // Small instances stay within three plan steps and four constraints.
      if (difficulty == Difficulty::Small && goal.size() >= 2) break;
      bool ok = false;
      switch (e) {
        case E::AddObject: ok = edit_add(true); break;
        case E::AddText: ok = edit_add(false); break;
        case E::Remove: ok = edit_remove_unwanted(); break;
        case E::ReplaceObject: ok = edit_replace_object({}, {}); break;
        case E::ReplaceText: ok = edit_replace_text(theme.words.empty() ? std::vector<std::string>{"new", "premium"} : theme.words); break;
        case E::Recolor: ok = edit_recolor_object(theme.colors.empty() ? to_strings(vocab::colors()) : theme.colors); break;
        case E::BgColor: ok = edit_background(true); break;
        case E::BgMotif: ok = edit_background(false); break;
        case E::Swap: ok = edit_replace_object(swap_old, swap_new); break;
      }
      if (ok) ++done;
    }
    if (goal.empty() && !edit_add(false) && !edit_add(true) && !edit_recolor_object(to_strings(vocab::colors())))
      throw Error(ErrorCode::Data, "no applicable edit for this scene");

    std::vector<const Element*> keep;
    for (const auto& e : doc.elements)
      if (!locked.count(e.id)) keep.push_back(&e);
    shuffle(keep, rng);
    const std::size_t max_total = difficulty == Difficulty::Small ? 4 : 12;
    const std::size_t want = difficulty == Difficulty::Small ? 1 : 1 + rng.below(3);
    for (std::size_t i = 0; i < keep.size() && i < want && goal.size() < max_total; ++i) {
      Pattern p{to_string(keep[i]->kind), keep[i]->id, {}};
      goal.push_back(Constraint{ConstraintKind::Preserve, p, {}, {}, {}, *keep[i]});
    }
  }
};

}  // namespace

Instance generate_instance(std::uint64_t seed, Difficulty difficulty) {
  Builder b(seed, difficulty);
  const std::size_t category = b.rng.below(3);
  if (category == 2) {
    b.theme = Theme{"product_swap", "swap", {}, {}, {"new", "premium", "deal", "today"}, "plain", {}};
    std::vector<std::string> labels = to_strings(vocab::labels());
    shuffle(labels, b.rng);
    b.swap_old = labels[0];
    b.swap_new = labels[1];
    b.theme.colors = {"red", "blue", "gold", "silver"};
  } else {
    std::vector<Theme> options;
    for (const auto& t : themes())
      if (t.category == vocab::categories()[category]) options.push_back(t);
    b.theme = pick(options, b.rng);
  }
  b.build_scene();
  b.build_goal();

  Instance inst;
  inst.seed = seed;
  inst.difficulty = difficulty;
  inst.id = to_string(difficulty) + "-" + std::to_string(seed);
  inst.doc = std::move(b.doc);
  inst.instruction.id = inst.id;
  inst.instruction.category = b.theme.category;
  inst.instruction.params.push_back(b.theme.name);
  if (!b.swap_old.empty()) inst.instruction.params.push_back(b.swap_old);
  if (!b.swap_new.empty()) inst.instruction.params.push_back(b.swap_new);
  for (auto* list : {&b.theme.objects, &b.theme.words, &b.theme.colors})
    for (const auto& t : *list) inst.instruction.params.push_back(t);
  if (!b.theme.motif.empty()) inst.instruction.params.push_back(b.theme.motif);
  inst.instruction.goal = std::move(b.goal);
  for (const auto& c : inst.instruction.goal) inst.checklist.items.push_back(checklist_item_for(c));
  return inst;
}

json to_json(const Instance& inst) {
  return json{{"schema", "scene/1"},
              {"id", inst.id},
              {"seed", inst.seed},
              {"difficulty", to_string(inst.difficulty)},
              {"scene", to_json(inst.doc)},
              {"instruction", to_json(inst.instruction)},
              {"checklist", to_json(inst.checklist)}};
}

Instance instance_from_json(const json& j) {
  if (j.value("schema", "") != "scene/1") throw Error(ErrorCode::Data, "expected schema scene/1");
  Instance inst;
  inst.id = j.at("id").get<std::string>();
  inst.seed = j.at("seed").get<std::uint64_t>();
  inst.difficulty = difficulty_from(j.at("difficulty").get<std::string>());
  inst.doc = scene_from_json(j.at("scene"));
  inst.instruction = instruction_from_json(j.at("instruction"));
  inst.checklist = checklist_from_json(j.at("checklist"));
  return inst;
}

}  // namespace editorch
