#include "editorch/vocab.hpp"

#include <algorithm>
#include <array>

#include "editorch/common.hpp"

namespace editorch {
namespace vocab {
namespace {

constexpr std::array<std::string_view, 10> kVerbs = {
    "add_object",     "add_text",        "remove_object", "remove_text",        "replace_object",
    "replace_text",   "recolor_object",  "change_font",   "recolor_background", "change_motif",
};

constexpr std::array<std::string_view, 24> kLabels = {
    "burger", "steak",   "salad", "pizza", "laptop", "pillow", "lamp",   "cake",
    "gift",   "pumpkin", "lantern", "tree", "bottle", "cup",    "phone",  "chair",
    "plant",  "car",     "shoe",  "watch", "book",   "candle", "star",   "fruit",
};

constexpr std::array<std::string_view, 24> kWords = {
    "sale",     "summer", "winter",    "fresh",   "deal",    "new",     "premium", "business",
    "family",   "holiday", "diwali",   "christmas", "halloween", "free", "today",  "vegan",
    "organic",  "office", "travel",    "gourmet", "spooky",  "festive", "kids",    "classic",
};

constexpr std::array<std::string_view, 12> kColors = {
    "red", "blue", "green", "yellow", "orange", "purple", "white", "black", "gold", "silver", "pink", "brown",
};

constexpr std::array<std::string_view, 8> kMotifs = {
    "plain", "stripes", "dots", "floral", "snow", "leaves", "lights", "waves",
};

constexpr std::array<std::string_view, 4> kFonts = {"serif", "sans", "script", "mono"};

constexpr std::array<std::string_view, 6> kRelations = {"above", "below", "left_of", "right_of", "inside", "none"};

constexpr std::array<std::string_view, 3> kCategories = {"festival_adapt", "audience_retarget", "product_swap"};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& a, std::string_view t) {
  return std::find(a.begin(), a.end(), t) != a.end();
}

}  // namespace

std::span<const std::string_view> verbs() { return kVerbs; }
std::span<const std::string_view> labels() { return kLabels; }
std::span<const std::string_view> words() { return kWords; }
std::span<const std::string_view> colors() { return kColors; }
std::span<const std::string_view> motifs() { return kMotifs; }
std::span<const std::string_view> fonts() { return kFonts; }
std::span<const std::string_view> relations() { return kRelations; }
std::span<const std::string_view> categories() { return kCategories; }

bool is_verb(std::string_view t) { return contains(kVerbs, t); }
bool is_label(std::string_view t) { return contains(kLabels, t); }
bool is_word(std::string_view t) { return contains(kWords, t); }
bool is_color(std::string_view t) { return contains(kColors, t); }
bool is_motif(std::string_view t) { return contains(kMotifs, t); }
bool is_font(std::string_view t) { return contains(kFonts, t); }
bool is_relation(std::string_view t) { return contains(kRelations, t); }
bool is_category(std::string_view t) { return contains(kCategories, t); }

}  // namespace vocab

Vocabulary::Vocabulary() {
  auto add = [this](std::span<const std::string_view> list, TokenType t) {
    for (auto s : list) {
      tokens_.emplace_back(s);
      types_.push_back(t);
    }
  };
  add(vocab::verbs(), TokenType::Verb);
  add(vocab::labels(), TokenType::Label);
  add(vocab::words(), TokenType::Word);
  add(vocab::colors(), TokenType::Color);
  add(vocab::motifs(), TokenType::Motif);
  add(vocab::fonts(), TokenType::Font);
  add(vocab::relations(), TokenType::Relation);
  const std::array<std::string_view, 3> specials = {vocab::kBos, vocab::kStepEnd, vocab::kEop};
  add(specials, TokenType::Special);
}

const Vocabulary& Vocabulary::plan() {
  static const Vocabulary v;
  return v;
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = std::find(tokens_.begin(), tokens_.end(), token);
  if (it == tokens_.end()) return std::nullopt;
  return static_cast<TokenId>(it - tokens_.begin());
}

TokenId Vocabulary::id(std::string_view token) const {
  auto found = find(token);
  if (!found) throw Error(ErrorCode::Data, "token not in vocabulary: " + std::string(token));
  return *found;
}

std::vector<TokenId> Vocabulary::of_type(TokenType t) const {
  std::vector<TokenId> out;
  for (std::size_t i = 0; i < types_.size(); ++i)
    if (types_[i] == t) out.push_back(static_cast<TokenId>(i));
  return out;
}

}  // namespace editorch
