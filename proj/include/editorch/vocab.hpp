#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace editorch {

enum class TokenType { Verb, Label, Word, Color, Motif, Font, Relation, Special };

using TokenId = int;

// Closed token vocabularies. Every plan token, attribute value and
// instruction parameter is drawn from these lists.
namespace vocab {

std::span<const std::string_view> verbs();
std::span<const std::string_view> labels();
std::span<const std::string_view> words();
std::span<const std::string_view> colors();
std::span<const std::string_view> motifs();
std::span<const std::string_view> fonts();
std::span<const std::string_view> relations();  // includes "none"
std::span<const std::string_view> categories();

inline constexpr std::string_view kBos = "<bos>";
inline constexpr std::string_view kStepEnd = ";";
inline constexpr std::string_view kEop = "<eop>";

bool is_verb(std::string_view t);
bool is_label(std::string_view t);
bool is_word(std::string_view t);
bool is_color(std::string_view t);
bool is_motif(std::string_view t);
bool is_font(std::string_view t);
bool is_relation(std::string_view t);
bool is_category(std::string_view t);

}  // namespace vocab

// Flat index over the union of all plan-token vocabularies, in a fixed order.
class Vocabulary {
 public:
  static const Vocabulary& plan();

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  TokenType type(TokenId id) const { return types_.at(static_cast<std::size_t>(id)); }
  std::optional<TokenId> find(std::string_view token) const;
  TokenId id(std::string_view token) const;  // throws Data error when absent
  std::vector<TokenId> of_type(TokenType t) const;

 private:
  Vocabulary();
  std::vector<std::string> tokens_;
  std::vector<TokenType> types_;
};

}  // namespace editorch
