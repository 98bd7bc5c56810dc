#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace trl::core {

using TokenId = std::uint32_t;
using TokenSequence = std::vector<TokenId>;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kStart = 1;
inline constexpr TokenId kEnd = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr std::size_t kNumReserved = 4;

/// Dense token <-> index mapping. Indices 0..3 are always the pad, start,
/// end and unknown markers.
class Vocabulary {
 public:
  Vocabulary();

  /// Builds a vocabulary whose non-reserved entries are `words` in order.
  static Vocabulary from_words(const std::vector<std::string>& words);

  TokenId lookup(std::string_view token) const;
  std::optional<TokenId> find(std::string_view token) const;
  const std::string& token_of(TokenId id) const;

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Counts tokens across `sentences` and keeps those seen at least `min_count`
/// times, ordered by descending count then lexicographically.
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& sentences, std::size_t min_count);

TokenSequence tokenize(const std::vector<std::string>& words, const Vocabulary& vocab);
std::vector<std::string> detokenize(std::span<const TokenId> ids, const Vocabulary& vocab);

/// Drops pad/start/end markers; unk is kept.
TokenSequence strip_markers(std::span<const TokenId> ids);

bool is_marker(TokenId id);

}  // namespace trl::core
