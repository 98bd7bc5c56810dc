#include "trl/core/vocabulary.hpp"

#include <algorithm>
#include <map>

#include "trl/error.hpp"

namespace trl::core {

Vocabulary::Vocabulary() {
  add("<pad>");
  add("<s>");
  add("</s>");
  add("<unk>");
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
  Vocabulary vocab;
  for (const auto& w : words) {
    if (vocab.find(w)) throw Error("duplicate vocabulary entry: " + w);
    vocab.add(w);
  }
  return vocab;
}

void Vocabulary::add(std::string token) {
  const auto id = static_cast<TokenId>(tokens_.size());
  index_.emplace(token, id);
  tokens_.push_back(std::move(token));
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::lookup(std::string_view token) const { return find(token).value_or(kUnk); }

const std::string& Vocabulary::token_of(TokenId id) const {
  if (id >= tokens_.size()) throw Error("token id " + std::to_string(id) + " outside vocabulary");
  return tokens_[id];
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& sentences, std::size_t min_count) {
  if (min_count < 1) throw Error("min_count must be >= 1");
  if (sentences.empty()) throw Error("empty corpus");

  const Vocabulary reserved;
  std::map<std::string, std::size_t> counts;
  for (const auto& sentence : sentences)
    for (const auto& tok : sentence)
      if (!reserved.find(tok)) ++counts[tok];

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts)
    if (n >= min_count) kept.emplace_back(tok, n);
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::vector<std::string> words;
  words.reserve(kept.size());
  for (auto& [tok, n] : kept) words.push_back(tok);
  return Vocabulary::from_words(words);
}

TokenSequence tokenize(const std::vector<std::string>& words, const Vocabulary& vocab) {
  TokenSequence ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(vocab.lookup(w));
  return ids;
}

std::vector<std::string> detokenize(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(vocab.token_of(id));
  return out;
}

bool is_marker(TokenId id) { return id == kPad || id == kStart || id == kEnd; }

TokenSequence strip_markers(std::span<const TokenId> ids) {
  TokenSequence out;
  out.reserve(ids.size());
  for (TokenId id : ids)
    if (!is_marker(id)) out.push_back(id);
  return out;
}

}  // namespace trl::core
