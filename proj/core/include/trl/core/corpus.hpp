#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "trl/core/vocabulary.hpp"

namespace trl::core {

enum class Split { all, train, val, test };

std::string to_string(Split split);

struct Scene {
  std::int64_t id = 0;
  std::vector<double> features;
  std::vector<TokenSequence> references;

  friend bool operator==(const Scene&, const Scene&) = default;
};

struct Corpus {
  std::vector<Scene> scenes;
  Vocabulary vocabulary;
  Split split = Split::all;

  std::size_t feature_dim() const { return scenes.empty() ? 0 : scenes.front().features.size(); }

  /// Throws trl::Error when scene ids repeat, feature dimensions differ,
  /// a scene has no references, or a token falls outside the vocabulary.
  void validate() const;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// JSON-lines, one scene per line: {"id": int, "features": [...], "refs": [[tok,...],...]}
void write_corpus_jsonl(const Corpus& corpus, std::ostream& out);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Reads scenes and tokenizes references against `vocab`.
Corpus read_corpus_jsonl(std::istream& in, const Vocabulary& vocab);
/// Reads scenes and builds the vocabulary from the references (min_count 1).
Corpus read_corpus_jsonl(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path, const Vocabulary* vocab = nullptr);

// One token per line in index order, reserved markers included.
void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_vocabulary(const std::filesystem::path& path);

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

/// Shuffles scenes (ordered by id first) with `seed` and cuts them into
/// train/val/test. Throws "empty split" if any part would be empty.
std::array<Corpus, 3> split_corpus(const Corpus& corpus, SplitFractions fractions, std::uint64_t seed);

}  // namespace trl::core
