#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "trl/core/corpus.hpp"
#include "trl/core/embeddings.hpp"

namespace trl::core {

// Template slots: {A} attribute of the first object, {O1} first object,
// {O2} second object. Templates without {O2} describe single-object scenes.
std::vector<std::string> default_templates();

struct GeneratorSpec {
  std::size_t n_scenes = 200;
  std::size_t n_objects = 8;
  std::size_t n_attributes = 4;
  std::size_t d_img = 16;
  std::vector<std::string> templates = default_templates();
  double noise_std = 0.3;
  // Probability that a slot uses the first surface form of its concept.
  double primary_form_prob = 0.7;
};

inline constexpr std::size_t kReferencesPerScene = 5;

/// Word -> concept grouping of the synthetic language. Synonyms share a
/// concept; `content` marks object and attribute concepts.
struct Lexicon {
  struct Entry {
    std::size_t concept_id = 0;
    bool content = false;
  };

  std::vector<std::vector<std::string>> objects;     // [object][surface form]
  std::vector<std::vector<std::string>> attributes;  // [attribute][surface form]
  std::unordered_map<std::string, Entry> entries;
  std::size_t n_concepts = 0;

  /// Concept of a word; unknown words get a fresh id derived from the word
  /// itself so that unrelated words never collide with real concepts.
  Entry lookup(const std::string& word) const;
};

Lexicon make_lexicon(const GeneratorSpec& spec);

// TSV: word <TAB> concept id <TAB> 1|0 (content flag)
void save_lexicon(const Lexicon& lexicon, const std::filesystem::path& path);
Lexicon load_lexicon(const std::filesystem::path& path);

struct SyntheticData {
  Corpus corpus;
  Lexicon lexicon;
};

/// Scenes hold one or two objects (ascending id) and one attribute bound to
/// the first object. Features are the multi-hot object/attribute indicator
/// padded to d_img plus N(0, noise_std) noise. Every scene carries exactly
/// five references.
SyntheticData generate_synthetic_corpus(const GeneratorSpec& spec, std::uint64_t seed);

/// Unit-norm embeddings in which synonyms cluster around a shared concept
/// direction; `spread` controls how far surface forms sit from it.
EmbeddingTable synthetic_embeddings(const Lexicon& lexicon, const Vocabulary& vocab, std::size_t dim,
                                    std::uint64_t seed, double spread = 0.35);

}  // namespace trl::core
