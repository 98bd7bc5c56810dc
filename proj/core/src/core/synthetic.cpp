#include "trl/core/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "trl/error.hpp"

namespace trl::core {

namespace {

const std::vector<std::vector<std::string>> kObjectForms = {
    {"dog", "puppy"}, {"cat", "kitten"}, {"horse", "pony"},  {"car", "automobile"},
    {"bus", "coach"}, {"boat", "ship"},  {"bike", "bicycle"}, {"man", "guy"},
    {"woman", "lady"}, {"bird", "parrot"}, {"chair", "seat"}, {"table", "desk"},
};

const std::vector<std::vector<std::string>> kAttributeForms = {
    {"red", "crimson"}, {"blue", "navy"}, {"small", "little"}, {"large", "big"},
    {"white", "pale"},  {"black", "dark"}, {"old", "aged"},    {"shiny", "glossy"},
};

// Function words that play similar roles share a concept.
const std::vector<std::vector<std::string>> kFunctionGroups = {
    {"a", "the"},
    {"next", "to", "near", "with", "and", "beside"},
    {"on", "in", "of"},
    {"grass", "street", "picture", "photo"},
    {"there", "is", "sitting"},
};

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<double> random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(dim);
  double norm = 0.0;
  for (double& x : v) {
    x = gauss(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace

std::vector<std::string> default_templates() {
  return {
      "a {A} {O1} on the grass",
      "there is a {A} {O1} in the picture",
      "a photo of a {A} {O1}",
      "the {A} {O1} is sitting on the street",
      "a {A} {O1} next to a {O2}",
      "there is a {A} {O1} and a {O2}",
      "a {O2} near the {A} {O1}",
      "a photo of a {A} {O1} with a {O2}",
  };
}

Lexicon::Entry Lexicon::lookup(const std::string& word) const {
  if (auto it = entries.find(word); it != entries.end()) return it->second;
  return {n_concepts + static_cast<std::size_t>(fnv1a(word) >> 24), false};
}

Lexicon make_lexicon(const GeneratorSpec& spec) {
  Lexicon lex;
  auto forms_for = [](const std::vector<std::vector<std::string>>& pool, std::size_t i, const char* stem) {
    if (i < pool.size()) return pool[i];
    const std::string base = std::string(stem) + std::to_string(i);
    return std::vector<std::string>{base, base + "x"};
  };
  std::size_t concept_id = 0;
  for (std::size_t i = 0; i < spec.n_objects; ++i, ++concept_id) {
    lex.objects.push_back(forms_for(kObjectForms, i, "object"));
    for (const auto& w : lex.objects.back()) lex.entries[w] = {concept_id, true};
  }
  for (std::size_t i = 0; i < spec.n_attributes; ++i, ++concept_id) {
    lex.attributes.push_back(forms_for(kAttributeForms, i, "attr"));
    for (const auto& w : lex.attributes.back()) lex.entries[w] = {concept_id, true};
  }
  for (const auto& group : kFunctionGroups) {
    for (const auto& w : group) lex.entries.try_emplace(w, Lexicon::Entry{concept_id, false});
    ++concept_id;
  }
  // Template words outside the built-in groups become their own concepts.
  for (const auto& t : spec.templates)
    for (const auto& w : split_words(t))
      if (w.front() != '{' && !lex.entries.count(w)) lex.entries[w] = {concept_id++, false};
  lex.n_concepts = concept_id;
  return lex;
}

void save_lexicon(const Lexicon& lexicon, const std::filesystem::path& path) {
  std::vector<std::pair<std::string, Lexicon::Entry>> rows(lexicon.entries.begin(), lexicon.entries.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.second.concept_id != b.second.concept_id ? a.second.concept_id < b.second.concept_id : a.first < b.first;
  });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& [word, e] : rows) out << word << '\t' << e.concept_id << '\t' << (e.content ? 1 : 0) << '\n';
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon " + path.string());
  Lexicon lex;
  std::string word;
  std::size_t concept_id = 0;
  int content = 0;
  std::size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    if (!(fields >> word >> concept_id >> content)) throw Error("lexicon line " + std::to_string(line_no) + ": malformed");
    lex.entries[word] = {concept_id, content != 0};
    lex.n_concepts = std::max(lex.n_concepts, concept_id + 1);
  }
  return lex;
}

SyntheticData generate_synthetic_corpus(const GeneratorSpec& spec, std::uint64_t seed) {
  if (spec.n_scenes < 1) throw Error("n_scenes must be >= 1");
  if (spec.templates.empty()) throw Error("templates must be non-empty");
  if (spec.n_objects < 1 || spec.n_attributes < 1) throw Error("need at least one object and one attribute");
  if (spec.d_img < spec.n_objects + spec.n_attributes) throw Error("feature dimension too small");

  std::vector<std::vector<std::string>> single, pair;
  for (const auto& t : spec.templates) {
    auto words = split_words(t);
    if (words.empty()) throw Error("empty template");
    const bool has_o2 = std::find(words.begin(), words.end(), "{O2}") != words.end();
    (has_o2 ? pair : single).push_back(std::move(words));
  }
  if (spec.n_objects < 2) pair.clear();
  if (single.empty() && pair.empty()) throw Error("no template usable with a single object");

  SyntheticData data{{}, make_lexicon(spec)};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, spec.noise_std);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto pick_form = [&](const std::vector<std::string>& forms) -> const std::string& {
    if (forms.size() == 1 || unit(rng) < spec.primary_form_prob) return forms.front();
    std::uniform_int_distribution<std::size_t> alt(1, forms.size() - 1);
    return forms[alt(rng)];
  };

  struct RawScene {
    std::vector<double> features;
    std::vector<std::vector<std::string>> refs;
  };
  std::vector<RawScene> raw(spec.n_scenes);
  for (auto& scene : raw) {
    bool two = false;
    if (!pair.empty() && !single.empty()) two = unit(rng) < 0.5;
    else two = !pair.empty();

    std::vector<std::size_t> objects;
    std::uniform_int_distribution<std::size_t> obj_dist(0, spec.n_objects - 1);
    objects.push_back(obj_dist(rng));
    if (two) {
      std::size_t other = obj_dist(rng);
      while (other == objects[0]) other = obj_dist(rng);
      objects.push_back(other);
      std::sort(objects.begin(), objects.end());
    }
    std::uniform_int_distribution<std::size_t> attr_dist(0, spec.n_attributes - 1);
    const std::size_t attribute = attr_dist(rng);

    scene.features.assign(spec.d_img, 0.0);
    for (std::size_t o : objects) scene.features[o] = 1.0;
    scene.features[spec.n_objects + attribute] = 1.0;
    if (spec.noise_std > 0.0)
      for (double& f : scene.features) f += noise(rng);

    const auto& pool = two ? pair : single;
    std::uniform_int_distribution<std::size_t> tmpl_dist(0, pool.size() - 1);
    for (std::size_t r = 0; r < kReferencesPerScene; ++r) {
      std::vector<std::string> ref;
      for (const auto& w : pool[tmpl_dist(rng)]) {
        if (w == "{A}") ref.push_back(pick_form(data.lexicon.attributes[attribute]));
        else if (w == "{O1}") ref.push_back(pick_form(data.lexicon.objects[objects[0]]));
        else if (w == "{O2}") ref.push_back(pick_form(data.lexicon.objects[objects[1]]));
        else ref.push_back(w);
      }
      scene.refs.push_back(std::move(ref));
    }
  }

  std::vector<std::vector<std::string>> sentences;
  for (const auto& s : raw) sentences.insert(sentences.end(), s.refs.begin(), s.refs.end());
  data.corpus.vocabulary = build_vocabulary(sentences, 1);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    Scene scene;
    scene.id = static_cast<std::int64_t>(i);
    scene.features = std::move(raw[i].features);
    for (const auto& ref : raw[i].refs) scene.references.push_back(tokenize(ref, data.corpus.vocabulary));
    data.corpus.scenes.push_back(std::move(scene));
  }
  return data;
}

EmbeddingTable synthetic_embeddings(const Lexicon& lexicon, const Vocabulary& vocab, std::size_t dim,
                                    std::uint64_t seed, double spread) {
  if (dim == 0) throw Error("embedding dimension must be positive");
  std::mt19937_64 center_rng(seed);
  std::vector<std::vector<double>> centers(lexicon.n_concepts);
  for (auto& c : centers) c = random_unit(center_rng, dim);

  EmbeddingTable table(vocab.size(), dim);
  for (std::size_t i = kPad + 1; i < vocab.size(); ++i) {
    const std::string& word = vocab.token_of(static_cast<TokenId>(i));
    std::mt19937_64 word_rng(seed ^ fnv1a(word));
    const auto jitter = random_unit(word_rng, dim);
    auto row = table.row(i);
    auto it = lexicon.entries.find(word);
    for (std::size_t d = 0; d < dim; ++d)
      row[d] = it != lexicon.entries.end() ? centers[it->second.concept_id][d] + spread * jitter[d] : jitter[d];
  }
  table.normalize();
  return table;
}

}  // namespace trl::core
