#include "trl/core/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "trl/error.hpp"

namespace trl::core {

using nlohmann::json;

std::string to_string(Split split) {
  switch (split) {
    case Split::all: return "all";
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "all";
}

void Corpus::validate() const {
  std::set<std::int64_t> ids;
  const std::size_t dim = feature_dim();
  for (const auto& scene : scenes) {
    if (!ids.insert(scene.id).second) throw Error("duplicate scene id " + std::to_string(scene.id));
    if (scene.features.size() != dim) throw Error("scene " + std::to_string(scene.id) + ": feature dimension differs");
    if (scene.references.empty()) throw Error("scene " + std::to_string(scene.id) + ": no references");
    for (const auto& ref : scene.references)
      for (TokenId t : ref)
        if (t >= vocabulary.size()) throw Error("scene " + std::to_string(scene.id) + ": token outside vocabulary");
  }
}

void write_corpus_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const auto& scene : corpus.scenes) {
    json refs = json::array();
    for (const auto& ref : scene.references) refs.push_back(detokenize(ref, corpus.vocabulary));
    json line = {{"id", scene.id}, {"features", scene.features}, {"refs", refs}};
    out << line.dump() << '\n';
  }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_corpus_jsonl(corpus, out);
}

namespace {

struct RawScene {
  std::int64_t id;
  std::vector<double> features;
  std::vector<std::vector<std::string>> refs;
};

std::vector<RawScene> read_raw(std::istream& in) {
  std::vector<RawScene> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      RawScene scene;
      scene.id = j.at("id").get<std::int64_t>();
      scene.features = j.value("features", std::vector<double>{});
      scene.refs = j.at("refs").get<std::vector<std::vector<std::string>>>();
      raw.push_back(std::move(scene));
    } catch (const json::exception& e) {
      throw Error("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return raw;
}

Corpus assemble(std::vector<RawScene> raw, Vocabulary vocab) {
  Corpus corpus;
  corpus.vocabulary = std::move(vocab);
  for (auto& r : raw) {
    Scene scene;
    scene.id = r.id;
    scene.features = std::move(r.features);
    for (const auto& ref : r.refs) scene.references.push_back(tokenize(ref, corpus.vocabulary));
    corpus.scenes.push_back(std::move(scene));
  }
  corpus.validate();
  return corpus;
}

}  // namespace

Corpus read_corpus_jsonl(std::istream& in, const Vocabulary& vocab) { return assemble(read_raw(in), vocab); }

Corpus read_corpus_jsonl(std::istream& in) {
  auto raw = read_raw(in);
  std::vector<std::vector<std::string>> sentences;
  for (const auto& r : raw) sentences.insert(sentences.end(), r.refs.begin(), r.refs.end());
  Vocabulary vocab = build_vocabulary(sentences, 1);
  return assemble(std::move(raw), std::move(vocab));
}

Corpus load_corpus(const std::filesystem::path& path, const Vocabulary* vocab) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus " + path.string());
  return vocab ? read_corpus_jsonl(in, *vocab) : read_corpus_jsonl(in);
}

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& tok : vocab.tokens()) out << tok << '\n';
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  const Vocabulary reserved;
  if (tokens.size() < kNumReserved ||
      !std::equal(reserved.tokens().begin(), reserved.tokens().end(), tokens.begin()))
    throw Error("vocabulary file must start with the reserved markers");
  return Vocabulary::from_words({tokens.begin() + kNumReserved, tokens.end()});
}

std::array<Corpus, 3> split_corpus(const Corpus& corpus, SplitFractions f, std::uint64_t seed) {
  if (f.train < 0 || f.val < 0 || f.test < 0 || std::abs(f.train + f.val + f.test - 1.0) > 1e-9)
    throw Error("split fractions must be non-negative and sum to 1");

  std::vector<std::size_t> order(corpus.scenes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return corpus.scenes[a].id < corpus.scenes[b].id; });
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n = static_cast<double>(order.size());
  const auto n_train = static_cast<std::size_t>(std::llround(f.train * n));
  const auto n_val = std::min(order.size() - n_train, static_cast<std::size_t>(std::llround(f.val * n)));
  const std::size_t n_test = order.size() - n_train - n_val;
  if (n_train == 0 || n_val == 0 || n_test == 0) throw Error("empty split");

  std::array<Corpus, 3> parts;
  const Split tags[3] = {Split::train, Split::val, Split::test};
  const std::size_t bounds[4] = {0, n_train, n_train + n_val, order.size()};
  for (int p = 0; p < 3; ++p) {
    parts[p].vocabulary = corpus.vocabulary;
    parts[p].split = tags[p];
    for (std::size_t i = bounds[p]; i < bounds[p + 1]; ++i) parts[p].scenes.push_back(corpus.scenes[order[i]]);
  }
  return parts;
}

}  // namespace trl::core
