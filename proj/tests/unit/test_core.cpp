#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "trl/core/corpus.hpp"
#include "trl/core/embeddings.hpp"
#include "trl/core/numeric.hpp"
#include "trl/core/synthetic.hpp"
#include "trl/core/vocabulary.hpp"
#include "trl/error.hpp"

using namespace trl;
using namespace trl::core;

TEST(Vocabulary, ReservedMarkersComeFirst) {
  Vocabulary v;
  EXPECT_EQ(v.size(), kNumReserved);
  EXPECT_EQ(v.lookup("<pad>"), kPad);
  EXPECT_EQ(v.lookup("<s>"), kStart);
  EXPECT_EQ(v.lookup("</s>"), kEnd);
  EXPECT_EQ(v.lookup("<unk>"), kUnk);
}

TEST(Vocabulary, BuildOrdersByCountThenText) {
  const auto v = build_vocabulary({{"a", "cat"}, {"a", "dog"}}, 1);
  ASSERT_EQ(v.size(), 7u);
  EXPECT_EQ(v.lookup("a"), kNumReserved);
  EXPECT_EQ(v.lookup("cat"), kNumReserved + 1);
  EXPECT_EQ(v.lookup("dog"), kNumReserved + 2);
}

TEST(Vocabulary, MinCountDropsRareWords) {
  const auto v = build_vocabulary({{"a", "cat"}, {"a", "dog"}}, 2);
  EXPECT_EQ(v.size(), kNumReserved + 1);
  EXPECT_EQ(tokenize({"a", "cat"}, v), (TokenSequence{kNumReserved, kUnk}));
}

TEST(Vocabulary, DeterministicOnGeneratedCaptions) {
  const auto data = generate_synthetic_corpus({}, 3);
  std::vector<std::vector<std::string>> sents;
  for (const auto& s : data.corpus.scenes)
    for (const auto& r : s.references) sents.push_back(detokenize(r, data.corpus.vocabulary));
  ASSERT_GE(sents.size(), 1000u);
  EXPECT_EQ(build_vocabulary(sents, 1), build_vocabulary(sents, 1));
}

TEST(Tokenize, MapsUnknownWordsToUnk) {
  const auto v = Vocabulary::from_words({"a", "cat"});
  EXPECT_EQ(tokenize({"a", "cat"}, v), (TokenSequence{v.lookup("a"), v.lookup("cat")}));
  EXPECT_EQ(tokenize({"a", "zebra"}, v), (TokenSequence{v.lookup("a"), kUnk}));
  EXPECT_TRUE(tokenize({}, v).empty());
}

TEST(Tokenize, DetokenizeRoundTrip) {
  const auto v = Vocabulary::from_words({"a", "red", "cat"});
  const std::vector<std::string> words{"cat", "a", "red", "a"};
  EXPECT_EQ(detokenize(tokenize(words, v), v), words);
}

TEST(Tokenize, StripMarkersKeepsUnk) {
  const TokenSequence s{kStart, 5, kUnk, kPad, 7, kEnd};
  EXPECT_EQ(strip_markers(s), (TokenSequence{5, kUnk, 7}));
}

TEST(Synthetic, SameSeedSameBytes) {
  GeneratorSpec spec;
  const auto a = generate_synthetic_corpus(spec, 7);
  const auto b = generate_synthetic_corpus(spec, 7);
  EXPECT_EQ(a.corpus, b.corpus);
  std::ostringstream sa, sb;
  write_corpus_jsonl(a.corpus, sa);
  write_corpus_jsonl(b.corpus, sb);
  EXPECT_EQ(sa.str(), sb.str());
  const auto c = generate_synthetic_corpus(spec, 8);
  EXPECT_NE(a.corpus, c.corpus);
}

TEST(Synthetic, ReferencesOnlyMentionPresentObjects) {
  GeneratorSpec spec;
  spec.noise_std = 0.0;
  const auto data = generate_synthetic_corpus(spec, 7);
  ASSERT_EQ(data.corpus.scenes.size(), 200u);
  const auto& lex = data.lexicon;
  std::map<std::string, std::size_t> object_of;
  for (std::size_t o = 0; o < lex.objects.size(); ++o)
    for (const auto& w : lex.objects[o]) object_of[w] = o;
  for (const auto& scene : data.corpus.scenes) {
    EXPECT_EQ(scene.references.size(), kReferencesPerScene);
    std::set<std::size_t> present;
    for (std::size_t o = 0; o < spec.n_objects; ++o)
      if (scene.features[o] == 1.0) present.insert(o);
    ASSERT_FALSE(present.empty());
    for (const auto& ref : scene.references)
      for (const auto& w : detokenize(ref, data.corpus.vocabulary))
        if (auto it = object_of.find(w); it != object_of.end()) {
          EXPECT_TRUE(present.count(it->second)) << w;
        }
  }
}

TEST(Synthetic, ZeroNoiseGivesExactMultiHot) {
  GeneratorSpec spec;
  spec.noise_std = 0.0;
  for (const auto& s : generate_synthetic_corpus(spec, 1).corpus.scenes) {
    ASSERT_EQ(s.features.size(), spec.d_img);
    std::size_t objects = 0, attrs = 0;
    for (std::size_t i = 0; i < spec.d_img; ++i) {
      EXPECT_TRUE(s.features[i] == 0.0 || s.features[i] == 1.0);
      if (s.features[i] == 1.0) (i < spec.n_objects ? objects : attrs) += 1;
      if (i >= spec.n_objects + spec.n_attributes) {
        EXPECT_EQ(s.features[i], 0.0);
      }
    }
    EXPECT_GE(objects, 1u);
    EXPECT_LE(objects, 2u);
    EXPECT_EQ(attrs, 1u);
  }
}

TEST(Synthetic, FeatureDimensionTooSmall) {
  GeneratorSpec spec;
  spec.d_img = spec.n_objects + spec.n_attributes - 1;
  try {
    generate_synthetic_corpus(spec, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("feature dimension too small"), std::string::npos);
  }
}

TEST(Embeddings, NormalizesRows) {
  const auto v = Vocabulary::from_words({"cat", "dog"});
  std::istringstream in("cat 1 0 0\ndog 3 4 0\n");
  const auto e = parse_embeddings(in, v, true);
  ASSERT_EQ(e.dim(), 3u);
  const auto cat = e.row(v.lookup("cat"));
  EXPECT_DOUBLE_EQ(cat[0], 1.0);
  EXPECT_DOUBLE_EQ(cat[1], 0.0);
  const auto dog = e.row(v.lookup("dog"));
  EXPECT_NEAR(dog[0], 0.6, 1e-15);
  EXPECT_NEAR(dog[1], 0.8, 1e-15);
  EXPECT_EQ(dog[2], 0.0);
  for (double x : e.row(kPad)) EXPECT_EQ(x, 0.0);
}

TEST(Embeddings, MissingWordsGetSeededUnitRows) {
  const auto v = Vocabulary::from_words({"cat", "zebra"});
  std::istringstream in1("cat 1 0 0\n"), in2("cat 1 0 0\n");
  const auto a = parse_embeddings(in1, v, true, 5);
  const auto b = parse_embeddings(in2, v, true, 5);
  const auto z = a.row(v.lookup("zebra"));
  double n = 0.0;
  for (double x : z) n += x * x;
  EXPECT_NEAR(std::sqrt(n), 1.0, 1e-12);
  EXPECT_EQ(a, b);
  for (std::size_t r = 1; r < a.rows(); ++r) {
    double s = 0.0;
    for (double x : a.row(r)) s += x * x;
    EXPECT_LT(std::abs(std::sqrt(s) - 1.0), 1e-9);
  }
}

TEST(Embeddings, MalformedLineNamesLine) {
  const auto v = Vocabulary::from_words({"cat", "dog"});
  std::istringstream bad("cat 1 0 0\ndog 1 x 0\n");
  try {
    parse_embeddings(bad, v, true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  std::istringstream ragged("cat 1 0 0\ndog 1 0\n");
  EXPECT_THROW(parse_embeddings(ragged, v, true), Error);
}

TEST(Embeddings, WriteParseRoundTrip) {
  const auto data = generate_synthetic_corpus({}, 2);
  const auto emb = synthetic_embeddings(data.lexicon, data.corpus.vocabulary, 16, 2);
  std::ostringstream out;
  write_embeddings(emb, data.corpus.vocabulary, out);
  std::istringstream in(out.str());
  const auto back = parse_embeddings(in, data.corpus.vocabulary, true);
  ASSERT_EQ(back.rows(), emb.rows());
  for (std::size_t i = 0; i < emb.data().size(); ++i) EXPECT_NEAR(back.data()[i], emb.data()[i], 1e-15);
}

TEST(Embeddings, SynonymsAreCloserThanOtherObjects) {
  const auto data = generate_synthetic_corpus({}, 4);
  const auto& lex = data.lexicon;
  const auto& v = data.corpus.vocabulary;
  const auto emb = synthetic_embeddings(lex, v, 32, 4);
  ASSERT_GE(lex.objects[0].size(), 2u);
  const auto s0 = emb.row(v.lookup(lex.objects[0][0]));
  const auto s1 = emb.row(v.lookup(lex.objects[0][1]));
  const auto other = emb.row(v.lookup(lex.objects[1][0]));
  EXPECT_GT(cosine_similarity(s0, s1), cosine_similarity(s0, other));
}

TEST(Corpus, JsonlRoundTrip) {
  const auto data = generate_synthetic_corpus({}, 9);
  std::stringstream ss;
  write_corpus_jsonl(data.corpus, ss);
  const auto back = read_corpus_jsonl(ss, data.corpus.vocabulary);
  EXPECT_EQ(back.scenes, data.corpus.scenes);
}

TEST(Corpus, ValidateRejectsBadCorpora) {
  Corpus c;
  c.vocabulary = Vocabulary::from_words({"a"});
  c.scenes.push_back({1, {0.0}, {{kNumReserved}}});
  EXPECT_NO_THROW(c.validate());
  c.scenes.push_back({1, {0.0}, {{kNumReserved}}});
  EXPECT_THROW(c.validate(), Error);
  c.scenes.back().id = 2;
  c.scenes.back().features = {0.0, 1.0};
  EXPECT_THROW(c.validate(), Error);
  c.scenes.back().features = {0.0};
  c.scenes.back().references.clear();
  EXPECT_THROW(c.validate(), Error);
  c.scenes.back().references = {{99}};
  EXPECT_THROW(c.validate(), Error);
}

TEST(Corpus, MalformedJsonlIsAnError) {
  std::istringstream in("{\"id\": 1, \"features\": [0.5], \"refs\": [[\"a\"]]}\n{\"id\": 2, \"features\": \n");
  EXPECT_THROW(read_corpus_jsonl(in), Error);
}

TEST(Split, SizesAndDeterminism) {
  GeneratorSpec spec;
  spec.n_scenes = 10;
  const auto data = generate_synthetic_corpus(spec, 1);
  const auto a = split_corpus(data.corpus, {0.8, 0.1, 0.1}, 3);
  EXPECT_EQ(a[0].scenes.size(), 8u);
  EXPECT_EQ(a[1].scenes.size(), 1u);
  EXPECT_EQ(a[2].scenes.size(), 1u);
  const auto b = split_corpus(data.corpus, {0.8, 0.1, 0.1}, 3);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(a[i].scenes, b[i].scenes);
  std::set<std::int64_t> ids;
  for (const auto& part : a)
    for (const auto& s : part.scenes) ids.insert(s.id);
  EXPECT_EQ(ids.size(), 10u);
}

TEST(Split, EmptySplitIsAnError) {
  GeneratorSpec spec;
  spec.n_scenes = 10;
  const auto data = generate_synthetic_corpus(spec, 1);
  try {
    split_corpus(data.corpus, {0.5, 0.5, 0.0}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("empty split"), std::string::npos);
  }
}

TEST(Numeric, AggregateAndSigmoid) {
  const std::vector<double> s{0.2, 0.8, 0.5};
  EXPECT_DOUBLE_EQ(aggregate(s, Aggregation::mean), 0.5);
  EXPECT_DOUBLE_EQ(aggregate(s, Aggregation::max), 0.8);
  EXPECT_NEAR(sigmoid(1.0), 0.7310585786300049, 1e-15);
  EXPECT_NEAR(sigmoid(-800.0), 0.0, 1e-300);
  EXPECT_EQ(sigmoid(800.0), 1.0);
}

TEST(Numeric, TelescopingIncrementsSumExactly) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> prefix(1 + trial % 17);
    for (double& p : prefix) p = u(rng);
    const auto r = telescoping_increments(prefix);
    double sum = 0.0;
    for (double x : r) sum += x;
    EXPECT_EQ(sum, quantize_reward(prefix.back()));
  }
}
