#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "trl/cli.hpp"

namespace fs = std::filesystem;
using trl::cli::run_cli;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("trl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Small enough to train in well under a second.
  std::vector<std::string> tiny_train(const std::string& out) const {
    return {"train", "--reward", "bleu", "--out", out, "--metrics", "bleu4,rouge_l", "--beam", "2",
            "--set", "scenes=30", "--set", "d_emb=8", "--set", "d_h=8", "--set", "batch=8",
            "--set", "actor_pretrain_epochs=1", "--set", "critic_pretrain_epochs=1", "--set", "ac_epochs=1",
            "--set", "max_len=8", "--set", "word_dim=8", "--log-level", "off"};
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, NoSubcommandIsUsageError) { EXPECT_EQ(cli({}).code, trl::cli::kExitUsage); }

TEST_F(Cli, HelpExitsZero) {
  const auto r = cli({"--help"});
  EXPECT_EQ(r.code, trl::cli::kExitOk);
  EXPECT_NE(r.out.find("gen-data"), std::string::npos);
  EXPECT_NE(r.out.find("score"), std::string::npos);
}

TEST_F(Cli, UnknownFlagsAndValuesAreUsageErrors) {
  EXPECT_EQ(cli({"train", "--no-such-flag"}).code, trl::cli::kExitUsage);
  EXPECT_EQ(cli({"train", "--reward", "meteor"}).code, trl::cli::kExitUsage);
  EXPECT_EQ(cli({"gen-data"}).code, trl::cli::kExitUsage);
  EXPECT_EQ(cli({"gen-data", "--out", path("x"), "--scenes", "0"}).code, trl::cli::kExitUsage);
  EXPECT_EQ(cli({"train", "--set", "learning_rate=1", "--out", path("r")}).code, trl::cli::kExitUsage);
  EXPECT_EQ(cli({"train", "--set", "novalue", "--out", path("r")}).code, trl::cli::kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, trl::cli::kExitUsage);
}

TEST_F(Cli, GenDataIsDeterministic) {
  ASSERT_EQ(cli({"gen-data", "--scenes", "25", "--seed", "3", "--out", path("a")}).code, 0);
  ASSERT_EQ(cli({"gen-data", "--scenes", "25", "--seed", "3", "--out", path("b")}).code, 0);
  ASSERT_EQ(cli({"gen-data", "--scenes", "25", "--seed", "4", "--out", path("c")}).code, 0);
  for (const char* f : {"corpus.jsonl", "vocab.txt", "embeddings.txt", "lexicon.tsv"}) {
    ASSERT_TRUE(fs::exists(dir_ / "a" / f)) << f;
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
  EXPECT_NE(slurp(dir_ / "a" / "corpus.jsonl"), slurp(dir_ / "c" / "corpus.jsonl"));
  std::istringstream lines(slurp(dir_ / "a" / "corpus.jsonl"));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) ++n;
  EXPECT_EQ(n, 25);
}

TEST_F(Cli, ScoreIdentityIsHundred) {
  spit(path("c.jsonl"), "{\"id\": 1, \"tokens\": [\"a\", \"dog\", \"runs\", \"fast\"]}\n{\"id\": 2, \"tokens\": [\"the\", \"red\", \"ball\", \"rolls\", \"away\"]}\n");
  spit(path("r.jsonl"), "{\"id\": 2, \"refs\": [[\"the\", \"red\", \"ball\", \"rolls\", \"away\"]]}\n{\"id\": 1, \"refs\": [[\"a\", \"dog\", \"runs\", \"fast\"], [\"dogs\", \"run\"]]}\n");
  const auto r = cli({"score", "--candidates", path("c.jsonl"), "--references", path("r.jsonl"), "--metrics", "bleu4,rouge_l"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "bleu4,100.00\nrouge_l,100.00\n");
}

TEST_F(Cli, ScoreErrorsAreClassified) {
  spit(path("c.jsonl"), "{\"id\": 1, \"tokens\": [\"a\", \"b\"]}\n");
  spit(path("r.jsonl"), "{\"id\": 1, \"refs\": [[\"a\", \"b\"]]}\n");
  spit(path("bad.jsonl"), "{\"id\": 1, \"tokens\": [\"a\"\n");
  spit(path("orphan.jsonl"), "{\"id\": 9, \"tokens\": [\"a\"]}\n");
  const auto base = [&](const std::string& c, const std::string& m) {
    return cli({"score", "--candidates", c, "--references", path("r.jsonl"), "--metric", m}).code;
  };
  EXPECT_EQ(base(path("bad.jsonl"), "bleu4"), trl::cli::kExitData);
  EXPECT_EQ(base(path("orphan.jsonl"), "bleu4"), trl::cli::kExitData);
  EXPECT_EQ(base(path("missing.jsonl"), "bleu4"), trl::cli::kExitData);
  EXPECT_EQ(base(path("c.jsonl"), "meteor"), trl::cli::kExitUsage);
  EXPECT_EQ(base(path("c.jsonl"), "wmd"), trl::cli::kExitUsage);
  EXPECT_EQ(cli({"score", "--candidates", path("c.jsonl")}).code, trl::cli::kExitUsage);
}

TEST_F(Cli, ScoreEmbeddingMetricsWithData) {
  ASSERT_EQ(cli({"gen-data", "--scenes", "10", "--out", path("d")}).code, 0);
  // Take a real caption from the generated corpus so every word is known.
  std::istringstream corpus(slurp(dir_ / "d" / "corpus.jsonl"));
  std::string first;
  std::getline(corpus, first);
  const auto refs_at = first.find("\"refs\"");
  ASSERT_NE(refs_at, std::string::npos) << first;
  const auto open = first.find("[[", refs_at), close = first.find(']', open);
  const std::string caption = first.substr(open + 1, close - open);
  spit(path("c.jsonl"), "{\"id\": 1, \"tokens\": " + caption + "}\n");
  spit(path("r.jsonl"), "{\"id\": 1, \"refs\": [" + caption + "]}\n");
  const auto r = cli({"score", "--candidates", path("c.jsonl"), "--references", path("r.jsonl"), "--metrics", "wmd,cos",
                      "--data", path("d")});
  ASSERT_EQ(r.code, 0) << r.err;
  // Identity reaches the sigmoid ceiling of the WMD reward: 100 * sigmoid(1).
  std::ostringstream want;
  want.setf(std::ios::fixed);
  want.precision(2);
  want << "wmd," << 100.0 * oracle::sigmoid(1.0) << "\n";
  EXPECT_EQ(r.out.substr(0, r.out.find('\n') + 1), want.str());
  EXPECT_NE(r.out.find("cos,"), std::string::npos);
}

TEST_F(Cli, TrainEvalAndResume) {
  const auto run = path("run");
  auto t = cli(tiny_train(run));
  ASSERT_EQ(t.code, 0) << t.err;
  for (const char* f : {"run.ckpt", "report.json", "report.csv", "timing.json"}) EXPECT_TRUE(fs::exists(fs::path(run) / f)) << f;
  EXPECT_EQ(t.out, slurp(fs::path(run) / "report.csv"));

  const auto e = cli({"eval", "--checkpoint", run + "/run.ckpt", "--metrics", "bleu4,rouge_l", "--log-level", "off"});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(e.out, slurp(fs::path(run) / "report.csv"));

  const std::string report = slurp(fs::path(run) / "report.json");
  const std::string ckpt = slurp(fs::path(run) / "run.ckpt");
  const auto r = cli({"train", "--checkpoint", run + "/run.ckpt", "--out", run, "--metrics", "bleu4,rouge_l", "--log-level", "off"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(fs::path(run) / "report.json"), report);
  EXPECT_EQ(slurp(fs::path(run) / "run.ckpt"), ckpt);

  const auto again = path("again");
  ASSERT_EQ(cli(tiny_train(again)).code, 0);
  EXPECT_EQ(slurp(fs::path(again) / "report.json"), report);

  const auto rep = cli({"report", run + "/report.json", again + "/report.json"});
  ASSERT_EQ(rep.code, 0) << rep.err;
  EXPECT_NE(rep.out.find("split,metric,baseline,candidate,delta"), std::string::npos);
  EXPECT_NE(rep.out.find("+0.00"), std::string::npos);
  EXPECT_EQ(rep.out.find("-0.00"), std::string::npos);
}

TEST_F(Cli, ResumeRejectsConfigFlags) {
  const auto run = path("run");
  ASSERT_EQ(cli(tiny_train(run)).code, 0);
  EXPECT_EQ(cli({"train", "--checkpoint", run + "/run.ckpt", "--reward", "wmd", "--out", run}).code, trl::cli::kExitUsage);
}

TEST_F(Cli, CorruptInputsAreDataErrors) {
  spit(path("junk.ckpt"), "definitely not a checkpoint");
  EXPECT_EQ(cli({"eval", "--checkpoint", path("junk.ckpt"), "--log-level", "off"}).code, trl::cli::kExitData);
  spit(path("a.json"), "{\"reward\": ");
  EXPECT_EQ(cli({"report", path("a.json"), path("a.json")}).code, trl::cli::kExitData);
  EXPECT_EQ(cli({"eval", "--checkpoint", path("absent.ckpt")}).code, trl::cli::kExitUsage);
}

TEST_F(Cli, ExecutableExitCodes) {
  const std::string exe = TRL_CLI_EXE;
  const auto status = [&](const std::string& args) {
    const int s = std::system((exe + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status("--help"), 0);
  EXPECT_EQ(status("score"), 1);
  spit(path("bad.jsonl"), "not json\n");
  spit(path("r.jsonl"), "{\"id\": 1, \"refs\": [[\"a\"]]}\n");
  EXPECT_EQ(status("score --candidates " + path("bad.jsonl") + " --references " + path("r.jsonl")), 2);
}
