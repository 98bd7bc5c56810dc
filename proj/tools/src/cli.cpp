#include "trl/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "trl/error.hpp"
#include "trl/harness/run.hpp"

namespace fs = std::filesystem;

namespace trl::cli {

namespace {

// Bad flag combinations that CLI11 cannot express; exit 1 like parse errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> reward;
  std::optional<std::size_t> beam;
  std::optional<std::size_t> workers;
  std::vector<std::string> overrides;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f, bool with_reward) {
  cmd->add_option("--config", f.config_path, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "run seed (overrides the config)");
  if (with_reward) {
    std::vector<std::string> names;
    for (auto r : {harness::RewardKind::ml, harness::RewardKind::bleu, harness::RewardKind::rouge_l, harness::RewardKind::cider,
                   harness::RewardKind::wmd, harness::RewardKind::kernel_cos, harness::RewardKind::trl})
      names.push_back(harness::to_string(r));
    cmd->add_option("--reward", f.reward, "reward for actor-critic training")->check(CLI::IsMember(names));
  }
  cmd->add_option("--beam", f.beam, "beam size at evaluation")->check(CLI::PositiveNumber);
  cmd->add_option("--workers", f.workers, "decode/sampling threads")->check(CLI::PositiveNumber);
  cmd->add_option("--set", f.overrides, "extra config assignment KEY=VALUE (repeatable)");
}

harness::TrainConfig resolve(const ConfigFlags& f, harness::TrainConfig cfg = {}) {
  if (!f.config_path.empty()) cfg = harness::load_config(f.config_path, cfg);
  for (const auto& kv : f.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects KEY=VALUE, got '" + kv + "'");
    try {
      harness::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  if (f.seed) cfg.seed = *f.seed;
  if (f.reward) cfg.reward = harness::reward_from_string(*f.reward);
  if (f.beam) cfg.beam = *f.beam;
  if (f.workers) cfg.workers = *f.workers;
  cfg.validate();
  return cfg;
}

void print_config(const harness::TrainConfig& cfg, std::ostream& err) {
  err << "# seed " << cfg.seed << ", config hash " << harness::config_hash(cfg) << "\n";
  std::istringstream lines(harness::serialize_config(cfg));
  for (std::string line; std::getline(lines, line);) err << "#   " << line << "\n";
}

harness::Experiment experiment_for(const harness::TrainConfig& cfg, const std::string& data_dir) {
  return data_dir.empty() ? harness::make_experiment(cfg) : harness::load_experiment(data_dir, cfg);
}

// Loads `dir/reward_model.bin` when present, otherwise trains one.
void attach_reward_model(harness::Experiment& ex, const harness::TrainConfig& cfg, const fs::path& dir) {
  if (cfg.reward != harness::RewardKind::trl) return;
  const auto path = dir / "reward_model.bin";
  if (fs::exists(path)) {
    ex.reward_model = std::make_shared<const simscore::RewardModel>(simscore::load_reward_model(path));
    spdlog::info("loaded reward model {}", path.string());
    return;
  }
  harness::ensure_reward_model(ex, cfg);
}

std::vector<std::string> metrics_arg(const std::string& csv) {
  try {
    return harness::parse_metric_list(csv);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

std::string fixed2(double v) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(2) << v;
  return o.str();
}

// ---- gen-data -------------------------------------------------------------

struct GenDataArgs {
  std::size_t scenes = 200;
  std::uint64_t seed = 7;
  std::size_t word_dim = 32;
  std::string out;
};

int cmd_gen_data(const GenDataArgs& a, std::ostream& out, std::ostream& err) {
  harness::TrainConfig cfg;
  cfg.scenes = a.scenes;
  cfg.data_seed = a.seed;
  cfg.word_dim = a.word_dim;
  err << "# data seed " << a.seed << ", scenes " << a.scenes << ", word_dim " << a.word_dim << "\n";
  harness::write_synthetic_dataset(cfg, a.out);
  out << "wrote " << (fs::path(a.out) / "corpus.jsonl").string() << "\n";
  return kExitOk;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  ConfigFlags cfg;
  std::string out = "run";
  std::string data;
  std::string checkpoint;
  std::string metrics = "all";
};

void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw Error("cannot write " + tmp.string());
    body(f);
    if (!f) throw Error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const auto metrics = metrics_arg(a.metrics);
  const fs::path dir = a.out;
  fs::create_directories(dir);

  harness::TrainConfig cfg;
  if (!a.checkpoint.empty()) {
    if (!a.cfg.config_path.empty() || a.cfg.seed || a.cfg.reward || !a.cfg.overrides.empty())
      throw UsageError("--checkpoint resumes a stored configuration; drop --config/--seed/--reward/--set");
    cfg = harness::Run::peek_config(a.checkpoint);
  } else {
    cfg = resolve(a.cfg);
  }
  print_config(cfg, err);

  auto ex = experiment_for(cfg, a.data);
  attach_reward_model(ex, cfg, a.checkpoint.empty() ? dir : fs::path(a.checkpoint).parent_path());
  if (ex.reward_model && !fs::exists(dir / "reward_model.bin")) simscore::save_reward_model(*ex.reward_model, dir / "reward_model.bin");

  const auto start = std::chrono::steady_clock::now();
  auto run = a.checkpoint.empty() ? harness::Run(cfg, ex) : harness::Run::load(a.checkpoint, ex);
  const fs::path ckpt = dir / "run.ckpt";
  bool saved = false;
  run.run([&](const harness::Run& r) {
    write_atomic(ckpt, [&](std::ostream& f) { r.write(f); });
    saved = true;
  });
  if (!saved) write_atomic(ckpt, [&](std::ostream& f) { run.write(f); });

  const auto report = run.report(metrics);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  harness::save_report(report, dir / "report.json", dir / "report.csv");
  write_atomic(dir / "timing.json", [&](std::ostream& f) { f << nlohmann::json{{"wall_clock_seconds", seconds}}.dump() << "\n"; });
  out << harness::report_csv(report);
  err << "# wrote " << ckpt.string() << " and " << (dir / "report.json").string() << "\n";
  return kExitOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string metrics = "all";
  std::optional<std::size_t> beam;
  std::optional<std::size_t> workers;
  std::string out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const auto metrics = metrics_arg(a.metrics);
  const auto cfg = harness::Run::peek_config(a.checkpoint);
  print_config(cfg, err);
  auto ex = experiment_for(cfg, a.data);
  attach_reward_model(ex, cfg, fs::path(a.checkpoint).parent_path());
  const auto run = harness::Run::load(a.checkpoint, ex);

  auto opts = harness::eval_options(cfg);
  if (a.beam) opts.beam = *a.beam;
  if (a.workers) opts.workers = *a.workers;
  harness::RunReport table;
  table.val = harness::evaluate(run.policy(), ex.val, metrics, ex.embeddings, opts);
  table.test = harness::evaluate(run.policy(), ex.test, metrics, ex.embeddings, opts);
  const auto csv = harness::report_csv(table);
  if (!a.out.empty()) write_atomic(a.out, [&](std::ostream& f) { f << csv; });
  out << csv;
  return kExitOk;
}

// ---- score ----------------------------------------------------------------

struct ScoreArgs {
  std::string candidates;
  std::string references;
  std::string metric = "bleu4";
  std::string data;
  std::string config_path;
};

std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<nlohmann::json> rows;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
    }
  }
  return rows;
}

std::vector<std::string> words_of(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw Error(where + ": expected a list of tokens");
  std::vector<std::string> w;
  for (const auto& t : j) {
    if (!t.is_string()) throw Error(where + ": tokens must be strings");
    w.push_back(t.get<std::string>());
  }
  return w;
}

std::int64_t id_of(const nlohmann::json& row, const std::string& where) {
  if (!row.is_object() || !row.contains("id") || !row["id"].is_number_integer()) throw Error(where + ": missing integer \"id\"");
  return row["id"].get<std::int64_t>();
}

int cmd_score(const ScoreArgs& a, std::ostream& out, std::ostream&) {
  const auto metrics = metrics_arg(a.metric);
  const bool needs_emb = std::any_of(metrics.begin(), metrics.end(), [](const std::string& m) { return m == "wmd" || m == "cos"; });
  if (needs_emb && a.data.empty()) throw UsageError("metrics wmd and cos need --data (a gen-data directory with embeddings)");
  harness::TrainConfig cfg;
  if (!a.config_path.empty()) cfg = harness::load_config(a.config_path);

  std::vector<std::pair<std::int64_t, std::vector<std::string>>> cands;
  for (const auto& row : read_jsonl(a.candidates)) {
    const auto id = id_of(row, a.candidates);
    if (!row.contains("tokens")) throw Error(a.candidates + ": candidate " + std::to_string(id) + " has no \"tokens\"");
    cands.emplace_back(id, words_of(row["tokens"], a.candidates));
  }
  std::map<std::int64_t, std::vector<std::vector<std::string>>> refs;
  for (const auto& row : read_jsonl(a.references)) {
    const auto id = id_of(row, a.references);
    if (!row.contains("refs") || !row["refs"].is_array() || row["refs"].empty())
      throw Error(a.references + ": entry " + std::to_string(id) + " needs a nonempty \"refs\" list");
    auto& slot = refs[id];
    if (!slot.empty()) throw Error(a.references + ": duplicate id " + std::to_string(id));
    for (const auto& r : row["refs"]) slot.push_back(words_of(r, a.references));
  }
  if (cands.empty()) throw Error(a.candidates + ": no candidates");

  core::Vocabulary vocab;
  std::optional<core::EmbeddingTable> emb;
  if (!a.data.empty()) {
    vocab = core::load_vocabulary(fs::path(a.data) / "vocab.txt");
    emb = core::load_embeddings(fs::path(a.data) / "embeddings.txt", vocab, true, cfg.data_seed);
  } else {
    std::vector<std::vector<std::string>> all;
    for (const auto& [id, c] : cands) all.push_back(c);
    for (const auto& [id, rs] : refs) all.insert(all.end(), rs.begin(), rs.end());
    vocab = core::build_vocabulary(all, 1);
  }

  std::vector<core::TokenSequence> cand_ids;
  std::vector<std::vector<core::TokenSequence>> ref_ids;
  for (const auto& [id, c] : cands) {
    const auto it = refs.find(id);
    if (it == refs.end()) throw Error("candidate " + std::to_string(id) + " has no references");
    cand_ids.push_back(core::tokenize(c, vocab));
    auto& rs = ref_ids.emplace_back();
    for (const auto& r : it->second) rs.push_back(core::tokenize(r, vocab));
  }
  const auto table = harness::score_candidates(cand_ids, ref_ids, metrics, emb ? &*emb : nullptr, harness::eval_options(cfg));
  for (const auto& m : table) out << m.name << "," << fixed2(m.value) << "\n";
  return kExitOk;
}

// ---- report ---------------------------------------------------------------

struct ReportArgs {
  std::string baseline;
  std::string candidate;
};

int cmd_report(const ReportArgs& a, std::ostream& out, std::ostream&) {
  const auto base = harness::load_report(a.baseline);
  const auto cand = harness::load_report(a.candidate);
  out << "# baseline " << base.reward << " (seed " << base.seed << "), candidate " << cand.reward << " (seed " << cand.seed << ")\n";
  out << "split,metric,baseline,candidate,delta\n";
  auto diff = [&](const char* split, const harness::MetricTable& b, const harness::MetricTable& c) {
    for (const auto& m : b) {
      const auto it = std::find_if(c.begin(), c.end(), [&](const harness::MetricValue& x) { return x.name == m.name; });
      if (it == c.end()) continue;
      out << split << "," << m.name << "," << fixed2(m.value) << "," << fixed2(it->value) << ","
          << (it->value >= m.value ? "+" : "") << fixed2(it->value - m.value) << "\n";
    }
  };
  diff("val", base.val, cand.val);
  diff("test", base.test, cand.test);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Actor-critic caption training with transfer reward learners"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "write a synthetic corpus, vocabulary, lexicon and word vectors");
  gen_cmd->add_option("--scenes", gen.scenes, "number of scenes")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "data seed");
  gen_cmd->add_option("--word-dim", gen.word_dim, "word vector dimension")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", gen.out, "output directory")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "ML pretraining, critic pretraining and actor-critic training");
  add_config_flags(train_cmd, train.cfg, true);
  train_cmd->add_option("--out", train.out, "output directory for run.ckpt, report.json, report.csv");
  train_cmd->add_option("--data", train.data, "gen-data directory (default: regenerate from the config)");
  train_cmd->add_option("--checkpoint", train.checkpoint, "resume from a run checkpoint")->check(CLI::ExistingFile);
  train_cmd->add_option("--metrics", train.metrics, "comma list of eval metrics or 'all'");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "beam-decode val/test with a checkpoint and print the metric table");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "run checkpoint")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", eval.data, "gen-data directory used for training, if any");
  eval_cmd->add_option("--metrics", eval.metrics, "comma list of eval metrics or 'all'");
  eval_cmd->add_option("--beam", eval.beam, "beam size (default: from the checkpoint)")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--workers", eval.workers, "decode threads")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--out", eval.out, "also write the CSV here");

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "score candidate captions against references");
  score_cmd->add_option("--candidates", score.candidates, "JSON lines {\"id\", \"tokens\"}")->required();
  score_cmd->add_option("--references", score.references, "JSON lines {\"id\", \"refs\"}")->required();
  score_cmd->add_option("--metric,--metrics", score.metric, "metric name, comma list, or 'all'");
  score_cmd->add_option("--data", score.data, "gen-data directory (vocabulary and embeddings; needed for wmd, cos)");
  score_cmd->add_option("--config", score.config_path, "config file for aggregation, kernel_window, wmd_similarity")
      ->check(CLI::ExistingFile);

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "per-metric deltas between two report.json files");
  report_cmd->add_option("baseline", report.baseline, "baseline report.json")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("candidate", report.candidate, "candidate report.json")->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  spdlog::set_level(spdlog::level::from_str(log_level));
  try {
    if (*gen_cmd) return cmd_gen_data(gen, out, err);
    if (*train_cmd) return cmd_train(train, out, err);
    if (*eval_cmd) return cmd_eval(eval, out, err);
    if (*score_cmd) return cmd_score(score, out, err);
    if (*report_cmd) return cmd_report(report, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace trl::cli
