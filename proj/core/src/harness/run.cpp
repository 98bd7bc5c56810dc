#include "trl/harness/run.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "trl/error.hpp"
#include "trl/nn/checkpoint.hpp"

namespace trl::harness {

using nlohmann::json;

std::string to_string(Phase p) {
  switch (p) {
    case Phase::ml: return "ml";
    case Phase::critic: return "critic";
    case Phase::actor_critic: return "actor_critic";
    case Phase::done: return "done";
  }
  return "?";
}

namespace {

Phase phase_from_string(const std::string& s) {
  for (auto p : {Phase::ml, Phase::critic, Phase::actor_critic, Phase::done})
    if (to_string(p) == s) return p;
  throw Error("corrupt run checkpoint: unknown phase '" + s + "'");
}

constexpr char kRunMagic[9] = "TRLRUN01";

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 step: decorrelates the per-component streams of one run seed.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

json table_json(const MetricTable& t) {
  json j = json::array();
  for (const auto& m : t) j.push_back({{"metric", m.name}, {"value", m.value}});
  return j;
}

MetricTable table_from(const json& j) {
  MetricTable t;
  for (const auto& e : j) t.push_back({e.at("metric").get<std::string>(), e.at("value").get<double>()});
  return t;
}

json history_json(const RunHistory& h) {
  json ac = json::array();
  for (const auto& s : h.ac) ac.push_back({{"actor_loss", s.actor_loss}, {"critic_loss", s.critic_loss}, {"mean_reward", s.mean_reward}});
  return {{"ml_loss", h.ml_loss}, {"critic_loss", h.critic_loss}, {"actor_critic", ac}};
}

RunHistory history_from(const json& j) {
  RunHistory h;
  h.ml_loss = j.at("ml_loss").get<std::vector<double>>();
  h.critic_loss = j.at("critic_loss").get<std::vector<double>>();
  for (const auto& s : j.at("actor_critic"))
    h.ac.push_back({s.at("actor_loss").get<double>(), s.at("critic_loss").get<double>(), s.at("mean_reward").get<double>()});
  return h;
}

template <class U>
void put_le(std::ostream& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <class U>
U get_le(std::istream& in) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw Error("truncated checkpoint");
    v |= static_cast<U>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

std::string format_2(double v) {
  std::ostringstream o;
  o.imbue(std::locale::classic());
  o << std::fixed << std::setprecision(2) << v;
  return o.str();
}

}  // namespace

std::string report_json(const RunReport& r) {
  json j = {
      {"reward", r.reward},
      {"seed", r.seed},
      {"config_hash", r.config_hash},
      {"config", r.config},
      {"history", history_json(r.history)},
      {"val", table_json(r.val)},
      {"test", table_json(r.test)},
      {"reward_model_checksum", r.reward_model_checksum},
  };
  return j.dump(2) + "\n";
}

RunReport parse_report_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    RunReport r;
    r.reward = j.at("reward").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.config = j.at("config").get<std::string>();
    r.history = history_from(j.at("history"));
    r.val = table_from(j.at("val"));
    r.test = table_from(j.at("test"));
    r.reward_model_checksum = j.at("reward_model_checksum").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed run report: ") + e.what());
  }
}

std::string report_csv(const RunReport& r) {
  std::string out = "split,metric,value\n";
  for (const auto* part : {&r.val, &r.test})
    for (const auto& m : *part) out += std::string(part == &r.val ? "val" : "test") + "," + m.name + "," + format_2(m.value) + "\n";
  return out;
}

void save_report(const RunReport& r, const std::filesystem::path& json_path, const std::filesystem::path& csv_path) {
  std::ofstream j(json_path, std::ios::binary);
  if (!j) throw Error("cannot write " + json_path.string());
  j << report_json(r);
  std::ofstream c(csv_path, std::ios::binary);
  if (!c) throw Error("cannot write " + csv_path.string());
  c << report_csv(r);
}

RunReport load_report(const std::filesystem::path& json_path) {
  std::ifstream in(json_path, std::ios::binary);
  if (!in) throw Error("cannot open report " + json_path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_report_json(ss.str());
}

Run::Run(const TrainConfig& cfg, const Experiment& ex) : cfg_(cfg), ex_(&ex) {
  cfg_.validate();
  const auto net = network_config(cfg_, ex.train);
  policy_ = std::make_unique<agent::PolicyNetwork>(net, derive_seed(cfg_.seed, 0));
  critic_ = std::make_unique<agent::CriticNetwork>(net, derive_seed(cfg_.seed, 1));
  rng_.seed(derive_seed(cfg_.seed, 2));
  if (cfg_.reward != RewardKind::ml) {
    reward_ = make_reward(ex, cfg_);
    if (cfg_.reward == RewardKind::trl) reward_checksum_ = std::to_string(ex.reward_model->store().checksum());
  }
  phase_ = Phase::ml;
  epoch_ = 0;
  if (cfg_.actor_pretrain_epochs == 0) advance_phase();
}

Run Run::branch(const Run& pretrained, const TrainConfig& cfg) {
  if (pretrained.phase_ == Phase::ml) throw Error("branch: source run has not finished ML pretraining");
  if (!pretrained.history_.critic_loss.empty() || !pretrained.history_.ac.empty())
    throw Error("branch: source run must stop right after ML pretraining");
  if (pretrained.cfg_.seed != cfg.seed || pretrained.cfg_.actor_pretrain_epochs != cfg.actor_pretrain_epochs)
    throw Error("branch: seed and ML schedule must match the source run");
  Run r(cfg, *pretrained.ex_);
  nn::ParameterStore p = pretrained.policy_->store();
  p.set_frozen(false);
  nn::restore_into(p, r.policy_->store());
  nn::restore_into(pretrained.critic_->store(), r.critic_->store());
  r.rng_ = pretrained.rng_;
  r.history_.ml_loss = pretrained.history_.ml_loss;
  r.phase_ = Phase::ml;
  r.epoch_ = cfg.actor_pretrain_epochs;
  r.advance_phase();
  return r;
}

const RewardFunction& Run::reward() const {
  if (!reward_) throw Error("run has no reward function");
  return *reward_;
}

void Run::advance_phase() {
  auto epochs_of = [&](Phase p) -> std::size_t {
    switch (p) {
      case Phase::ml: return cfg_.actor_pretrain_epochs;
      case Phase::critic: return cfg_.reward == RewardKind::ml ? 0 : cfg_.critic_pretrain_epochs;
      case Phase::actor_critic: return cfg_.reward == RewardKind::ml ? 0 : cfg_.ac_epochs;
      case Phase::done: return 1;
    }
    return 0;
  };
  while (phase_ != Phase::done && epoch_ >= epochs_of(phase_)) {
    phase_ = static_cast<Phase>(static_cast<int>(phase_) + 1);
    epoch_ = 0;
  }
}

void Run::step() {
  if (done()) return;
  switch (phase_) {
    case Phase::ml: {
      const double loss = ml_epoch(*policy_, ex_->train, cfg_, rng_);
      history_.ml_loss.push_back(loss);
      spdlog::info("ml epoch {}: cross-entropy {:.4f}", epoch_ + 1, loss);
      break;
    }
    case Phase::critic: {
      policy_->store().set_frozen(true);
      const auto loss = pretrain_critic(*critic_, *policy_, reward(), ex_->train, 1, cfg_, rng_);
      policy_->store().set_frozen(false);
      history_.critic_loss.push_back(loss.front());
      spdlog::info("critic epoch {}: kl loss {:.4f}", epoch_ + 1, loss.front());
      break;
    }
    case Phase::actor_critic: {
      const auto s = actor_critic_epoch(*policy_, *critic_, reward(), ex_->train, cfg_, rng_, true);
      history_.ac.push_back(s);
      spdlog::info("actor-critic epoch {}: reward {:.4f} actor {:.4f} critic {:.4f}", epoch_ + 1, s.mean_reward,
                   s.actor_loss, s.critic_loss);
      break;
    }
    case Phase::done: return;
  }
  ++epoch_;
  advance_phase();
}

void Run::run(const std::function<void(const Run&)>& after_epoch) {
  while (!done()) {
    step();
    if (after_epoch) after_epoch(*this);
  }
}

RunReport Run::report(const std::vector<std::string>& metrics) const {
  RunReport r;
  r.reward = to_string(cfg_.reward);
  r.seed = cfg_.seed;
  r.config_hash = config_hash(cfg_);
  r.config = serialize_config(cfg_);
  r.history = history_;
  const auto opts = eval_options(cfg_);
  r.val = evaluate(*policy_, ex_->val, metrics, ex_->embeddings, opts);
  r.test = evaluate(*policy_, ex_->test, metrics, ex_->embeddings, opts);
  if (!reward_checksum_.empty()) {
    const std::string now = std::to_string(ex_->reward_model->store().checksum());
    if (now != reward_checksum_) throw Error("reward model parameters changed during training");
    r.reward_model_checksum = now;
  }
  return r;
}

void Run::write(std::ostream& out) const {
  std::ostringstream rng_state;
  rng_state << rng_;
  const json j = {
      {"config", serialize_config(cfg_)},
      {"config_hash", config_hash(cfg_)},
      {"phase", to_string(phase_)},
      {"epoch", epoch_},
      {"rng", rng_state.str()},
      {"history", history_json(history_)},
  };
  const std::string text = j.dump();
  out.write(kRunMagic, 8);
  put_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  nn::write_checkpoint(out, policy_->store(), true);
  nn::write_checkpoint(out, critic_->store(), true);
  if (!out) throw Error("failed writing run checkpoint");
}

void Run::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write(out);
}

namespace {

json read_header(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kRunMagic, 8) != 0) throw Error("not a checkpoint");
  const auto len = get_le<std::uint64_t>(in);
  if (len > (1ULL << 30)) throw Error("corrupt checkpoint: header length");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw Error("truncated checkpoint");
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("corrupt checkpoint header: ") + e.what());
  }
}

TrainConfig config_from_header(const json& j) {
  std::istringstream cfg_text(j.at("config").get<std::string>());
  TrainConfig cfg = parse_config(cfg_text);
  if (config_hash(cfg) != j.at("config_hash").get<std::string>()) throw Error("checkpoint config hash mismatch");
  return cfg;
}

}  // namespace

Run Run::read(std::istream& in, const Experiment& ex) {
  const json j = read_header(in);
  try {
    Run r(config_from_header(j), ex);
    r.phase_ = phase_from_string(j.at("phase").get<std::string>());
    r.epoch_ = j.at("epoch").get<std::size_t>();
    std::istringstream rng_state(j.at("rng").get<std::string>());
    if (!(rng_state >> r.rng_)) throw Error("corrupt checkpoint: rng state");
    r.history_ = history_from(j.at("history"));
    nn::restore_into(nn::read_checkpoint(in), r.policy_->store());
    nn::restore_into(nn::read_checkpoint(in), r.critic_->store());
    return r;
  } catch (const json::exception& e) {
    throw Error(std::string("corrupt checkpoint header: ") + e.what());
  }
}

Run Run::load(const std::filesystem::path& path, const Experiment& ex) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  return read(in, ex);
}

TrainConfig Run::peek_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  return config_from_header(read_header(in));
}

}  // namespace trl::harness
