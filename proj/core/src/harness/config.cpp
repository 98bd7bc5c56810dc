#include "trl/harness/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

#include "trl/error.hpp"

namespace trl::harness {

std::string to_string(RewardKind r) {
  switch (r) {
    case RewardKind::ml: return "ml";
    case RewardKind::bleu: return "bleu";
    case RewardKind::rouge_l: return "rouge_l";
    case RewardKind::cider: return "cider";
    case RewardKind::wmd: return "wmd";
    case RewardKind::kernel_cos: return "kernel_cos";
    case RewardKind::trl: return "trl";
  }
  return "?";
}

RewardKind reward_from_string(const std::string& s) {
  for (auto r : {RewardKind::ml, RewardKind::bleu, RewardKind::rouge_l, RewardKind::cider, RewardKind::wmd,
                 RewardKind::kernel_cos, RewardKind::trl})
    if (to_string(r) == s) return r;
  throw Error("unknown reward '" + s + "' (expected ml, bleu, rouge_l, cider, wmd, kernel_cos or trl)");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw Error("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw Error("config: '" + key + "' expects an unsigned integer, got '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  in.imbue(std::locale::classic());
  double out = 0.0;
  if (!(in >> out) || !in.eof()) throw Error("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Field {
  std::function<void(TrainConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

#define TRL_SIZE(name) {#name, {[](TrainConfig& c, const std::string& k, const std::string& v) { c.name = parse_size(k, v); }, [](const TrainConfig& c) { return std::to_string(c.name); }}}
#define TRL_U64(name) {#name, {[](TrainConfig& c, const std::string& k, const std::string& v) { c.name = parse_u64(k, v); }, [](const TrainConfig& c) { return std::to_string(c.name); }}}
#define TRL_REAL(name) {#name, {[](TrainConfig& c, const std::string& k, const std::string& v) { c.name = parse_double(k, v); }, [](const TrainConfig& c) { return fmt_double(c.name); }}}

// Canonical order of keys.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> f = {
      TRL_SIZE(scenes),
      TRL_U64(data_seed),
      TRL_REAL(feature_noise),
      TRL_SIZE(word_dim),
      TRL_SIZE(d_emb),
      TRL_SIZE(d_h),
      TRL_SIZE(batch),
      TRL_SIZE(actor_pretrain_epochs),
      TRL_SIZE(critic_pretrain_epochs),
      TRL_SIZE(ac_epochs),
      TRL_SIZE(max_len),
      TRL_SIZE(beam),
      TRL_REAL(lambda),
      TRL_REAL(gamma),
      TRL_REAL(lr_ml),
      TRL_REAL(lr_actor),
      TRL_REAL(lr_critic),
      TRL_REAL(grad_clip),
      {"reward", {[](TrainConfig& c, const std::string&, const std::string& v) { c.reward = reward_from_string(v); },
                  [](const TrainConfig& c) { return to_string(c.reward); }}},
      {"aggregation",
       {[](TrainConfig& c, const std::string&, const std::string& v) { c.aggregation = simscore::aggregation_from_string(v); },
        [](const TrainConfig& c) { return simscore::to_string(c.aggregation); }}},
      {"granularity",
       {[](TrainConfig& c, const std::string&, const std::string& v) { c.granularity = simscore::granularity_from_string(v); },
        [](const TrainConfig& c) { return simscore::to_string(c.granularity); }}},
      TRL_SIZE(kernel_window),
      {"wmd_similarity",
       {[](TrainConfig& c, const std::string& k, const std::string& v) {
          if (v == "exp") c.wmd_similarity = transport::WmdSimilarity::exp_neg;
          else if (v == "inverse") c.wmd_similarity = transport::WmdSimilarity::inverse;
          else throw Error("config: '" + k + "' expects exp or inverse, got '" + v + "'");
        },
        [](const TrainConfig& c) { return std::string(c.wmd_similarity == transport::WmdSimilarity::exp_neg ? "exp" : "inverse"); }}},
      {"scorer_kind",
       {[](TrainConfig& c, const std::string&, const std::string& v) { c.scorer_kind = simscore::encoder_kind_from_string(v); },
        [](const TrainConfig& c) { return simscore::to_string(c.scorer_kind); }}},
      TRL_SIZE(scorer_d_h),
      TRL_SIZE(scorer_pairs),
      TRL_SIZE(scorer_epochs),
      TRL_REAL(scorer_lr),
      TRL_U64(scorer_seed),
      TRL_U64(seed),
      TRL_SIZE(workers),
  };
  return f;
}

#undef TRL_SIZE
#undef TRL_U64
#undef TRL_REAL

}  // namespace

TrainConfig large_preset() {
  TrainConfig c;
  c.d_emb = 512;
  c.d_h = 512;
  c.batch = 80;
  return c;
}

void TrainConfig::validate() const {
  auto positive = [](const char* name, std::size_t v) {
    if (v == 0) throw Error(std::string("config: ") + name + " must be positive");
  };
  positive("scenes", scenes);
  positive("word_dim", word_dim);
  positive("d_emb", d_emb);
  positive("d_h", d_h);
  positive("batch", batch);
  positive("max_len", max_len);
  positive("beam", beam);
  positive("kernel_window", kernel_window);
  positive("scorer_d_h", scorer_d_h);
  positive("workers", workers);
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("config: lambda must lie in [0, 1]");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error("config: gamma must lie in (0, 1]");
  for (double lr : {lr_ml, lr_actor, lr_critic, scorer_lr})
    if (!(lr > 0.0)) throw Error("config: learning rates must be positive");
  if (!(feature_noise >= 0.0)) throw Error("config: feature_noise must be >= 0");
  if (!(grad_clip >= 0.0)) throw Error("config: grad_clip must be >= 0");
}

void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "preset") {
    if (value == "large") {
      const TrainConfig p = large_preset();
      cfg.d_emb = p.d_emb;
      cfg.d_h = p.d_h;
      cfg.batch = p.batch;
    } else if (value == "desk") {
      const TrainConfig d;
      cfg.d_emb = d.d_emb;
      cfg.d_h = d.d_h;
      cfg.batch = d.batch;
    } else {
      throw Error("config: preset must be desk or large, got '" + value + "'");
    }
    return;
  }
  for (const auto& [name, field] : fields())
    if (name == key) return field.set(cfg, key, value);
  throw Error("config: unknown key '" + key + "'");
}

TrainConfig parse_config(std::istream& in, TrainConfig base) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    try {
      set_config_value(base, key, value);
    } catch (const Error& e) {
      throw Error("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  base.validate();
  return base;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  return parse_config(in, std::move(base));
}

std::string serialize_config(const TrainConfig& cfg) {
  std::string out;
  for (const auto& [name, field] : fields()) out += name + " = " + field.get(cfg) + "\n";
  return out;
}

std::string config_hash(const TrainConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& [name, field] : fields()) {
    if (name == "workers") continue;
    for (char ch : name + "=" + field.get(cfg) + "\n") {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ULL;
    }
  }
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << h;
  return o.str();
}

}  // namespace trl::harness
