#include "trl/simscore/reward_model.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "trl/error.hpp"
#include "trl/nn/checkpoint.hpp"

namespace trl::simscore {

std::string to_string(Granularity g) { return g == Granularity::terminal ? "terminal" : "incremental"; }

Granularity granularity_from_string(const std::string& s) {
  if (s == "terminal") return Granularity::terminal;
  if (s == "incremental") return Granularity::incremental;
  throw Error("unknown granularity '" + s + "' (expected terminal or incremental)");
}

std::string to_string(core::Aggregation a) { return a == core::Aggregation::mean ? "mean" : "max"; }

core::Aggregation aggregation_from_string(const std::string& s) {
  if (s == "mean") return core::Aggregation::mean;
  if (s == "max") return core::Aggregation::max;
  throw Error("unknown aggregation '" + s + "' (expected mean or max)");
}

RewardModel::RewardModel(const RewardModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), encoder_(store_, "enc", cfg.encoder), scorer_(store_, "head", encoder_.output_dim()) {
  store_.init_uniform(seed);
}

EncodedReferences encode_references(const RewardModel& model, const std::vector<TokenSequence>& references,
                                    const core::EmbeddingTable& emb) {
  if (references.empty()) throw Error("trl_reward: empty reference list");
  EncodedReferences out;
  out.reserve(references.size());
  for (const auto& r : references) out.push_back(model.encode(core::strip_markers(r), emb));
  return out;
}

namespace {

void require_frozen(const RewardModel& model) {
  if (!model.frozen()) throw Error("reward model must be frozen");
}

double score_content(const RewardModel& model, std::span<const TokenId> content, const EncodedReferences& refs,
                     const core::EmbeddingTable& emb) {
  const auto h = model.encode(content, emb);
  std::vector<double> s;
  s.reserve(refs.size());
  for (const auto& r : refs) s.push_back(model.pair_score(h, r));
  return core::aggregate(s, model.config().aggregation);
}

}  // namespace

double trl_reward(const RewardModel& model, std::span<const TokenId> candidate, const EncodedReferences& references,
                  const core::EmbeddingTable& emb) {
  require_frozen(model);
  if (references.empty()) throw Error("trl_reward: empty reference list");
  const auto content = core::strip_markers(candidate);
  if (content.empty()) throw Error("empty content");
  return score_content(model, content, references, emb);
}

double trl_reward(const RewardModel& model, std::span<const TokenId> candidate, const std::vector<TokenSequence>& references,
                  const core::EmbeddingTable& emb) {
  require_frozen(model);
  return trl_reward(model, candidate, encode_references(model, references, emb), emb);
}

std::vector<double> trl_step_rewards(const RewardModel& model, std::span<const TokenId> actions,
                                     const EncodedReferences& references, const core::EmbeddingTable& emb) {
  require_frozen(model);
  if (references.empty()) throw Error("trl_reward: empty reference list");
  const std::size_t T = actions.size();
  std::vector<double> rewards(T, 0.0);
  if (T == 0) return rewards;
  if (model.config().granularity == Granularity::terminal) {
    const auto content = core::strip_markers(actions);
    rewards[T - 1] = content.empty() ? 0.0 : core::quantize_reward(score_content(model, content, references, emb));
    return rewards;
  }
  std::vector<double> prefix(T, 0.0);
  TokenSequence content;
  double last = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    // Marker actions leave the content, and therefore the score, unchanged.
    if (!core::is_marker(actions[t])) {
      content.push_back(actions[t]);
      last = score_content(model, content, references, emb);
    }
    prefix[t] = last;
  }
  return core::telescoping_increments(prefix);
}

void save_reward_model(const RewardModel& model, const std::filesystem::path& path) {
  nn::save_checkpoint(model.store(), path, false);
  const auto& c = model.config();
  nlohmann::json j = {
      {"kind", to_string(c.encoder.kind)},
      {"d_emb", c.encoder.d_emb},
      {"d_h", c.encoder.d_h},
      {"aggregation", to_string(c.aggregation)},
      {"granularity", to_string(c.granularity)},
      {"frozen", model.frozen()},
      {"checksum", std::to_string(model.store().checksum())},
  };
  std::ofstream out(path.string() + ".json", std::ios::binary);
  if (!out) throw Error("cannot write " + path.string() + ".json");
  out << j.dump(2) << '\n';
}

RewardModel load_reward_model(const std::filesystem::path& path) {
  const std::string sidecar = path.string() + ".json";
  std::ifstream in(sidecar);
  if (!in) throw Error("cannot open reward-model sidecar " + sidecar);
  nlohmann::json j;
  try {
    in >> j;
    RewardModelConfig cfg;
    cfg.encoder.kind = encoder_kind_from_string(j.at("kind").get<std::string>());
    cfg.encoder.d_emb = j.at("d_emb").get<std::size_t>();
    cfg.encoder.d_h = j.at("d_h").get<std::size_t>();
    cfg.aggregation = aggregation_from_string(j.at("aggregation").get<std::string>());
    cfg.granularity = granularity_from_string(j.at("granularity").get<std::string>());
    RewardModel model(cfg);
    nn::restore_into(nn::load_checkpoint(path), model.store());
    if (std::to_string(model.store().checksum()) != j.at("checksum").get<std::string>())
      throw Error("reward model checksum mismatch for " + path.string());
    if (j.at("frozen").get<bool>()) model.freeze();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed reward-model sidecar " + sidecar + ": " + e.what());
  }
}

}  // namespace trl::simscore
