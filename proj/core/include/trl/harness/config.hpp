#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "trl/core/numeric.hpp"
#include "trl/simscore/encoder.hpp"
#include "trl/simscore/reward_model.hpp"
#include "trl/transport/wmd.hpp"

namespace trl::harness {

enum class RewardKind { ml, bleu, rouge_l, cider, wmd, kernel_cos, trl };

std::string to_string(RewardKind r);
RewardKind reward_from_string(const std::string& s);

struct TrainConfig {
  // Synthetic data (ignored when a corpus directory is supplied).
  std::size_t scenes = 200;
  std::uint64_t data_seed = 7;
  double feature_noise = 0.3;
  std::size_t word_dim = 32;  // fixed word vectors used by WMD, COS and the scorer

  // Networks and schedule.
  std::size_t d_emb = 64;
  std::size_t d_h = 64;
  std::size_t batch = 16;
  std::size_t actor_pretrain_epochs = 5;
  std::size_t critic_pretrain_epochs = 7;
  std::size_t ac_epochs = 10;
  std::size_t max_len = 16;
  std::size_t beam = 5;
  double lambda = 1.0;
  double gamma = 1.0;
  double lr_ml = 2e-3;
  double lr_actor = 5e-4;
  double lr_critic = 1e-3;
  double grad_clip = 5.0;  // global norm; 0 disables

  // Rewards.
  RewardKind reward = RewardKind::trl;
  core::Aggregation aggregation = core::Aggregation::mean;
  simscore::Granularity granularity = simscore::Granularity::terminal;
  std::size_t kernel_window = 2;
  transport::WmdSimilarity wmd_similarity = transport::WmdSimilarity::exp_neg;

  // Transfer reward learner.
  simscore::EncoderKind scorer_kind = simscore::EncoderKind::bigru_maxpool;
  std::size_t scorer_d_h = 32;
  std::size_t scorer_pairs = 2000;
  std::size_t scorer_epochs = 10;
  double scorer_lr = 2e-3;
  std::uint64_t scorer_seed = 11;

  std::uint64_t seed = 1;
  std::size_t workers = 1;  // evaluation fan-out; results do not depend on it

  /// Throws trl::Error on out-of-range values.
  void validate() const;
};

/// Full-size dimensions (512/512, batch 80).
TrainConfig large_preset();

/// `key = value` lines; `#` and `;` start comments; `[section]` headers are
/// accepted and ignored. `preset = large` resets to large dimensions before
/// the keys that follow it. Unknown keys raise trl::Error naming the line.
TrainConfig parse_config(std::istream& in, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});

/// Applies one `key=value` assignment.
void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value);

/// Canonical `key = value` text, one key per line in a fixed order.
std::string serialize_config(const TrainConfig& cfg);

/// FNV-1a of the canonical text without `workers`, as 16 hex digits.
std::string config_hash(const TrainConfig& cfg);

}  // namespace trl::harness
