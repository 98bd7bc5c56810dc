#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "trl/agent/networks.hpp"
#include "trl/harness/evaluate.hpp"
#include "trl/harness/training.hpp"

namespace trl::harness {

enum class Phase { ml, critic, actor_critic, done };
std::string to_string(Phase p);

struct RunHistory {
  std::vector<double> ml_loss;
  std::vector<double> critic_loss;
  std::vector<AcEpochStats> ac;
};

/// Serializable summary of a finished run. Wall-clock time is deliberately
/// not part of it, so reruns produce byte-identical reports.
struct RunReport {
  std::string reward;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string config;
  RunHistory history;
  MetricTable val;
  MetricTable test;
  std::string reward_model_checksum;  // empty unless a reward model was used
};

std::string report_json(const RunReport& r);
RunReport parse_report_json(const std::string& text);
/// `split,metric,value` rows, values with two decimals.
std::string report_csv(const RunReport& r);
void save_report(const RunReport& r, const std::filesystem::path& json_path, const std::filesystem::path& csv_path);
RunReport load_report(const std::filesystem::path& json_path);

/// One training run: ML pretraining, then (for reward kinds other than ml)
/// critic pretraining against the frozen policy and joint actor-critic
/// training. Advances one epoch at a time so it can be checkpointed and
/// resumed at any epoch boundary with an identical trajectory.
class Run {
 public:
  Run(const TrainConfig& cfg, const Experiment& ex);

  /// Continues `pretrained` (which must have finished its ML phase and use
  /// the same seed and ML settings) under `cfg`. Equivalent to running `cfg`
  /// from scratch, minus the repeated ML pretraining.
  static Run branch(const Run& pretrained, const TrainConfig& cfg);

  const TrainConfig& config() const { return cfg_; }
  Phase phase() const { return phase_; }
  std::size_t epoch_in_phase() const { return epoch_; }
  bool done() const { return phase_ == Phase::done; }
  const RunHistory& history() const { return history_; }

  agent::PolicyNetwork& policy() { return *policy_; }
  const agent::PolicyNetwork& policy() const { return *policy_; }
  agent::CriticNetwork& critic() { return *critic_; }
  const agent::CriticNetwork& critic() const { return *critic_; }

  /// Runs one epoch of the current phase.
  void step();
  /// Steps until done, calling `after_epoch` after each epoch.
  void run(const std::function<void(const Run&)>& after_epoch = {});

  /// Evaluates val and test with `metrics` (default: every column).
  RunReport report(const std::vector<std::string>& metrics = known_metrics()) const;

  // "TRLRUN01", u64 json length, json (config, phase, epoch, rng, history),
  // then the policy and critic as nn checkpoints with Adam state.
  void save(const std::filesystem::path& path) const;
  void write(std::ostream& out) const;
  static Run load(const std::filesystem::path& path, const Experiment& ex);
  static Run read(std::istream& in, const Experiment& ex);
  /// Config stored in a run checkpoint, without needing the experiment.
  static TrainConfig peek_config(const std::filesystem::path& path);

 private:
  void advance_phase();
  const RewardFunction& reward() const;

  TrainConfig cfg_;
  const Experiment* ex_;
  std::unique_ptr<agent::PolicyNetwork> policy_;
  std::unique_ptr<agent::CriticNetwork> critic_;
  std::mt19937_64 rng_;
  Phase phase_ = Phase::ml;
  std::size_t epoch_ = 0;
  RunHistory history_;
  std::shared_ptr<RewardFunction> reward_;
  std::string reward_checksum_;
};

}  // namespace trl::harness
