#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "mgn/dataset.hpp"
#include "mgn/graph.hpp"
#include "mgn/model.hpp"

namespace mgn {

struct TrainConfig {
  int epochs = 25;
  int batch_size = 1;
  double learning_rate = 1e-4;
  double gamma = 0.82540;
  double noise_std = 0.02;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// eta_1 * gamma^(epoch - 1), epochs counted from 1.
double lr_at_epoch(int epoch, double initial, double gamma);

/// (1/3) |prediction - truth|^2.
double loss_at_node(const std::array<double, 3>& prediction, const std::array<double, 3>& truth);

/// Mean of loss_at_node over all columns; fills `grad` with dLoss/dprediction when given.
double node_loss(const Matrix& prediction, const Matrix& target, Matrix* grad = nullptr);

struct EpochStats {
  int epoch = 0;
  double learning_rate = 0.0;
  double mean_loss = 0.0;
  double seconds = 0.0;
  std::size_t transitions = 0;
};

struct Transition {
  int trajectory = 0;
  int frame = 0;  // input frame k; the target is frame k + 1

  friend bool operator==(const Transition&, const Transition&) = default;
  friend auto operator<=>(const Transition&, const Transition&) = default;
};

/// Every (trajectory, k) pair of the split in a seeded random order.
std::vector<Transition> shuffled_transitions(std::span<const Trajectory> trajs, Rng& rng);

/// Sequential Adam training with batch size 1. The random stream of epoch l is
/// derived from (seed, l) so a run restored from a checkpoint continues
/// exactly as the uninterrupted run would.
class Trainer {
 public:
  Trainer(MgnModel model, const NormStats& stats, const TrainConfig& cfg, std::span<const Trajectory> train);

  /// Runs the next epoch and returns its statistics.
  EpochStats train_epoch();
  /// Mean noiseless loss over every transition, without updating parameters.
  double evaluation_loss() const;

  int epochs_done() const { return epochs_done_; }
  void set_epochs_done(int n) { epochs_done_ = n; }
  const MgnModel& model() const { return model_; }
  MgnModel& model() { return model_; }
  const NormStats& stats() const { return stats_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  MgnModel model_;
  NormStats stats_;
  TrainConfig cfg_;
  std::span<const Trajectory> train_;
  std::vector<Graph> graphs_;
  int epochs_done_ = 0;
};

inline constexpr std::string_view kCheckpointMagic = "MGNCKPT1";

struct Checkpoint {
  MgnModel model;
  NormStats stats;
  TrainConfig train;
  int epochs_done = 0;
  nlohmann::json meta;
};

/// Container file (see binary_io.hpp) whose JSON header holds the model and
/// training configuration, NormStats, epoch and Adam step counters and the
/// parameter registry (name, rows, cols); the body stores all values, then
/// all Adam first moments, then all second moments, in registry order.
/// `meta` is stored verbatim (the CLI records the training dataset there).
void save_checkpoint(const std::filesystem::path& path, const MgnModel& model, const NormStats& stats,
                     const TrainConfig& train, int epochs_done,
                     const nlohmann::json& meta = nlohmann::json::object());
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Loads parameters and optimizer state into an existing model; throws
/// FormatError if the architectures differ.
void load_parameters(const std::filesystem::path& path, MgnModel& model);

}  // namespace mgn
