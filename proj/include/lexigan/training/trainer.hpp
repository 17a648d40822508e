#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lexigan/autodiff/optim.hpp"
#include "lexigan/corpus/audio.hpp"
#include "lexigan/models/latent.hpp"
#include "lexigan/models/networks.hpp"
#include "lexigan/rng.hpp"

namespace lexigan::training {

struct TrainConfig {
  double lambda_gp = 10.0;
  double lambda_info = 1.0;
  std::size_t batch = 64;
  std::size_t d_updates_per_cycle = 5;
  double lr = 1e-4;
  std::uint64_t total_steps = 0;
  std::uint64_t seed = 0;
  models::Preset preset = models::Preset::desk;
  models::LatentConfig arch = models::LatentConfig::with_total(models::Arch::fiw, 3, 32);
  int shuffle_radius = 2;

  void validate() const;

  /// Canonical `key=value` lines in fixed key order; doubles use round-trip
  /// precision, so from_blob(to_blob()) is exact.
  std::string to_blob() const;
  static TrainConfig from_blob(const std::string& blob);

  bool operator==(const TrainConfig&) const = default;
};

struct LossReport {
  double v_wgan = 0.0;
  double gp_term = 0.0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double info_loss = 0.0;
  std::uint64_t step = 0;
};

/// CSV header and row for the loss log.
std::string loss_csv_header();
std::string loss_csv_row(const LossReport& r);

/// Everything a checkpoint restores.
struct TrainState {
  TrainConfig config;
  models::NetworkParams<float> generator;
  models::NetworkParams<float> discriminator;
  models::NetworkParams<float> qnet;
  ad::OptimizerState<float> opt_generator;
  ad::OptimizerState<float> opt_discriminator;
  ad::OptimizerState<float> opt_qnet;
  Rng rng;
  std::uint64_t step = 0;
  // Position in the current epoch's shuffled order of real clips.
  std::vector<std::uint32_t> order;
  std::uint64_t cursor = 0;

  /// Fresh networks and optimizers seeded from config.seed.
  static TrainState initialize(const TrainConfig& config);

  models::NetworkSpec spec(models::NetKind kind) const;
};

/// Runs the schedule: per cycle, d_updates_per_cycle critic updates (Adam),
/// one adversarial generator update (Adam), then one joint info update that
/// steps the generator (Adam) and the Q-network (RMSProp) from a single
/// backward pass.
class Trainer {
 public:
  Trainer(TrainState state, const corpus::Dataset& data);

  LossReport train_cycle();

  const TrainState& state() const noexcept { return state_; }
  TrainState& state() noexcept { return state_; }

  /// Generator gradient produced by the most recent info update, before the
  /// Adam step; exposed for the lambda_info scaling contract.
  const std::vector<std::vector<float>>& last_info_generator_grads() const noexcept { return info_grads_; }

 private:
  ad::Tensor<float> next_real_batch();

  TrainState state_;
  const corpus::Dataset& data_;
  std::vector<std::vector<float>> info_grads_;
};

}  // namespace lexigan::training
