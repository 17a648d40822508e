#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "lexigan/autodiff/tensor.hpp"
#include "lexigan/models/latent.hpp"
#include "lexigan/rng.hpp"

namespace lexigan::models {

enum class NetKind { generator, discriminator, qnet };
enum class Preset { desk, paper };

std::string to_string(NetKind kind);
std::string to_string(Preset preset);
Preset parse_preset(const std::string& text);

/// Layer dimensions shared by all three networks for one preset.
///   desk:  latent 32,  generator channels 64-32-16-1,            output 1024
///   paper: latent 100, generator channels 1024-512-256-128-64-1, output 16384
/// The critic (discriminator and Q-network) mirrors the generator: stride-4
/// convolutions from 1 channel up to the generator's first width.
struct LayerTable {
  std::size_t latent_dim = 32;
  std::size_t base_length = 16;
  std::size_t kernel = 25;
  std::size_t stride = 4;
  std::vector<std::size_t> generator_channels;
  std::vector<std::size_t> critic_channels;

  std::size_t output_length() const;
  static LayerTable for_preset(Preset preset);
};

struct NetworkSpec {
  NetKind kind = NetKind::generator;
  Preset preset = Preset::desk;
  LatentConfig latent;
  int shuffle_radius = 2;

  LayerTable table() const { return LayerTable::for_preset(preset); }
  /// Width of the final dense layer (1 for the discriminator, num_code for Q).
  std::size_t output_width() const;
};

/// Ordered (name, shape) list every parameter set of this spec must match.
std::vector<std::pair<std::string, ad::Shape>> expected_shapes(const NetworkSpec& spec);

template <typename T>
struct NamedTensor {
  std::string name;
  ad::Tensor<T> value;
};

template <typename T>
class NetworkParams {
 public:
  NetworkParams() = default;

  /// Xavier-uniform weights, zero biases.
  static NetworkParams create(const NetworkSpec& spec, Rng& rng);
  /// Validates names and shapes against expected_shapes(spec).
  static NetworkParams from_tensors(const NetworkSpec& spec, std::vector<NamedTensor<T>> tensors);

  const NetworkSpec& spec() const noexcept { return spec_; }
  const std::vector<NamedTensor<T>>& named() const noexcept { return tensors_; }
  std::vector<ad::Tensor<T>> parameters() const;
  const ad::Tensor<T>& at(const std::string& name) const;
  std::size_t parameter_count() const;
  void zero_grad();
  void set_requires_grad(bool on);

  /// Deep copy, optionally converting precision.
  template <typename U>
  NetworkParams<U> cast() const {
    std::vector<NamedTensor<U>> out;
    for (const auto& nt : tensors_) {
      std::vector<U> data(nt.value.data().begin(), nt.value.data().end());
      out.push_back({nt.name, ad::Tensor<U>(nt.value.shape(), std::move(data), nt.value.requires_grad())});
    }
    return NetworkParams<U>::from_tensors(spec_, std::move(out));
  }

 private:
  NetworkSpec spec_;
  std::vector<NamedTensor<T>> tensors_;
};

/// Per shuffle layer, one shift per (batch, channel) row.
using CriticShifts = std::vector<std::vector<int>>;

/// Random shifts in [-radius, radius] for every shuffled layer of a critic.
CriticShifts sample_shifts(const NetworkSpec& spec, std::size_t batch, Rng& rng);

/// Shifts each (B, C) row of x by an independent k ~ U{-radius..radius} with
/// reflection padding.
template <typename T>
ad::Tensor<T> phase_shuffle(const ad::Tensor<T>& x, int radius, Rng& rng);

/// Generator forward: dense -> [B, C0, 16] -> relu -> transposed convs (relu
/// between, tanh last). Returns [B, output_length].
template <typename T>
ad::Tensor<T> generate(const NetworkParams<T>& g, const ad::Tensor<T>& latent);

template <typename T>
ad::Tensor<T> generate(const NetworkParams<T>& g, const std::vector<LatentVector>& latents);

/// Critic trunk plus final dense layer, [B, L] -> [B, output_width]. With
/// `shifts` null no phase shuffle is applied.
template <typename T>
ad::Tensor<T> critic_forward(const NetworkParams<T>& net, const ad::Tensor<T>& audio, const CriticShifts* shifts);

template <typename T>
struct TangentOutput {
  ad::Tensor<T> value;    // critic output, [B, W]
  ad::Tensor<T> tangent;  // d(value)/d(audio) applied to `direction`, [B, W]
};

/// Forward pass carrying a tangent: evaluates the critic at `audio` and its
/// directional derivative along `direction`, both recorded on the tape as
/// functions of the parameters. The critic is piecewise linear in its input,
/// so activation slopes enter the tangent as constants.
template <typename T>
TangentOutput<T> critic_forward_tangent(const NetworkParams<T>& net, const ad::Tensor<T>& audio,
                                        const ad::Tensor<T>& direction, const CriticShifts* shifts);

/// Realness score per item, [B].
template <typename T>
ad::Tensor<T> discriminate(const NetworkParams<T>& d, const ad::Tensor<T>& audio, Rng& rng);

/// Code logits [B, num_code]. Phase shuffle is applied only when `rng` is given
/// (training); without it the estimate is deterministic.
template <typename T>
ad::Tensor<T> q_estimate(const NetworkParams<T>& q, const ad::Tensor<T>& audio, Rng* rng = nullptr);

}  // namespace lexigan::models
