#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lexigan/autodiff/tensor.hpp"
#include "lexigan/rng.hpp"

namespace lexigan::models {

enum class Arch { ciw, fiw };

std::string to_string(Arch arch);
Arch parse_arch(const std::string& text);

/// Generator input layout: `num_code` code variables followed by `num_noise`
/// uniform noise variables. For ciw the code is a one-hot over num_code
/// classes; for fiw it is num_code binary features covering 2^num_code classes.
struct LatentConfig {
  Arch arch = Arch::fiw;
  std::size_t num_code = 3;
  std::size_t num_noise = 97;

  std::size_t total() const noexcept { return num_code + num_noise; }
  std::size_t num_classes() const;
  void validate() const;

  /// Code plus noise filling a fixed latent width (32 desk, 100 paper).
  static LatentConfig with_total(Arch arch, std::size_t num_code, std::size_t total);

  bool operator==(const LatentConfig&) const = default;
};

struct LatentVector {
  std::vector<double> code;
  std::vector<double> noise;
};

/// Code vector for `class_index` with every active position set to `value`.
/// ciw: position class_index. fiw: each 1-bit of class_index, most significant
/// bit first.
std::vector<double> encode_class(const LatentConfig& cfg, std::size_t class_index, double value);

/// Class index recovered from a {0,1} training code (argmax for ciw, MSB-first
/// bits for fiw).
std::size_t decode_class(const LatentConfig& cfg, const std::vector<double>& code);

/// Uniform code class (or `forced_class`) with value 1, noise i.i.d. U(-1, 1).
std::vector<LatentVector> sample_latent(const LatentConfig& cfg, Rng& rng, std::size_t batch,
                                        std::optional<std::size_t> forced_class = std::nullopt);

/// Uniform noise only, for callers that set the code themselves.
std::vector<double> sample_noise(std::size_t count, Rng& rng);

/// Packs latents into a [B, total] generator input.
template <typename T>
ad::Tensor<T> latent_tensor(const LatentConfig& cfg, const std::vector<LatentVector>& batch);

}  // namespace lexigan::models
