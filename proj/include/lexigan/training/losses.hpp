#pragma once

#include <vector>

#include "lexigan/autodiff/tensor.hpp"
#include "lexigan/models/latent.hpp"
#include "lexigan/models/networks.hpp"
#include "lexigan/rng.hpp"

namespace lexigan::training {

/// Anything that scores audio [B, L] -> [B] and can carry a tangent through
/// the same computation. The gradient penalty only needs these two passes.
template <typename T>
class Critic {
 public:
  virtual ~Critic() = default;
  virtual ad::Tensor<T> score(const ad::Tensor<T>& audio, const models::CriticShifts* shifts) const = 0;
  /// value and d(value)/d(audio)·direction, both as [B].
  virtual models::TangentOutput<T> score_tangent(const ad::Tensor<T>& audio, const ad::Tensor<T>& direction,
                                                 const models::CriticShifts* shifts) const = 0;
  virtual models::CriticShifts sample_shifts(std::size_t batch, Rng& rng) const = 0;
};

/// Adapts discriminator parameters to the Critic interface.
template <typename T>
class NetworkCritic final : public Critic<T> {
 public:
  explicit NetworkCritic(const models::NetworkParams<T>& params) : params_(params) {}
  ad::Tensor<T> score(const ad::Tensor<T>& audio, const models::CriticShifts* shifts) const override;
  models::TangentOutput<T> score_tangent(const ad::Tensor<T>& audio, const ad::Tensor<T>& direction,
                                         const models::CriticShifts* shifts) const override;
  models::CriticShifts sample_shifts(std::size_t batch, Rng& rng) const override;

 private:
  const models::NetworkParams<T>& params_;
};

template <typename T>
struct GradientPenalty {
  double value = 0.0;               // mean_b (||grad_x D(x_hat_b)||_2 - 1)^2
  std::vector<double> grad_norms;   // ||grad_x D(x_hat_b)||_2 per item
  std::vector<double> mix;          // interpolation weight per item
  ad::Tensor<T> surrogate;          // scalar whose parameter gradient equals d(value)/d(params)
};

/// WGAN-GP penalty at x_hat = eps*real + (1-eps)*fake, eps ~ U(0,1) per item.
///
/// The input gradient g_b comes from a reverse pass that only flows towards
/// x_hat. The parameter gradient of the penalty, sum_b c_b (dg_b/dθ)^T g_b with
/// c_b = 2(|g_b|-1)/(B|g_b|), is the parameter gradient of a directional
/// derivative: the tangent of a forward pass at x_hat along c_b·g_b. That
/// tangent is recorded on the tape and returned as `surrogate`.
template <typename T>
GradientPenalty<T> gradient_penalty(const Critic<T>& critic, const ad::Tensor<T>& real, const ad::Tensor<T>& fake,
                                    Rng& rng);

template <typename T>
struct CriticLoss {
  double v_wgan = 0.0;   // mean D(real) - mean D(fake)
  double gp_term = 0.0;  // penalty before lambda
  double d_loss = 0.0;   // -v_wgan + lambda * gp_term
  ad::Tensor<T> objective;  // backward() this to get critic parameter gradients
};

template <typename T>
CriticLoss<T> wgan_d_loss(const Critic<T>& critic, const ad::Tensor<T>& real, const ad::Tensor<T>& fake,
                          double lambda_gp, Rng& rng);

/// Cross-entropy between Q's logits and the codes used to generate `fake`:
/// softmax over one-hot classes (ciw) or per-feature sigmoid (fiw).
template <typename T>
ad::Tensor<T> info_loss(const models::NetworkParams<T>& q, const models::LatentConfig& cfg,
                        const ad::Tensor<T>& fake, const std::vector<models::LatentVector>& true_codes,
                        Rng* rng = nullptr);

/// Loss from logits directly; shared by info_loss and tests.
template <typename T>
ad::Tensor<T> code_cross_entropy(const models::LatentConfig& cfg, const ad::Tensor<T>& logits,
                                 const std::vector<models::LatentVector>& true_codes);

}  // namespace lexigan::training
