#include "lexigan/training/losses.hpp"

#include <cmath>

#include "lexigan/autodiff/ops.hpp"
#include "lexigan/autodiff/tape.hpp"
#include "lexigan/errors.hpp"

namespace lexigan::training {

template <typename T>
ad::Tensor<T> NetworkCritic<T>::score(const ad::Tensor<T>& audio, const models::CriticShifts* shifts) const {
  auto out = models::critic_forward(params_, audio, shifts);
  return ad::reshape(out, ad::Shape{audio.dim(0)});
}

template <typename T>
models::TangentOutput<T> NetworkCritic<T>::score_tangent(const ad::Tensor<T>& audio, const ad::Tensor<T>& direction,
                                                         const models::CriticShifts* shifts) const {
  auto out = models::critic_forward_tangent(params_, audio, direction, shifts);
  const ad::Shape flat{audio.dim(0)};
  return {ad::reshape(out.value, flat), ad::reshape(out.tangent, flat)};
}

template <typename T>
models::CriticShifts NetworkCritic<T>::sample_shifts(std::size_t batch, Rng& rng) const {
  return models::sample_shifts(params_.spec(), batch, rng);
}

template <typename T>
GradientPenalty<T> gradient_penalty(const Critic<T>& critic, const ad::Tensor<T>& real, const ad::Tensor<T>& fake,
                                    Rng& rng) {
  if (real.shape() != fake.shape() || real.rank() != 2) {
    throw DimensionError("gradient_penalty: real " + ad::shape_string(real.shape()) + " and fake " +
                         ad::shape_string(fake.shape()) + " must be equal [B, L] shapes");
  }
  const std::size_t B = real.dim(0), L = real.dim(1);
  GradientPenalty<T> gp;
  gp.mix.resize(B);
  std::vector<T> mixed(B * L);
  for (std::size_t b = 0; b < B; ++b) {
    gp.mix[b] = rng.uniform();
    const T e = static_cast<T>(gp.mix[b]);
    for (std::size_t i = 0; i < L; ++i) mixed[b * L + i] = e * real[b * L + i] + (T(1) - e) * fake[b * L + i];
  }
  const ad::Tensor<T> x_hat(real.shape(), std::move(mixed), true);
  const auto shifts = critic.sample_shifts(B, rng);

  // Items are independent, so d(sum_b D(x_b))/dx gives every per-item gradient.
  const ad::Tensor<T> wrt[] = {x_hat};
  const auto grads = ad::gradient(ad::sum(critic.score(x_hat, &shifts)), std::span<const ad::Tensor<T>>(wrt));
  const auto& g = grads[0];

  gp.grad_norms.resize(B);
  std::vector<T> direction(B * L);
  double total = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    double sq = 0.0;
    for (std::size_t i = 0; i < L; ++i) sq += static_cast<double>(g[b * L + i]) * static_cast<double>(g[b * L + i]);
    const double norm = std::sqrt(sq);
    gp.grad_norms[b] = norm;
    total += (norm - 1.0) * (norm - 1.0);
    const double c = norm > 0.0 ? 2.0 * (norm - 1.0) / (static_cast<double>(B) * norm) : 0.0;
    for (std::size_t i = 0; i < L; ++i) direction[b * L + i] = static_cast<T>(c * static_cast<double>(g[b * L + i]));
  }
  gp.value = total / static_cast<double>(B);

  const ad::Tensor<T> x_const = x_hat.detach();
  const ad::Tensor<T> dir(real.shape(), std::move(direction), false);
  gp.surrogate = ad::sum(critic.score_tangent(x_const, dir, &shifts).tangent);
  return gp;
}

template <typename T>
CriticLoss<T> wgan_d_loss(const Critic<T>& critic, const ad::Tensor<T>& real, const ad::Tensor<T>& fake,
                          double lambda_gp, Rng& rng) {
  if (real.shape() != fake.shape()) {
    throw DimensionError("wgan_d_loss: real " + ad::shape_string(real.shape()) + " vs fake " +
                         ad::shape_string(fake.shape()));
  }
  const std::size_t B = real.dim(0);
  const auto real_shifts = critic.sample_shifts(B, rng);
  const auto fake_shifts = critic.sample_shifts(B, rng);
  auto d_real = ad::mean(critic.score(real, &real_shifts));
  auto d_fake = ad::mean(critic.score(fake, &fake_shifts));
  CriticLoss<T> out;
  out.v_wgan = static_cast<double>(d_real.item()) - static_cast<double>(d_fake.item());
  auto objective = ad::sub(d_fake, d_real);
  if (lambda_gp != 0.0) {
    auto gp = gradient_penalty(critic, real, fake, rng);
    out.gp_term = gp.value;
    objective = ad::add(objective, ad::scale(gp.surrogate, static_cast<T>(lambda_gp)));
  }
  out.d_loss = -out.v_wgan + lambda_gp * out.gp_term;
  out.objective = objective;
  return out;
}

template <typename T>
ad::Tensor<T> code_cross_entropy(const models::LatentConfig& cfg, const ad::Tensor<T>& logits,
                                 const std::vector<models::LatentVector>& true_codes) {
  if (logits.rank() != 2 || logits.dim(1) != cfg.num_code || logits.dim(0) != true_codes.size()) {
    throw ValidationError("info loss: logits " + ad::shape_string(logits.shape()) + " do not match " +
                          std::to_string(true_codes.size()) + " codes of width " + std::to_string(cfg.num_code));
  }
  if (cfg.arch == models::Arch::ciw) {
    std::vector<int> targets;
    targets.reserve(true_codes.size());
    for (const auto& lv : true_codes) targets.push_back(static_cast<int>(models::decode_class(cfg, lv.code)));
    return ad::softmax_cross_entropy(logits, std::span<const int>(targets));
  }
  std::vector<T> bits;
  bits.reserve(logits.size());
  for (const auto& lv : true_codes) {
    if (lv.code.size() != cfg.num_code) throw ValidationError("info loss: code width mismatch");
    for (double v : lv.code) bits.push_back(static_cast<T>(v));
  }
  return ad::sigmoid_cross_entropy(logits, ad::Tensor<T>(logits.shape(), std::move(bits)));
}

template <typename T>
ad::Tensor<T> info_loss(const models::NetworkParams<T>& q, const models::LatentConfig& cfg,
                        const ad::Tensor<T>& fake, const std::vector<models::LatentVector>& true_codes, Rng* rng) {
  if (q.spec().latent.arch != cfg.arch || q.spec().latent.num_code != cfg.num_code) {
    throw ValidationError("info loss: Q-network was built for " + models::to_string(q.spec().latent.arch) + " with " +
                          std::to_string(q.spec().latent.num_code) + " code variables, got " +
                          models::to_string(cfg.arch) + " with " + std::to_string(cfg.num_code));
  }
  return code_cross_entropy(cfg, models::q_estimate(q, fake, rng), true_codes);
}

#define LEXIGAN_INSTANTIATE_LOSSES(T)                                                                         \
  template class NetworkCritic<T>;                                                                            \
  template GradientPenalty<T> gradient_penalty(const Critic<T>&, const ad::Tensor<T>&, const ad::Tensor<T>&,  \
                                               Rng&);                                                         \
  template CriticLoss<T> wgan_d_loss(const Critic<T>&, const ad::Tensor<T>&, const ad::Tensor<T>&, double,    \
                                     Rng&);                                                                   \
  template ad::Tensor<T> code_cross_entropy(const models::LatentConfig&, const ad::Tensor<T>&,                \
                                            const std::vector<models::LatentVector>&);                        \
  template ad::Tensor<T> info_loss(const models::NetworkParams<T>&, const models::LatentConfig&,              \
                                   const ad::Tensor<T>&, const std::vector<models::LatentVector>&, Rng*);

LEXIGAN_INSTANTIATE_LOSSES(float)
LEXIGAN_INSTANTIATE_LOSSES(double)

#undef LEXIGAN_INSTANTIATE_LOSSES

}  // namespace lexigan::training
