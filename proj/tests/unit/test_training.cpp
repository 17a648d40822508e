#include <gtest/gtest.h>

#include <cmath>

#include "lexigan/corpus/lexicon.hpp"
#include "lexigan/errors.hpp"
#include "lexigan/training/checkpoint.hpp"
#include "lexigan/training/losses.hpp"
#include "lexigan/training/trainer.hpp"
#include "oracles.hpp"

namespace ad = lexigan::ad;
namespace m = lexigan::models;
namespace tr = lexigan::training;
namespace oracle = lexigan::oracle;
using lexigan::Rng;
using oracle::T64;

namespace {

// Score = row sum, so D of a length-1 batch is the batch itself.
class SumCritic final : public tr::Critic<double> {
 public:
  T64 score(const T64& audio, const m::CriticShifts*) const override { return ad::row_sum(audio); }
  m::TangentOutput<double> score_tangent(const T64& audio, const T64& direction,
                                         const m::CriticShifts*) const override {
    return {score(audio, nullptr), ad::row_sum(direction)};
  }
  m::CriticShifts sample_shifts(std::size_t, Rng&) const override { return {}; }
};

const lexigan::corpus::Dataset& small_corpus() {
  static const auto data = lexigan::corpus::synth_lexicon(lexigan::corpus::desk_lexicon(4), 1024, 1);
  return data;
}

tr::TrainConfig small_config(std::uint64_t seed = 0) {
  tr::TrainConfig cfg;
  cfg.arch = m::LatentConfig::with_total(m::Arch::fiw, 2, 32);
  cfg.batch = 4;
  cfg.seed = seed;
  return cfg;
}

bool same_values(const ad::Tensor<float>& a, const ad::Tensor<float>& b) {
  return std::equal(a.data().begin(), a.data().end(), b.data().begin(), b.data().end());
}

}  // namespace

TEST(WganLoss, Arithmetic) {
  const SumCritic critic;
  Rng rng(1);
  const T64 real({2, 1}, {1, 2}), fake({2, 1}, {0, 1});
  const auto l0 = tr::wgan_d_loss(critic, real, fake, 0.0, rng);
  EXPECT_DOUBLE_EQ(l0.v_wgan, 1.0);
  EXPECT_EQ(l0.d_loss, -l0.v_wgan);
  const auto same = tr::wgan_d_loss(critic, real, real, 0.0, rng);
  EXPECT_EQ(same.v_wgan, 0.0);
}

TEST(GradientPenalty, LinearCritic) {
  const oracle::LinearCritic critic;
  Rng rng(2);
  const T64 real({3, 1}, {0.5, -0.2, 0.1}), fake({3, 1}, {0.0, 0.7, -0.4});
  const auto gp = tr::gradient_penalty(critic, real, fake, rng);
  EXPECT_NEAR(gp.value, 1.0, 1e-12);
  for (double n : gp.grad_norms) EXPECT_NEAR(n, 2.0, 1e-12);
  const auto loss = tr::wgan_d_loss(critic, real, fake, 10.0, rng);
  EXPECT_NEAR(loss.d_loss + loss.v_wgan, 10.0, 1e-12);
}

TEST(GradientPenalty, ConstantCritic) {
  const oracle::ConstantCritic critic(T64({1, 1}, {0.3}));
  Rng rng(3);
  const T64 real({2, 4}, {1, 2, 3, 4, 5, 6, 7, 8}), fake({2, 4}, {0, 0, 0, 0, 1, 1, 1, 1});
  EXPECT_NEAR(tr::gradient_penalty(critic, real, fake, rng).value, 1.0, 1e-15);
}

TEST(GradientPenalty, TinyCriticMatchesFiniteDifferences) {
  Rng rng(4);
  const oracle::TinyCritic critic(12, 8, rng);
  const auto real = oracle::random_tensor({5, 12}, rng), fake = oracle::random_tensor({5, 12}, rng);
  Rng gr(9);
  const auto gp = tr::gradient_penalty(critic, real, fake, gr);
  std::vector<double> mixed(real.size());
  for (std::size_t b = 0; b < 5; ++b)
    for (std::size_t i = 0; i < 12; ++i)
      mixed[b * 12 + i] = gp.mix[b] * real[b * 12 + i] + (1 - gp.mix[b]) * fake[b * 12 + i];
  const auto fd = oracle::fd_grad_norms(critic, T64({5, 12}, mixed));
  double expected = 0.0;
  for (std::size_t b = 0; b < 5; ++b) {
    EXPECT_NEAR(gp.grad_norms[b], fd[b], 1e-3 * fd[b]);
    expected += (fd[b] - 1) * (fd[b] - 1) / 5;
  }
  EXPECT_NEAR(gp.value, expected, 1e-3 * expected);
}

TEST(GradientPenalty, SurrogateGivesPenaltyParameterGradient) {
  Rng rng(5);
  const oracle::TinyCritic critic(6, 4, rng);
  const auto real = oracle::random_tensor({3, 6}, rng), fake = oracle::random_tensor({3, 6}, rng);
  auto params = critic.parameters();
  const auto penalty = [&] {
    Rng r(17);
    return tr::gradient_penalty(critic, real, fake, r);
  };
  const auto gp = penalty();
  const auto analytic = ad::gradient(gp.surrogate, std::span<const T64>(params));
  const double eps = 1e-6;
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      auto d = params[p].mutable_data();
      const double keep = d[i];
      d[i] = keep + eps;
      const double up = penalty().value;
      d[i] = keep - eps;
      const double down = penalty().value;
      d[i] = keep;
      const double numeric = (up - down) / (2 * eps);
      worst = std::max(worst, std::abs(numeric - analytic[p][i]) / std::max({std::abs(numeric), 1e-3}));
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(InfoLoss, UniformAndSaturatedLogits) {
  const auto ciw = m::LatentConfig::with_total(m::Arch::ciw, 5, 32);
  const auto fiw = m::LatentConfig::with_total(m::Arch::fiw, 3, 32);
  Rng rng(6);
  const auto zc = m::sample_latent(ciw, rng, 7);
  const auto zf = m::sample_latent(fiw, rng, 7);
  EXPECT_NEAR(tr::code_cross_entropy(ciw, T64::zeros({7, 5}), zc).item(), std::log(5.0), 1e-12);
  EXPECT_NEAR(tr::code_cross_entropy(fiw, T64::zeros({7, 3}), zf).item(), std::log(2.0), 1e-12);
  std::vector<double> sat;
  for (const auto& z : zf)
    for (double c : z.code) sat.push_back(c > 0.5 ? 50.0 : -50.0);
  EXPECT_LT(tr::code_cross_entropy(fiw, T64({7, 3}, sat), zf).item(), 1e-12);
}

TEST(TrainConfig, BlobRoundTrip) {
  auto cfg = small_config(42);
  cfg.lambda_info = 0.1 + 0.2;
  cfg.lr = 3e-5;
  EXPECT_EQ(tr::TrainConfig::from_blob(cfg.to_blob()), cfg);
}

TEST(TrainConfig, Validation) {
  auto cfg = small_config();
  cfg.batch = 1;
  EXPECT_THROW(cfg.validate(), lexigan::ValidationError);
  cfg = small_config();
  cfg.arch = m::LatentConfig::with_total(m::Arch::fiw, 2, 100);
  EXPECT_THROW(cfg.validate(), lexigan::ValidationError);
}

TEST(Trainer, CountersAfterOneCycle) {
  tr::Trainer t(tr::TrainState::initialize(small_config()), small_corpus());
  const auto r = t.train_cycle();
  EXPECT_EQ(t.state().opt_discriminator.step, 5u);
  EXPECT_EQ(t.state().opt_generator.step, 2u);
  EXPECT_EQ(t.state().opt_qnet.step, 1u);
  EXPECT_EQ(t.state().step, 1u);
  EXPECT_EQ(r.d_loss, -r.v_wgan + 10.0 * r.gp_term);
}

TEST(Trainer, ZeroInfoWeight) {
  auto cfg = small_config(1);
  cfg.lambda_info = 0.0;
  tr::Trainer t(tr::TrainState::initialize(cfg), small_corpus());
  const auto q_before = t.state().qnet.cast<float>();
  t.train_cycle();
  for (const auto& g : t.last_info_generator_grads())
    for (float v : g) EXPECT_EQ(v, 0.0f);
  bool changed = false;
  for (std::size_t i = 0; i < q_before.named().size(); ++i)
    changed |= !same_values(q_before.named()[i].value, t.state().qnet.named()[i].value);
  EXPECT_TRUE(changed);
}

TEST(Trainer, SameSeedSameLosses) {
  tr::Trainer a(tr::TrainState::initialize(small_config(3)), small_corpus());
  tr::Trainer b(tr::TrainState::initialize(small_config(3)), small_corpus());
  for (int i = 0; i < 3; ++i) EXPECT_EQ(tr::loss_csv_row(a.train_cycle()), tr::loss_csv_row(b.train_cycle()));
}

TEST(Checkpoint, RoundTripPreservesGenerationAndTraining) {
  tr::Trainer t(tr::TrainState::initialize(small_config(4)), small_corpus());
  t.train_cycle();
  const auto bytes = tr::encode_checkpoint(t.state());
  auto restored = tr::decode_checkpoint(bytes);
  EXPECT_EQ(tr::encode_checkpoint(restored), bytes);

  Rng zr(8);
  const auto z = m::sample_latent(restored.config.arch, zr, 3);
  {
    ad::NoGradGuard ng;
    EXPECT_TRUE(same_values(m::generate(t.state().generator, z), m::generate(restored.generator, z)));
  }
  tr::Trainer resumed(std::move(restored), small_corpus());
  EXPECT_EQ(tr::loss_csv_row(t.train_cycle()), tr::loss_csv_row(resumed.train_cycle()));
}

TEST(Checkpoint, Errors) {
  const auto bytes = tr::encode_checkpoint(tr::TrainState::initialize(small_config()));
  const auto message = [](std::vector<unsigned char> b) {
    try {
      tr::decode_checkpoint(b);
    } catch (const lexigan::CheckpointError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_NE(message(bad).find("bad magic"), std::string::npos);
  bad = bytes;
  bad[4] = static_cast<unsigned char>(tr::kCheckpointVersion + 1);
  EXPECT_NE(message(bad).find("unsupported version"), std::string::npos);
  bad.assign(bytes.begin(), bytes.begin() + bytes.size() / 2);
  EXPECT_NE(message(bad).find("truncated"), std::string::npos);
  bad = bytes;
  bad.push_back(0);
  EXPECT_NE(message(bad), "no error");
}

TEST(Checkpoint, MissingFile) {
  EXPECT_ANY_THROW(tr::load_checkpoint("/nonexistent/dir/ckpt.fwgn"));
}
