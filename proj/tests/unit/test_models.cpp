#include <gtest/gtest.h>

#include <cmath>

#include "lexigan/autodiff/ops.hpp"
#include "lexigan/errors.hpp"
#include "lexigan/models/latent.hpp"
#include "lexigan/models/networks.hpp"

namespace ad = lexigan::ad;
namespace m = lexigan::models;
using lexigan::Rng;

namespace {

m::NetworkSpec spec(m::NetKind kind, m::LatentConfig latent, m::Preset preset = m::Preset::desk, int radius = 2) {
  return {kind, preset, latent, radius};
}

const m::LatentConfig kFiw2 = m::LatentConfig::with_total(m::Arch::fiw, 2, 32);

}  // namespace

TEST(Latent, PaperPresets) {
  const auto ciw = m::LatentConfig::with_total(m::Arch::ciw, 5, 100);
  EXPECT_EQ(ciw.num_noise, 95u);
  EXPECT_EQ(ciw.num_classes(), 5u);
  const auto fiw = m::LatentConfig::with_total(m::Arch::fiw, 3, 100);
  EXPECT_EQ(fiw.num_noise, 97u);
  EXPECT_EQ(fiw.num_classes(), 8u);
  EXPECT_EQ(m::LatentConfig::with_total(m::Arch::fiw, 13, 100).num_classes(), 8192u);
}

TEST(Latent, InvalidConfigs) {
  EXPECT_THROW((m::LatentConfig{m::Arch::ciw, 0, 10}.validate()), lexigan::ValidationError);
  EXPECT_THROW((m::LatentConfig{m::Arch::fiw, 2, 0}.validate()), lexigan::ValidationError);
}

TEST(Latent, EncodeClass) {
  const m::LatentConfig ciw{m::Arch::ciw, 5, 95};
  const m::LatentConfig fiw{m::Arch::fiw, 3, 97};
  EXPECT_EQ(m::encode_class(ciw, 2, 1.0), (std::vector<double>{0, 0, 1, 0, 0}));
  EXPECT_EQ(m::encode_class(fiw, 5, 1.0), (std::vector<double>{1, 0, 1}));
  EXPECT_EQ(m::encode_class(ciw, 4, 2.0), (std::vector<double>{0, 0, 0, 0, 2}));
  EXPECT_EQ(m::encode_class(fiw, 7, 15.0), (std::vector<double>{15, 15, 15}));
  EXPECT_EQ(m::encode_class(fiw, 6, 0.0), (std::vector<double>{0, 0, 0}));
  EXPECT_THROW(m::encode_class(fiw, 8, 1.0), lexigan::ValidationError);
  EXPECT_EQ(m::decode_class(fiw, {1, 1, 0}), 6u);
  EXPECT_EQ(m::decode_class(ciw, {0, 0, 0, 1, 0}), 3u);
}

TEST(Latent, SampleForcedAndRanges) {
  const m::LatentConfig ciw{m::Arch::ciw, 5, 95};
  Rng rng(1);
  const auto z = m::sample_latent(ciw, rng, 20, 2);
  for (const auto& v : z) {
    EXPECT_EQ(v.code, (std::vector<double>{0, 0, 1, 0, 0}));
    ASSERT_EQ(v.noise.size(), 95u);
    for (double n : v.noise) {
      EXPECT_GE(n, -1.0);
      EXPECT_LT(n, 1.0);
    }
  }
}

TEST(Latent, FiwBitMeans) {
  const m::LatentConfig fiw{m::Arch::fiw, 3, 97};
  Rng rng(2);
  const auto z = m::sample_latent(fiw, rng, 10000);
  for (std::size_t bit = 0; bit < 3; ++bit) {
    double mean = 0.0;
    for (const auto& v : z) {
      EXPECT_TRUE(v.code[bit] == 0.0 || v.code[bit] == 1.0);
      mean += v.code[bit];
    }
    mean /= z.size();
    EXPECT_GE(mean, 0.47);
    EXPECT_LE(mean, 0.53);
  }
}

TEST(Networks, DeskGeneratorShapeAndDeterminism) {
  Rng rng(3);
  const auto g = m::NetworkParams<float>::create(spec(m::NetKind::generator, kFiw2), rng);
  Rng zr(4);
  const auto z = m::sample_latent(kFiw2, zr, 3);
  ad::NoGradGuard ng;
  const auto a = m::generate(g, z);
  const auto b = m::generate(g, z);
  EXPECT_EQ(a.shape(), (ad::Shape{3, 1024}));
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin(), b.data().end()));
  for (float v : a.data()) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Networks, PaperGeneratorShape) {
  const auto ciw = m::LatentConfig::with_total(m::Arch::ciw, 5, 100);
  Rng rng(5);
  const auto g = m::NetworkParams<float>::create(spec(m::NetKind::generator, ciw, m::Preset::paper), rng);
  EXPECT_EQ(g.spec().table().output_length(), 16384u);
  Rng zr(6);
  ad::NoGradGuard ng;
  EXPECT_EQ(m::generate(g, m::sample_latent(ciw, zr, 1)).shape(), (ad::Shape{1, 16384}));
}

TEST(Networks, ExpectedShapesMatchCreate) {
  for (auto kind : {m::NetKind::generator, m::NetKind::discriminator, m::NetKind::qnet}) {
    Rng rng(7);
    const auto s = spec(kind, kFiw2);
    const auto net = m::NetworkParams<double>::create(s, rng);
    const auto expected = m::expected_shapes(s);
    ASSERT_EQ(net.named().size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      EXPECT_EQ(net.named()[i].name, expected[i].first);
      EXPECT_EQ(net.named()[i].value.shape(), expected[i].second);
    }
  }
}

TEST(Networks, FromTensorsRejectsWrongShape) {
  Rng rng(8);
  const auto s = spec(m::NetKind::qnet, kFiw2);
  auto net = m::NetworkParams<float>::create(s, rng);
  auto tensors = net.named();
  tensors.back().value = ad::Tensor<float>::zeros({7});
  EXPECT_ANY_THROW(m::NetworkParams<float>::from_tensors(s, tensors));
}

TEST(Networks, DiscriminatorZeroAudioFinite) {
  Rng rng(9);
  const auto d = m::NetworkParams<float>::create(spec(m::NetKind::discriminator, kFiw2), rng);
  ad::NoGradGuard ng;
  const auto out = m::discriminate(d, ad::Tensor<float>::zeros({4, 1024}), rng);
  EXPECT_EQ(out.shape(), (ad::Shape{4}));
  for (float v : out.data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Networks, RadiusZeroIgnoresRng) {
  Rng rng(10);
  const auto d = m::NetworkParams<float>::create(spec(m::NetKind::discriminator, kFiw2, m::Preset::desk, 0), rng);
  Rng ar(11), r1(1), r2(2);
  std::vector<float> audio(2 * 1024);
  for (auto& a : audio) a = static_cast<float>(ar.uniform(-1, 1));
  const ad::Tensor<float> x({2, 1024}, audio);
  ad::NoGradGuard ng;
  const auto a = m::discriminate(d, x, r1);
  const auto b = m::discriminate(d, x, r2);
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin(), b.data().end()));
}

TEST(Networks, QLogitShapesAndDeterminism) {
  Rng rng(12);
  const auto fiw3 = m::LatentConfig::with_total(m::Arch::fiw, 3, 32);
  const auto ciw10 = m::LatentConfig::with_total(m::Arch::ciw, 10, 32);
  const auto q3 = m::NetworkParams<float>::create(spec(m::NetKind::qnet, fiw3), rng);
  const auto q10 = m::NetworkParams<float>::create(spec(m::NetKind::qnet, ciw10), rng);
  std::vector<float> audio(2 * 1024);
  for (auto& a : audio) a = static_cast<float>(rng.uniform(-1, 1));
  const ad::Tensor<float> x({2, 1024}, audio);
  ad::NoGradGuard ng;
  const auto a = m::q_estimate(q3, x);
  const auto b = m::q_estimate(q3, x);
  EXPECT_EQ(a.shape(), (ad::Shape{2, 3}));
  EXPECT_EQ(m::q_estimate(q10, x).shape(), (ad::Shape{2, 10}));
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin(), b.data().end()));
}

TEST(Networks, PhaseShuffleKeepsLengthAndRadiusZeroIsIdentity) {
  Rng rng(13);
  std::vector<double> v(2 * 3 * 10);
  for (auto& a : v) a = rng.uniform(-1, 1);
  const ad::Tensor<double> x({2, 3, 10}, v);
  EXPECT_EQ(m::phase_shuffle(x, 2, rng).shape(), x.shape());
  const auto same = m::phase_shuffle(x, 0, rng);
  EXPECT_TRUE(std::equal(same.data().begin(), same.data().end(), x.data().begin(), x.data().end()));
}

TEST(Networks, ShiftsWithinRadius) {
  Rng rng(14);
  const auto shifts = m::sample_shifts(spec(m::NetKind::discriminator, kFiw2), 3, rng);
  ASSERT_FALSE(shifts.empty());
  for (const auto& layer : shifts)
    for (int s : layer) {
      EXPECT_GE(s, -2);
      EXPECT_LE(s, 2);
    }
}
