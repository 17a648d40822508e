#include "lexigan/cli/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

#include "lexigan/autodiff/gradcheck.hpp"
#include "lexigan/autodiff/ops.hpp"
#include "lexigan/corpus/audio.hpp"
#include "lexigan/models/networks.hpp"
#include "lexigan/training/checkpoint.hpp"
#include "lexigan/training/losses.hpp"

namespace lexigan::cli {

namespace {

using T64 = ad::Tensor<double>;

constexpr double kGradTolerance = 1e-4;

T64 random_tensor(ad::Shape shape, Rng& rng, bool grad = true, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(ad::numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return T64(std::move(shape), std::move(v), grad);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

CheckResult grad_check(const std::string& op, std::vector<T64> params, const std::function<T64()>& loss,
                       std::size_t per_tensor = 0, bool pin = false) {
  ad::GradCheckOptions opts;
  opts.max_entries_per_tensor = per_tensor;
  opts.pin_activations = pin;
  const auto r = ad::check_gradients(loss, params, {}, opts);
  return {"autodiff", op, r.max_rel_error <= kGradTolerance,
          "max rel err " + fmt("%.3g", r.max_rel_error) + " over " + std::to_string(r.entries_checked) + " entries" +
              (r.max_rel_error > kGradTolerance ? " (" + r.worst + ")" : "")};
}

void op_checks(std::vector<CheckResult>& out) {
  Rng rng(11);
  {
    auto x = random_tensor({3, 5}, rng), w = random_tensor({5, 4}, rng), b = random_tensor({4}, rng);
    Rng pr(1);
    auto proj = random_tensor({3, 4}, pr, false);
    out.push_back(grad_check("dense", {x, w, b}, [=] { return ad::sum(ad::mul(ad::dense(x, w, std::optional<T64>(b)), proj)); }));
  }
  {
    auto x = random_tensor({2, 3, 11}, rng), k = random_tensor({4, 3, 5}, rng), b = random_tensor({4}, rng);
    const auto geo = ad::same_geometry(11, 5, 2);
    Rng pr(2);
    auto proj = random_tensor({2, 4, ad::conv1d_output_length(11, 5, geo)}, pr, false);
    out.push_back(grad_check("conv1d", {x, k, b}, [=] { return ad::sum(ad::mul(ad::conv1d(x, k, geo, std::optional<T64>(b)), proj)); }));
  }
  {
    auto x = random_tensor({2, 3, 6}, rng), k = random_tensor({3, 2, 5}, rng), b = random_tensor({2}, rng);
    const auto geo = ad::same_geometry(12, 5, 2);
    Rng pr(3);
    auto proj = random_tensor({2, 2, ad::conv1d_transpose_output_length(6, 5, geo)}, pr, false);
    out.push_back(grad_check("conv1d_transpose", {x, k, b},
                             [=] { return ad::sum(ad::mul(ad::conv1d_transpose(x, k, geo, std::optional<T64>(b)), proj)); }));
  }
  const std::pair<const char*, ad::ActivationKind> acts[] = {{"relu", ad::ActivationKind::relu},
                                                             {"leaky_relu", ad::ActivationKind::leaky_relu},
                                                             {"tanh", ad::ActivationKind::tanh},
                                                             {"sigmoid", ad::ActivationKind::sigmoid}};
  for (const auto& [name, kind] : acts) {
    auto x = random_tensor({4, 6}, rng, true, -2.0, 2.0);
    Rng pr(4);
    auto proj = random_tensor({4, 6}, pr, false);
    const ad::Activation act{kind, 0.2};
    out.push_back(grad_check(name, {x}, [=] { return ad::sum(ad::mul(ad::activation(x, act), proj)); }));
  }
  {
    auto x = random_tensor({2, 2, 7}, rng);
    const std::vector<int> shifts = {2, -1, 0, -2};
    Rng pr(5);
    auto proj = random_tensor({2, 2, 7}, pr, false);
    out.push_back(grad_check("phase_shuffle", {x}, [=] { return ad::sum(ad::mul(ad::phase_shuffle(x, shifts), proj)); }));
  }
  {
    auto x = random_tensor({4, 3}, rng, true, -3.0, 3.0);
    const std::vector<int> targets = {0, 2, 1, 2};
    out.push_back(grad_check("softmax_cross_entropy", {x}, [=] { return ad::softmax_cross_entropy(x, targets); }));
  }
  {
    auto x = random_tensor({4, 3}, rng, true, -3.0, 3.0);
    T64 t({4, 3}, {1, 0, 1, 0, 0, 1, 1, 1, 0, 0, 1, 0});
    out.push_back(grad_check("sigmoid_cross_entropy", {x}, [=] { return ad::sigmoid_cross_entropy(x, t); }));
  }
  {
    auto a = random_tensor({3, 4}, rng), b = random_tensor({3, 4}, rng);
    out.push_back(grad_check("elementwise", {a, b}, [=] {
      return ad::mean(ad::square(ad::sub(ad::mul(a, b), ad::scale(ad::add(a, b), 0.5))));
    }));
  }
}

void composition_checks(std::vector<CheckResult>& out) {
  const auto latent = models::LatentConfig::with_total(models::Arch::fiw, 2, 32);
  Rng rng(21);
  const models::NetworkSpec gs{models::NetKind::generator, models::Preset::desk, latent, 2};
  const models::NetworkSpec ds{models::NetKind::discriminator, models::Preset::desk, latent, 2};
  const models::NetworkSpec qs{models::NetKind::qnet, models::Preset::desk, latent, 2};
  const auto g = models::NetworkParams<double>::create(gs, rng);
  const auto d = models::NetworkParams<double>::create(ds, rng);
  const auto q = models::NetworkParams<double>::create(qs, rng);
  const auto z = models::sample_latent(latent, rng, 2);
  const auto shifts = models::sample_shifts(ds, 2, rng);

  std::vector<T64> params = g.parameters();
  for (const auto& p : d.parameters()) params.push_back(p);
  out.push_back(grad_check(
      "D(G(z))", params, [&] { return ad::sum(models::critic_forward(d, models::generate(g, z), &shifts)); }, 12, true));

  params = g.parameters();
  for (const auto& p : q.parameters()) params.push_back(p);
  out.push_back(grad_check(
      "Q(G(z))", params,
      [&] { return training::code_cross_entropy(latent, models::q_estimate(q, models::generate(g, z)), z); }, 12, true));
}

// Direct loops, no im2col.
std::vector<double> naive_conv(const T64& x, const T64& k, const ad::Conv1dGeometry& geo, std::size_t lout) {
  const auto B = x.shape()[0], C = x.shape()[1], L = x.shape()[2], F = k.shape()[0], K = k.shape()[2];
  std::vector<double> y(B * F * lout, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t o = 0; o < lout; ++o)
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t j = 0; j < K; ++j) {
            const long i = static_cast<long>(o * geo.stride + j) - static_cast<long>(geo.pad_left);
            if (i >= 0 && i < static_cast<long>(L))
              y[(b * F + f) * lout + o] += x.data()[(b * C + c) * L + i] * k.data()[(f * C + c) * K + j];
          }
  return y;
}

void conv_oracle_checks(std::vector<CheckResult>& out) {
  Rng rng(31);
  double worst = 0.0, worst_adj = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t B = rng.between(1, 2), C = rng.between(1, 3), F = rng.between(1, 3);
    const std::size_t K = rng.between(1, 6), L = rng.between(K, 14);
    const std::size_t s = rng.between(1, std::min<std::int64_t>(4, K));  // K >= s keeps the padding non-negative
    const auto geo = ad::same_geometry(L, K, s);
    const auto x = random_tensor({B, C, L}, rng, false);
    const auto k = random_tensor({F, C, K}, rng, false);
    const auto lout = ad::conv1d_output_length(L, K, geo);
    const auto y = ad::conv1d(x, k, geo);
    const auto ref = naive_conv(x, k, geo, lout);
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(ref[i] - y.data()[i]));
    // <conv(x), u> == <x, conv_t(u)>
    const auto u = random_tensor({B, F, lout}, rng, false);
    const auto xt = ad::conv1d_transpose(u, k, geo);
    if (xt.shape() != x.shape()) {
      worst_adj = INFINITY;
      continue;
    }
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) lhs += y.data()[i] * u.data()[i];
    for (std::size_t i = 0; i < x.data().size(); ++i) rhs += x.data()[i] * xt.data()[i];
    worst_adj = std::max(worst_adj, std::abs(lhs - rhs));
  }
  out.push_back({"autodiff", "conv1d oracle", worst <= 1e-12, "max abs diff " + fmt("%.3g", worst)});
  out.push_back({"autodiff", "conv1d_transpose adjoint", worst_adj <= 1e-10, "max abs diff " + fmt("%.3g", worst_adj)});
}

// D(x) = 2 * sum(x): gradient norm 2 for length-1 audio.
class LinearCritic final : public training::Critic<double> {
 public:
  T64 score(const T64& audio, const models::CriticShifts*) const override {
    return ad::scale(ad::row_sum(audio), 2.0);
  }
  models::TangentOutput<double> score_tangent(const T64& audio, const T64& direction,
                                              const models::CriticShifts*) const override {
    return {score(audio, nullptr), ad::scale(ad::row_sum(direction), 2.0)};
  }
  models::CriticShifts sample_shifts(std::size_t, Rng&) const override { return {}; }
};

void penalty_checks(std::vector<CheckResult>& out) {
  Rng rng(41);
  const LinearCritic critic;
  const T64 real({4, 1}, {0.1, -0.3, 0.5, 0.2}), fake({4, 1}, {-0.4, 0.2, 0.0, 0.9});
  const auto gp = training::gradient_penalty(critic, real, fake, rng);
  out.push_back({"training", "gradient_penalty", std::abs(gp.value - 1.0) <= 1e-10,
                 "linear critic penalty " + fmt("%.12g", gp.value) + " (expected 1)"});
}

void io_checks(std::vector<CheckResult>& out) {
  Rng rng(51);
  std::vector<double> samples(777);
  for (auto& s : samples) s = rng.uniform(-1.0, 1.0);
  const auto bytes = corpus::encode_wav(samples);
  const auto again = corpus::encode_wav(corpus::decode_wav(bytes).samples);
  out.push_back({"corpus", "wav round trip", bytes == again, bytes == again ? "byte identical" : "bytes differ"});

  training::TrainConfig cfg;
  cfg.arch = models::LatentConfig::with_total(models::Arch::fiw, 2, 32);
  cfg.seed = 3;
  const auto state = training::TrainState::initialize(cfg);
  const auto enc = training::encode_checkpoint(state);
  const auto back = training::decode_checkpoint(enc);
  Rng zr(5);
  const auto z = models::sample_latent(cfg.arch, zr, 2);
  ad::NoGradGuard ng;
  const auto a = models::generate(state.generator, z);
  const auto b = models::generate(back.generator, z);
  const bool same = training::encode_checkpoint(back) == enc &&
                    std::equal(a.data().begin(), a.data().end(), b.data().begin(), b.data().end());
  out.push_back({"training", "checkpoint round trip", same, same ? "bit identical" : "state or generation differs"});
}

}  // namespace

std::vector<CheckResult> run_selftest(bool inject_fault) {
  struct FaultScope {
    explicit FaultScope(bool on) { ad::testing::set_backward_fault(on); }
    ~FaultScope() { ad::testing::set_backward_fault(false); }
  } scope(inject_fault);

  std::vector<CheckResult> out;
  op_checks(out);
  composition_checks(out);
  conv_oracle_checks(out);
  penalty_checks(out);
  io_checks(out);
  return out;
}

}  // namespace lexigan::cli
