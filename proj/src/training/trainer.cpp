#include "lexigan/training/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "lexigan/autodiff/ops.hpp"
#include "lexigan/autodiff/tape.hpp"
#include "lexigan/errors.hpp"
#include "lexigan/training/losses.hpp"

namespace lexigan::training {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ValidationError("config key '" + key + "': '" + v + "' is not a number");
  }
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ValidationError("config key '" + key + "': '" + v + "' is not an unsigned integer");
  }
  return out;
}

bool all_finite(const ad::Tensor<float>& t) {
  return std::all_of(t.data().begin(), t.data().end(), [](float v) { return std::isfinite(v); });
}

void check_finite(std::uint64_t step, const char* what, double v) {
  if (!std::isfinite(v)) throw TrainingFault(step, std::string(what) + " is not finite");
}

void check_params(std::uint64_t step, const models::NetworkParams<float>& p) {
  for (const auto& nt : p.named()) {
    if (!all_finite(nt.value)) {
      throw TrainingFault(step, models::to_string(p.spec().kind) + " parameter " + nt.name + " is not finite");
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lambda_gp >= 0.0)) throw ValidationError("lambda_gp must be >= 0");
  if (!std::isfinite(lambda_info)) throw ValidationError("lambda_info must be finite");
  if (batch < 2) throw ValidationError("batch must be >= 2");
  if (d_updates_per_cycle < 1) throw ValidationError("d_updates_per_cycle must be >= 1");
  if (!(lr > 0.0)) throw ValidationError("learning rate must be > 0");
  if (shuffle_radius < 0) throw ValidationError("shuffle radius must be >= 0");
  arch.validate();
  const auto table = models::LayerTable::for_preset(preset);
  if (arch.total() != table.latent_dim) {
    throw ValidationError("latent size " + std::to_string(arch.total()) + " does not match the " +
                          models::to_string(preset) + " preset (" + std::to_string(table.latent_dim) + ")");
  }
}

std::string TrainConfig::to_blob() const {
  std::ostringstream os;
  os << "arch=" << models::to_string(arch.arch) << '\n'
     << "batch=" << batch << '\n'
     << "d_updates_per_cycle=" << d_updates_per_cycle << '\n'
     << "lambda_gp=" << fmt_double(lambda_gp) << '\n'
     << "lambda_info=" << fmt_double(lambda_info) << '\n'
     << "lr=" << fmt_double(lr) << '\n'
     << "num_code=" << arch.num_code << '\n'
     << "num_noise=" << arch.num_noise << '\n'
     << "preset=" << models::to_string(preset) << '\n'
     << "seed=" << seed << '\n'
     << "shuffle_radius=" << shuffle_radius << '\n'
     << "total_steps=" << total_steps << '\n';
  return os.str();
}

TrainConfig TrainConfig::from_blob(const std::string& blob) {
  std::map<std::string, std::string> kv;
  std::istringstream in(blob);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("config line without '=': " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ValidationError(std::string("config is missing key '") + key + "'");
    return it->second;
  };
  TrainConfig c;
  c.arch.arch = models::parse_arch(get("arch"));
  c.batch = parse_u64("batch", get("batch"));
  c.d_updates_per_cycle = parse_u64("d_updates_per_cycle", get("d_updates_per_cycle"));
  c.lambda_gp = parse_double("lambda_gp", get("lambda_gp"));
  c.lambda_info = parse_double("lambda_info", get("lambda_info"));
  c.lr = parse_double("lr", get("lr"));
  c.arch.num_code = parse_u64("num_code", get("num_code"));
  c.arch.num_noise = parse_u64("num_noise", get("num_noise"));
  c.preset = models::parse_preset(get("preset"));
  c.seed = parse_u64("seed", get("seed"));
  const auto& radius = get("shuffle_radius");
  int r = 0;
  auto res = std::from_chars(radius.data(), radius.data() + radius.size(), r);
  if (res.ec != std::errc() || res.ptr != radius.data() + radius.size()) {
    throw ValidationError("config key 'shuffle_radius': '" + radius + "' is not an integer");
  }
  c.shuffle_radius = r;
  c.total_steps = parse_u64("total_steps", get("total_steps"));
  return c;
}

std::string loss_csv_header() { return "step,v_wgan,gp,d_loss,g_loss,info_loss"; }

std::string loss_csv_row(const LossReport& r) {
  return std::to_string(r.step) + ',' + fmt_double(r.v_wgan) + ',' + fmt_double(r.gp_term) + ',' +
         fmt_double(r.d_loss) + ',' + fmt_double(r.g_loss) + ',' + fmt_double(r.info_loss);
}

models::NetworkSpec TrainState::spec(models::NetKind kind) const {
  return {kind, config.preset, config.arch, config.shuffle_radius};
}

TrainState TrainState::initialize(const TrainConfig& config) {
  config.validate();
  TrainState s;
  s.config = config;
  s.rng = Rng(config.seed);
  s.generator = models::NetworkParams<float>::create(s.spec(models::NetKind::generator), s.rng);
  s.discriminator = models::NetworkParams<float>::create(s.spec(models::NetKind::discriminator), s.rng);
  s.qnet = models::NetworkParams<float>::create(s.spec(models::NetKind::qnet), s.rng);
  const auto adam = ad::OptimizerHyper::adam(config.lr);
  const auto rms = ad::OptimizerHyper::rmsprop(config.lr);
  auto gp = s.generator.parameters();
  auto dp = s.discriminator.parameters();
  auto qp = s.qnet.parameters();
  s.opt_generator = ad::OptimizerState<float>::create(ad::OptimizerKind::adam, gp, adam);
  s.opt_discriminator = ad::OptimizerState<float>::create(ad::OptimizerKind::adam, dp, adam);
  s.opt_qnet = ad::OptimizerState<float>::create(ad::OptimizerKind::rmsprop, qp, rms);
  return s;
}

Trainer::Trainer(TrainState state, const corpus::Dataset& data) : state_(std::move(state)), data_(data) {
  state_.config.validate();
  const auto len = models::LayerTable::for_preset(state_.config.preset).output_length();
  if (data_.clips.empty()) throw ValidationError("training data is empty");
  if (data_.slot_len != len) {
    throw ValidationError("training clips have " + std::to_string(data_.slot_len) + " samples, the " +
                          models::to_string(state_.config.preset) + " generator emits " + std::to_string(len));
  }
  if (!state_.order.empty() && state_.order.size() != data_.clips.size()) {
    throw ValidationError("checkpoint epoch order covers " + std::to_string(state_.order.size()) +
                          " clips but the dataset has " + std::to_string(data_.clips.size()));
  }
}

ad::Tensor<float> Trainer::next_real_batch() {
  const std::size_t B = state_.config.batch;
  const std::size_t L = data_.slot_len;
  std::vector<float> batch(B * L);
  for (std::size_t b = 0; b < B; ++b) {
    if (state_.order.empty() || state_.cursor >= state_.order.size()) {
      // New epoch.
      state_.order.resize(data_.clips.size());
      for (std::size_t i = 0; i < state_.order.size(); ++i) state_.order[i] = static_cast<std::uint32_t>(i);
      for (std::size_t i = state_.order.size(); i > 1; --i) {
        std::swap(state_.order[i - 1], state_.order[state_.rng.below(i)]);
      }
      state_.cursor = 0;
    }
    const auto& clip = data_.clips[state_.order[state_.cursor++]];
    std::transform(clip.samples.begin(), clip.samples.end(), batch.begin() + static_cast<std::ptrdiff_t>(b * L),
                   [](double v) { return static_cast<float>(v); });
  }
  return ad::Tensor<float>(ad::Shape{B, L}, std::move(batch));
}

LossReport Trainer::train_cycle() {
  auto& s = state_;
  const auto& cfg = s.config;
  LossReport report;
  report.step = s.step;

  auto gp = s.generator.parameters();
  auto dp = s.discriminator.parameters();
  auto qp = s.qnet.parameters();

  // Critic updates.
  const NetworkCritic<float> critic(s.discriminator);
  for (std::size_t i = 0; i < cfg.d_updates_per_cycle; ++i) {
    auto real = next_real_batch();
    const auto latents = models::sample_latent(cfg.arch, s.rng, cfg.batch);
    ad::Tensor<float> fake;
    {
      ad::NoGradGuard no_grad;
      fake = models::generate(s.generator, latents);
    }
    s.discriminator.zero_grad();
    auto loss = wgan_d_loss(critic, real, fake, cfg.lambda_gp, s.rng);
    check_finite(s.step, "critic loss", loss.d_loss);
    ad::backward(loss.objective);
    ad::apply_step(s.opt_discriminator, std::span(dp));
    report.v_wgan = loss.v_wgan;
    report.gp_term = loss.gp_term;
    report.d_loss = loss.d_loss;
  }
  s.discriminator.zero_grad();
  check_params(s.step, s.discriminator);

  // Adversarial generator update; the critic is held fixed.
  {
    s.discriminator.set_requires_grad(false);
    s.generator.zero_grad();
    const auto latents = models::sample_latent(cfg.arch, s.rng, cfg.batch);
    auto fake = models::generate(s.generator, latents);
    auto g_loss = ad::scale(ad::mean(models::discriminate(s.discriminator, fake, s.rng)), -1.0f);
    report.g_loss = g_loss.item();
    check_finite(s.step, "generator loss", report.g_loss);
    ad::backward(g_loss);
    ad::apply_step(s.opt_generator, std::span(gp));
    s.discriminator.set_requires_grad(true);
  }

  // Joint generator + Q update from the information loss.
  {
    s.generator.zero_grad();
    s.qnet.zero_grad();
    const auto latents = models::sample_latent(cfg.arch, s.rng, cfg.batch);
    auto fake = models::generate(s.generator, latents);
    auto loss = info_loss(s.qnet, cfg.arch, fake, latents, &s.rng);
    report.info_loss = loss.item();
    check_finite(s.step, "info loss", report.info_loss);
    ad::backward(loss);
    info_grads_.clear();
    const auto scale = static_cast<float>(cfg.lambda_info);
    for (auto& p : gp) {
      std::vector<float> g(p.size(), 0.0f);
      if (p.has_grad())
        for (std::size_t j = 0; j < g.size(); ++j) g[j] = p.grad()[j] * scale;
      info_grads_.push_back(std::move(g));
    }
    ad::adam_step(s.opt_generator, std::span(gp), std::span<const std::vector<float>>(info_grads_));
    ad::apply_step(s.opt_qnet, std::span(qp));
    s.generator.zero_grad();
    s.qnet.zero_grad();
  }
  check_params(s.step, s.generator);
  check_params(s.step, s.qnet);

  ++s.step;
  return report;
}

}  // namespace lexigan::training
