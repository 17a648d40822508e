#include "lexigan/models/networks.hpp"

#include <cmath>

#include "lexigan/autodiff/ops.hpp"
#include "lexigan/errors.hpp"

namespace lexigan::models {

std::string to_string(NetKind kind) {
  switch (kind) {
    case NetKind::generator: return "generator";
    case NetKind::discriminator: return "discriminator";
    case NetKind::qnet: return "qnet";
  }
  return "?";
}

std::string to_string(Preset preset) { return preset == Preset::desk ? "desk" : "paper"; }

Preset parse_preset(const std::string& text) {
  if (text == "desk") return Preset::desk;
  if (text == "paper") return Preset::paper;
  throw ValidationError("unknown preset '" + text + "' (expected desk or paper)");
}

std::size_t LayerTable::output_length() const {
  std::size_t len = base_length;
  for (std::size_t i = 1; i < generator_channels.size(); ++i) len *= stride;
  return len;
}

LayerTable LayerTable::for_preset(Preset preset) {
  LayerTable t;
  if (preset == Preset::desk) {
    t.latent_dim = 32;
    t.generator_channels = {64, 32, 16, 1};
    t.critic_channels = {1, 16, 32, 64};
  } else {
    t.latent_dim = 100;
    t.generator_channels = {1024, 512, 256, 128, 64, 1};
    t.critic_channels = {1, 64, 128, 256, 512, 1024};
  }
  return t;
}

std::size_t NetworkSpec::output_width() const {
  switch (kind) {
    case NetKind::generator: return table().output_length();
    case NetKind::discriminator: return 1;
    case NetKind::qnet: return latent.num_code;
  }
  return 0;
}

std::vector<std::pair<std::string, ad::Shape>> expected_shapes(const NetworkSpec& spec) {
  const auto t = spec.table();
  std::vector<std::pair<std::string, ad::Shape>> out;
  if (spec.kind == NetKind::generator) {
    if (spec.latent.total() != t.latent_dim) {
      throw ValidationError("latent size " + std::to_string(spec.latent.total()) + " does not match the " +
                            to_string(spec.preset) + " preset (" + std::to_string(t.latent_dim) + ")");
    }
    const auto& ch = t.generator_channels;
    out.emplace_back("dense.w", ad::Shape{t.latent_dim, t.base_length * ch[0]});
    out.emplace_back("dense.b", ad::Shape{t.base_length * ch[0]});
    for (std::size_t i = 0; i + 1 < ch.size(); ++i) {
      out.emplace_back("upconv" + std::to_string(i) + ".w", ad::Shape{ch[i], ch[i + 1], t.kernel});
      out.emplace_back("upconv" + std::to_string(i) + ".b", ad::Shape{ch[i + 1]});
    }
  } else {
    const auto& ch = t.critic_channels;
    for (std::size_t i = 0; i + 1 < ch.size(); ++i) {
      out.emplace_back("conv" + std::to_string(i) + ".w", ad::Shape{ch[i + 1], ch[i], t.kernel});
      out.emplace_back("conv" + std::to_string(i) + ".b", ad::Shape{ch[i + 1]});
    }
    out.emplace_back("out.w", ad::Shape{t.base_length * ch.back(), spec.output_width()});
    out.emplace_back("out.b", ad::Shape{spec.output_width()});
  }
  return out;
}

template <typename T>
NetworkParams<T> NetworkParams<T>::create(const NetworkSpec& spec, Rng& rng) {
  spec.latent.validate();
  std::vector<NamedTensor<T>> tensors;
  for (auto& [name, shape] : expected_shapes(spec)) {
    std::vector<T> data(ad::numel(shape), T(0));
    if (shape.size() > 1) {
      double fan_in = 0, fan_out = 0;
      if (shape.size() == 2) {
        fan_in = static_cast<double>(shape[0]);
        fan_out = static_cast<double>(shape[1]);
      } else {
        // conv [F, C, K] and transposed conv [C, F, K] alike.
        fan_in = static_cast<double>(shape[1] * shape[2]);
        fan_out = static_cast<double>(shape[0] * shape[2]);
      }
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      for (auto& v : data) v = static_cast<T>(rng.uniform(-limit, limit));
    }
    tensors.push_back({name, ad::Tensor<T>(shape, std::move(data), true)});
  }
  return from_tensors(spec, std::move(tensors));
}

template <typename T>
NetworkParams<T> NetworkParams<T>::from_tensors(const NetworkSpec& spec, std::vector<NamedTensor<T>> tensors) {
  const auto expected = expected_shapes(spec);
  if (expected.size() != tensors.size()) {
    throw ValidationError(to_string(spec.kind) + ": expected " + std::to_string(expected.size()) + " tensors, got " +
                          std::to_string(tensors.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (tensors[i].name != expected[i].first || tensors[i].value.shape() != expected[i].second) {
      throw ValidationError(to_string(spec.kind) + ": tensor " + std::to_string(i) + " is " + tensors[i].name + " " +
                            ad::shape_string(tensors[i].value.shape()) + ", expected " + expected[i].first + " " +
                            ad::shape_string(expected[i].second));
    }
  }
  NetworkParams p;
  p.spec_ = spec;
  p.tensors_ = std::move(tensors);
  return p;
}

template <typename T>
std::vector<ad::Tensor<T>> NetworkParams<T>::parameters() const {
  std::vector<ad::Tensor<T>> out;
  out.reserve(tensors_.size());
  for (const auto& nt : tensors_) out.push_back(nt.value);
  return out;
}

template <typename T>
const ad::Tensor<T>& NetworkParams<T>::at(const std::string& name) const {
  for (const auto& nt : tensors_)
    if (nt.name == name) return nt.value;
  throw ValidationError(to_string(spec_.kind) + " has no tensor named '" + name + "'");
}

template <typename T>
std::size_t NetworkParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& nt : tensors_) n += nt.value.size();
  return n;
}

template <typename T>
void NetworkParams<T>::zero_grad() {
  for (auto& nt : tensors_) nt.value.zero_grad();
}

template <typename T>
void NetworkParams<T>::set_requires_grad(bool on) {
  for (auto& nt : tensors_) nt.value.set_requires_grad(on);
}

CriticShifts sample_shifts(const NetworkSpec& spec, std::size_t batch, Rng& rng) {
  const auto t = spec.table();
  const auto& ch = t.critic_channels;
  CriticShifts shifts;
  std::size_t length = t.output_length();
  // Every conv except the last is followed by a shuffle.
  for (std::size_t i = 0; i + 2 < ch.size(); ++i) {
    length /= t.stride;
    if (spec.shuffle_radius < 0 || static_cast<std::size_t>(spec.shuffle_radius) >= length) {
      throw ValidationError("phase shuffle radius " + std::to_string(spec.shuffle_radius) +
                            " must be in [0, length " + std::to_string(length) + ")");
    }
    std::vector<int> layer(batch * ch[i + 1]);
    for (auto& s : layer) {
      s = spec.shuffle_radius == 0 ? 0 : static_cast<int>(rng.between(-spec.shuffle_radius, spec.shuffle_radius));
    }
    shifts.push_back(std::move(layer));
  }
  return shifts;
}

template <typename T>
ad::Tensor<T> phase_shuffle(const ad::Tensor<T>& x, int radius, Rng& rng) {
  if (x.rank() != 3) throw DimensionError("phase_shuffle: input must be [B,C,L], got " + ad::shape_string(x.shape()));
  if (radius < 0 || static_cast<std::size_t>(radius) >= x.dim(2)) {
    throw ValidationError("phase shuffle radius " + std::to_string(radius) + " must be in [0, length " +
                          std::to_string(x.dim(2)) + ")");
  }
  std::vector<int> shifts(x.dim(0) * x.dim(1));
  for (auto& s : shifts) s = radius == 0 ? 0 : static_cast<int>(rng.between(-radius, radius));
  return ad::phase_shuffle(x, std::span<const int>(shifts));
}

template <typename T>
ad::Tensor<T> generate(const NetworkParams<T>& g, const ad::Tensor<T>& latent) {
  const auto& spec = g.spec();
  if (spec.kind != NetKind::generator) throw ValidationError("generate: parameters are not a generator");
  if (latent.rank() != 2 || latent.dim(1) != spec.latent.total()) {
    throw ValidationError("generate: latent shape " + ad::shape_string(latent.shape()) + " does not match width " +
                          std::to_string(spec.latent.total()));
  }
  const auto t = spec.table();
  const auto& ch = t.generator_channels;
  const std::size_t B = latent.dim(0);
  auto h = ad::dense(latent, g.at("dense.w"), std::optional(g.at("dense.b")));
  h = ad::relu(ad::reshape(h, ad::Shape{B, ch[0], t.base_length}));
  std::size_t length = t.base_length;
  for (std::size_t i = 0; i + 1 < ch.size(); ++i) {
    const std::string prefix = "upconv" + std::to_string(i);
    const auto geo = ad::same_geometry(length * t.stride, t.kernel, t.stride);
    h = ad::conv1d_transpose(h, g.at(prefix + ".w"), geo, std::optional(g.at(prefix + ".b")));
    length *= t.stride;
    h = (i + 2 < ch.size()) ? ad::relu(h) : ad::tanh(h);
  }
  return ad::reshape(h, ad::Shape{B, length});
}

template <typename T>
ad::Tensor<T> generate(const NetworkParams<T>& g, const std::vector<LatentVector>& latents) {
  return generate(g, latent_tensor<T>(g.spec().latent, latents));
}

namespace {

template <typename T>
void check_audio(const NetworkSpec& spec, const ad::Tensor<T>& audio, const char* op) {
  const auto len = spec.table().output_length();
  if (audio.rank() != 2 || audio.dim(1) != len) {
    throw ValidationError(std::string(op) + ": audio shape " + ad::shape_string(audio.shape()) +
                          " does not match length " + std::to_string(len));
  }
}

template <typename T>
void check_shifts(const NetworkSpec& spec, const CriticShifts* shifts, std::size_t batch) {
  if (!shifts) return;
  const auto& ch = spec.table().critic_channels;
  if (shifts->size() != ch.size() - 2) throw ValidationError("critic shifts: wrong number of shuffle layers");
  for (std::size_t i = 0; i < shifts->size(); ++i) {
    if ((*shifts)[i].size() != batch * ch[i + 1]) throw ValidationError("critic shifts: wrong row count");
  }
}

}  // namespace

template <typename T>
ad::Tensor<T> critic_forward(const NetworkParams<T>& net, const ad::Tensor<T>& audio, const CriticShifts* shifts) {
  const auto& spec = net.spec();
  if (spec.kind == NetKind::generator) throw ValidationError("critic_forward: parameters are a generator");
  check_audio(spec, audio, "critic");
  const auto t = spec.table();
  const auto& ch = t.critic_channels;
  const std::size_t B = audio.dim(0);
  check_shifts<T>(spec, shifts, B);
  std::size_t length = audio.dim(1);
  auto h = ad::reshape(audio, ad::Shape{B, 1, length});
  for (std::size_t i = 0; i + 1 < ch.size(); ++i) {
    const std::string prefix = "conv" + std::to_string(i);
    const auto geo = ad::same_geometry(length, t.kernel, t.stride);
    h = ad::leaky_relu(ad::conv1d(h, net.at(prefix + ".w"), geo, std::optional(net.at(prefix + ".b"))), 0.2);
    length /= t.stride;
    if (shifts && i + 2 < ch.size()) h = ad::phase_shuffle(h, std::span<const int>((*shifts)[i]));
  }
  h = ad::reshape(h, ad::Shape{B, ch.back() * length});
  return ad::dense(h, net.at("out.w"), std::optional(net.at("out.b")));
}

template <typename T>
TangentOutput<T> critic_forward_tangent(const NetworkParams<T>& net, const ad::Tensor<T>& audio,
                                        const ad::Tensor<T>& direction, const CriticShifts* shifts) {
  const auto& spec = net.spec();
  if (spec.kind == NetKind::generator) throw ValidationError("critic_forward_tangent: parameters are a generator");
  check_audio(spec, audio, "critic");
  if (direction.shape() != audio.shape()) {
    throw DimensionError("critic tangent direction " + ad::shape_string(direction.shape()) + " vs audio " +
                         ad::shape_string(audio.shape()));
  }
  const auto t = spec.table();
  const auto& ch = t.critic_channels;
  const std::size_t B = audio.dim(0);
  check_shifts<T>(spec, shifts, B);
  std::size_t length = audio.dim(1);
  auto h = ad::reshape(audio, ad::Shape{B, 1, length});
  auto v = ad::reshape(direction, ad::Shape{B, 1, length});
  for (std::size_t i = 0; i + 1 < ch.size(); ++i) {
    const std::string prefix = "conv" + std::to_string(i);
    const auto geo = ad::same_geometry(length, t.kernel, t.stride);
    auto pre = ad::conv1d(h, net.at(prefix + ".w"), geo, std::optional(net.at(prefix + ".b")));
    auto vpre = ad::conv1d(v, net.at(prefix + ".w"), geo);
    h = ad::leaky_relu(pre, 0.2);
    v = ad::mul(vpre, ad::leaky_relu_slope(pre, 0.2));
    length /= t.stride;
    if (shifts && i + 2 < ch.size()) {
      h = ad::phase_shuffle(h, std::span<const int>((*shifts)[i]));
      v = ad::phase_shuffle(v, std::span<const int>((*shifts)[i]));
    }
  }
  h = ad::reshape(h, ad::Shape{B, ch.back() * length});
  v = ad::reshape(v, ad::Shape{B, ch.back() * length});
  return {ad::dense(h, net.at("out.w"), std::optional(net.at("out.b"))), ad::dense(v, net.at("out.w"))};
}

template <typename T>
ad::Tensor<T> discriminate(const NetworkParams<T>& d, const ad::Tensor<T>& audio, Rng& rng) {
  if (d.spec().kind != NetKind::discriminator) throw ValidationError("discriminate: parameters are not a discriminator");
  check_audio(d.spec(), audio, "discriminate");
  const auto shifts = sample_shifts(d.spec(), audio.dim(0), rng);
  auto out = critic_forward(d, audio, &shifts);
  return ad::reshape(out, ad::Shape{audio.dim(0)});
}

template <typename T>
ad::Tensor<T> q_estimate(const NetworkParams<T>& q, const ad::Tensor<T>& audio, Rng* rng) {
  if (q.spec().kind != NetKind::qnet) throw ValidationError("q_estimate: parameters are not a Q-network");
  check_audio(q.spec(), audio, "q_estimate");
  if (!rng) return critic_forward(q, audio, nullptr);
  const auto shifts = sample_shifts(q.spec(), audio.dim(0), *rng);
  return critic_forward(q, audio, &shifts);
}

#define LEXIGAN_INSTANTIATE_NETWORKS(T)                                                                          \
  template class NetworkParams<T>;                                                                               \
  template ad::Tensor<T> phase_shuffle(const ad::Tensor<T>&, int, Rng&);                                         \
  template ad::Tensor<T> generate(const NetworkParams<T>&, const ad::Tensor<T>&);                                \
  template ad::Tensor<T> generate(const NetworkParams<T>&, const std::vector<LatentVector>&);                    \
  template ad::Tensor<T> critic_forward(const NetworkParams<T>&, const ad::Tensor<T>&, const CriticShifts*);     \
  template TangentOutput<T> critic_forward_tangent(const NetworkParams<T>&, const ad::Tensor<T>&,                \
                                                   const ad::Tensor<T>&, const CriticShifts*);                   \
  template ad::Tensor<T> discriminate(const NetworkParams<T>&, const ad::Tensor<T>&, Rng&);                      \
  template ad::Tensor<T> q_estimate(const NetworkParams<T>&, const ad::Tensor<T>&, Rng*);

LEXIGAN_INSTANTIATE_NETWORKS(float)
LEXIGAN_INSTANTIATE_NETWORKS(double)

#undef LEXIGAN_INSTANTIATE_NETWORKS

}  // namespace lexigan::models
