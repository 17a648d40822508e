#include "lexigan/models/latent.hpp"

#include <algorithm>

#include "lexigan/errors.hpp"

namespace lexigan::models {

std::string to_string(Arch arch) { return arch == Arch::ciw ? "ciw" : "fiw"; }

Arch parse_arch(const std::string& text) {
  if (text == "ciw") return Arch::ciw;
  if (text == "fiw") return Arch::fiw;
  throw ValidationError("unknown architecture '" + text + "' (expected ciw or fiw)");
}

std::size_t LatentConfig::num_classes() const {
  return arch == Arch::ciw ? num_code : (std::size_t{1} << num_code);
}

void LatentConfig::validate() const {
  if (num_code < 1 || num_noise < 1) {
    throw ValidationError("latent config needs at least one code and one noise variable (got " +
                          std::to_string(num_code) + "+" + std::to_string(num_noise) + ")");
  }
  if (arch == Arch::fiw && num_code > 30) {
    throw ValidationError("fiw supports at most 30 features, got " + std::to_string(num_code));
  }
}

LatentConfig LatentConfig::with_total(Arch arch, std::size_t num_code, std::size_t total) {
  if (num_code >= total) {
    throw ValidationError("code size " + std::to_string(num_code) + " leaves no noise in a latent of " +
                          std::to_string(total));
  }
  LatentConfig cfg{arch, num_code, total - num_code};
  cfg.validate();
  return cfg;
}

std::vector<double> encode_class(const LatentConfig& cfg, std::size_t class_index, double value) {
  if (class_index >= cfg.num_classes()) {
    throw ValidationError("class index " + std::to_string(class_index) + " outside [0, " +
                          std::to_string(cfg.num_classes()) + ")");
  }
  std::vector<double> code(cfg.num_code, 0.0);
  if (cfg.arch == Arch::ciw) {
    code[class_index] = value;
  } else {
    for (std::size_t bit = 0; bit < cfg.num_code; ++bit) {
      const std::size_t shift = cfg.num_code - 1 - bit;
      if ((class_index >> shift) & 1U) code[bit] = value;
    }
  }
  return code;
}

std::size_t decode_class(const LatentConfig& cfg, const std::vector<double>& code) {
  if (code.size() != cfg.num_code) {
    throw ValidationError("code length " + std::to_string(code.size()) + " != " + std::to_string(cfg.num_code));
  }
  if (cfg.arch == Arch::ciw) {
    return static_cast<std::size_t>(std::max_element(code.begin(), code.end()) - code.begin());
  }
  std::size_t cls = 0;
  for (double v : code) cls = (cls << 1) | (v > 0.5 ? 1U : 0U);
  return cls;
}

std::vector<double> sample_noise(std::size_t count, Rng& rng) {
  std::vector<double> z(count);
  for (auto& v : z) v = rng.uniform(-1.0, 1.0);
  return z;
}

std::vector<LatentVector> sample_latent(const LatentConfig& cfg, Rng& rng, std::size_t batch,
                                        std::optional<std::size_t> forced_class) {
  cfg.validate();
  if (batch < 1) throw ValidationError("sample_latent: batch must be >= 1");
  std::vector<LatentVector> out;
  out.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    LatentVector lv;
    if (forced_class) {
      lv.code = encode_class(cfg, *forced_class, 1.0);
    } else if (cfg.arch == Arch::ciw) {
      lv.code = encode_class(cfg, rng.below(cfg.num_code), 1.0);
    } else {
      lv.code.resize(cfg.num_code);
      for (auto& bit : lv.code) bit = static_cast<double>(rng() >> 63);
    }
    lv.noise = sample_noise(cfg.num_noise, rng);
    out.push_back(std::move(lv));
  }
  return out;
}

template <typename T>
ad::Tensor<T> latent_tensor(const LatentConfig& cfg, const std::vector<LatentVector>& batch) {
  if (batch.empty()) throw ValidationError("latent batch is empty");
  std::vector<T> data;
  data.reserve(batch.size() * cfg.total());
  for (const auto& lv : batch) {
    if (lv.code.size() != cfg.num_code || lv.noise.size() != cfg.num_noise) {
      throw ValidationError("latent vector has " + std::to_string(lv.code.size()) + "+" +
                            std::to_string(lv.noise.size()) + " entries, expected " + std::to_string(cfg.num_code) +
                            "+" + std::to_string(cfg.num_noise));
    }
    for (double v : lv.code) data.push_back(static_cast<T>(v));
    for (double v : lv.noise) data.push_back(static_cast<T>(v));
  }
  return ad::Tensor<T>(ad::Shape{batch.size(), cfg.total()}, std::move(data));
}

template ad::Tensor<float> latent_tensor<float>(const LatentConfig&, const std::vector<LatentVector>&);
template ad::Tensor<double> latent_tensor<double>(const LatentConfig&, const std::vector<LatentVector>&);

}  // namespace lexigan::models
