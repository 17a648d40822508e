#include "lexigan/probe/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "lexigan/errors.hpp"

namespace lexigan::probe {

namespace {

// FFTW planning is not thread-safe; execution with new arrays is.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  /// Magnitudes of bins 0..n/2.
  void magnitudes(const double* input, double* mags) const {
    double* in = fftw_alloc_real(n_);
    fftw_complex* out = fftw_alloc_complex(n_ / 2 + 1);
    std::copy_n(input, n_, in);
    fftw_execute_dft_r2c(plan_, in, out);
    for (std::size_t k = 0; k <= n_ / 2; ++k) mags[k] = std::hypot(out[k][0], out[k][1]);
    fftw_free(in);
    fftw_free(out);
  }

 private:
  std::size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

const RealFft& fft_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<RealFft>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

}  // namespace

Spectrogram log_spectrogram(std::span<const double> samples, const StftConfig& cfg) {
  if (cfg.frame < 2 || cfg.hop < 1) throw ValidationError("STFT frame must be >= 2 and hop >= 1");
  if (samples.size() < cfg.frame) {
    throw ValidationError("clip of " + std::to_string(samples.size()) + " samples is shorter than one STFT frame");
  }
  Spectrogram s;
  s.frames = 1 + (samples.size() - cfg.frame) / cfg.hop;
  s.bins = cfg.frame / 2 + 1;
  s.values.resize(s.frames * s.bins);
  const auto window = hann(cfg.frame);
  const auto& fft = fft_for(cfg.frame);
  std::vector<double> buf(cfg.frame);
  for (std::size_t f = 0; f < s.frames; ++f) {
    for (std::size_t i = 0; i < cfg.frame; ++i) buf[i] = samples[f * cfg.hop + i] * window[i];
    double* row = s.values.data() + f * s.bins;
    fft.magnitudes(buf.data(), row);
    for (std::size_t k = 0; k < s.bins; ++k) row[k] = std::log1p(row[k]);
  }
  return s;
}

double spectral_centroid(std::span<const double> samples, int sample_rate) {
  const std::size_t n = samples.size();
  if (n < 2) return 0.0;
  const auto window = hann(n);
  std::vector<double> buf(n), mags(n / 2 + 1);
  for (std::size_t i = 0; i < n; ++i) buf[i] = samples[i] * window[i];
  fft_for(n).magnitudes(buf.data(), mags.data());
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < mags.size(); ++k) {
    num += mags[k] * static_cast<double>(k) * sample_rate / static_cast<double>(n);
    den += mags[k];
  }
  return den > 0.0 ? num / den : 0.0;
}

SpectralFeatures spectral_features(std::span<const double> samples, int sample_rate) {
  SpectralFeatures f;
  double sq = 0.0;
  for (double v : samples) sq += v * v;
  f.rms = samples.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(samples.size()));
  f.centroid_hz = spectral_centroid(samples, sample_rate);
  const std::size_t half = samples.size() / 2;
  f.first_half_centroid_hz = spectral_centroid(samples.subspan(0, half), sample_rate);
  f.second_half_centroid_hz = spectral_centroid(samples.subspan(half), sample_rate);
  return f;
}

}  // namespace lexigan::probe
