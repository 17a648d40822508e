#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lexigan/corpus/audio.hpp"

namespace lexigan::probe {

struct StftConfig {
  std::size_t frame = 256;
  std::size_t hop = 128;
};

/// log(1 + |STFT|) with a periodic Hann window and no edge padding:
/// frames = 1 + (L - frame) / hop, bins = frame / 2 + 1. Row-major [frames, bins].
struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<double> values;
};

Spectrogram log_spectrogram(std::span<const double> samples, const StftConfig& cfg = {});

struct SpectralFeatures {
  double centroid_hz = 0.0;
  double rms = 0.0;
  double first_half_centroid_hz = 0.0;
  double second_half_centroid_hz = 0.0;
};

/// Magnitude-weighted mean frequency of the Hann-windowed DFT; 0 for silence.
double spectral_centroid(std::span<const double> samples, int sample_rate = corpus::kSampleRate);

SpectralFeatures spectral_features(std::span<const double> samples, int sample_rate = corpus::kSampleRate);

}  // namespace lexigan::probe
