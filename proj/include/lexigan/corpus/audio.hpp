#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lexigan::corpus {

inline constexpr int kSampleRate = 16000;

struct AudioClip {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = kSampleRate;
  std::optional<std::size_t> label;
};

struct Dataset {
  std::vector<AudioClip> clips;
  std::vector<std::string> class_names;
  std::size_t slot_len = 0;

  std::size_t num_classes() const noexcept { return class_names.size(); }
  std::vector<std::size_t> class_counts() const;
};

/// RIFF/WAVE, PCM 16-bit, mono, 16 kHz. Samples map to s / 32767, clamped to
/// [-1, 1].
AudioClip read_wav(const std::filesystem::path& path);

/// Writes the canonical 44-byte header followed by round(s * 32767) with ties
/// away from zero.
void write_wav(const AudioClip& clip, const std::filesystem::path& path);

std::vector<unsigned char> encode_wav(const std::vector<double>& samples, int sample_rate = kSampleRate);
AudioClip decode_wav(const std::vector<unsigned char>& bytes, const std::string& origin = "<memory>");

/// Zero-pads or truncates at the end.
std::vector<double> pad_or_trim(std::vector<double> samples, std::size_t slot_len);

/// Reads root/<class_name>/*.wav. Classes are numbered by sorted directory
/// name; clips within a class are in sorted path order.
Dataset load_corpus_dir(const std::filesystem::path& root, std::size_t slot_len);

}  // namespace lexigan::corpus
