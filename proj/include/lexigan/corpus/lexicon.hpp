#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lexigan/corpus/audio.hpp"

namespace lexigan::corpus {

enum class Segment { noise_burst, tone_low, tone_high, chirp };

std::string to_string(Segment s);
Segment parse_segment(const std::string& text);

struct WordSpec {
  std::string name;
  std::vector<Segment> segments;
  std::size_t count = 1;
};

struct Jitter {
  double amplitude = 0.10;
  double duration = 0.10;
  double pitch = 0.05;
};

/// Synthetic lexicon: each word is a sequence of segments drawn from a
/// four-symbol alphabet (white noise, 300 Hz tone, 1200 Hz tone, 300->1200 Hz
/// chirp), rendered with per-token jitter.
struct LexiconSpec {
  std::vector<WordSpec> words;
  std::size_t segment_samples = 0;  // 0: a quarter of the slot
  Jitter jitter;

  void validate(std::size_t slot_len) const;
  std::size_t segment_length(std::size_t slot_len) const {
    return segment_samples ? segment_samples : slot_len / 4;
  }
};

/// Lines of `word_name = seg,seg[,seg] x count`; blank lines and lines starting
/// with '#' are ignored.
LexiconSpec parse_lexicon(const std::string& text);
LexiconSpec load_lexicon(const std::filesystem::path& path);
std::string format_lexicon(const LexiconSpec& spec);

/// Deterministic per seed. Each token is its word's segments concatenated
/// with jitter, peak-normalised to 0.9 and zero-padded to slot_len. Class
/// labels follow the order of words in the spec.
Dataset synth_lexicon(const LexiconSpec& spec, std::size_t slot_len, std::uint64_t seed);

/// The four-word lexicon used by the desk experiments: two noise-initial
/// words and two tonal-initial words.
LexiconSpec desk_lexicon(std::size_t tokens_per_word = 50);

}  // namespace lexigan::corpus
