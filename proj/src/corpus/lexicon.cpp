#include "lexigan/corpus/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "lexigan/errors.hpp"
#include "lexigan/rng.hpp"

namespace lexigan::corpus {

namespace {

constexpr double kLowHz = 300.0;
constexpr double kHighHz = 1200.0;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void render_segment(Segment seg, std::size_t n, double amp, double pitch, Rng& rng, std::vector<double>& out) {
  const double two_pi = 2.0 * std::numbers::pi;
  const double fs = static_cast<double>(kSampleRate);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    double v = 0.0;
    switch (seg) {
      case Segment::noise_burst: v = rng.uniform(-1.0, 1.0); break;
      case Segment::tone_low: v = std::sin(two_pi * kLowHz * pitch * t); break;
      case Segment::tone_high: v = std::sin(two_pi * kHighHz * pitch * t); break;
      case Segment::chirp: {
        const double span = static_cast<double>(n) / fs;
        const double sweep = (kHighHz - kLowHz) / span;
        v = std::sin(two_pi * pitch * (kLowHz * t + 0.5 * sweep * t * t));
        break;
      }
    }
    out.push_back(amp * v);
  }
}

}  // namespace

std::string to_string(Segment s) {
  switch (s) {
    case Segment::noise_burst: return "noise_burst";
    case Segment::tone_low: return "tone_low";
    case Segment::tone_high: return "tone_high";
    case Segment::chirp: return "chirp";
  }
  return "?";
}

Segment parse_segment(const std::string& text) {
  const auto t = trim(text);
  if (t == "noise_burst") return Segment::noise_burst;
  if (t == "tone_low") return Segment::tone_low;
  if (t == "tone_high") return Segment::tone_high;
  if (t == "chirp") return Segment::chirp;
  throw ValidationError("unknown segment '" + t + "' (expected noise_burst, tone_low, tone_high or chirp)");
}

void LexiconSpec::validate(std::size_t slot_len) const {
  if (words.empty()) throw ValidationError("lexicon has no words");
  std::set<std::vector<Segment>> seen;
  std::set<std::string> names;
  const double longest = static_cast<double>(segment_length(slot_len)) * (1.0 + jitter.duration);
  for (const auto& w : words) {
    if (w.segments.empty()) throw ValidationError("word '" + w.name + "' has no segments");
    if (w.count < 1) throw ValidationError("word '" + w.name + "' needs at least one token");
    if (!seen.insert(w.segments).second) throw ValidationError("word '" + w.name + "' duplicates another word");
    if (!names.insert(w.name).second) throw ValidationError("duplicate word name '" + w.name + "'");
    if (std::ceil(longest) * static_cast<double>(w.segments.size()) > static_cast<double>(slot_len)) {
      throw ValidationError("word '" + w.name + "' can reach " +
                            std::to_string(static_cast<std::size_t>(std::ceil(longest)) * w.segments.size()) +
                            " samples, longer than the slot of " + std::to_string(slot_len));
    }
  }
}

LexiconSpec parse_lexicon(const std::string& text) {
  LexiconSpec spec;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto where = " (line " + std::to_string(lineno) + ")";
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ValidationError("lexicon line missing '='" + where);
    WordSpec w;
    w.name = trim(t.substr(0, eq));
    if (w.name.empty()) throw ValidationError("lexicon word name is empty" + where);
    std::string rhs = trim(t.substr(eq + 1));
    const auto x = rhs.rfind(" x ");
    if (x == std::string::npos) throw ValidationError("lexicon line missing 'x count'" + where);
    const auto count_text = trim(rhs.substr(x + 3));
    try {
      std::size_t used = 0;
      const long long c = std::stoll(count_text, &used);
      if (used != count_text.size() || c < 1) throw std::invalid_argument("count");
      w.count = static_cast<std::size_t>(c);
    } catch (const std::logic_error&) {
      throw ValidationError("lexicon token count '" + count_text + "' is not a positive integer" + where);
    }
    std::istringstream segs(rhs.substr(0, x));
    std::string seg;
    while (std::getline(segs, seg, ',')) w.segments.push_back(parse_segment(seg));
    spec.words.push_back(std::move(w));
  }
  return spec;
}

LexiconSpec load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_lexicon(os.str());
}

std::string format_lexicon(const LexiconSpec& spec) {
  std::ostringstream os;
  for (const auto& w : spec.words) {
    os << w.name << " = ";
    for (std::size_t i = 0; i < w.segments.size(); ++i) os << (i ? "," : "") << to_string(w.segments[i]);
    os << " x " << w.count << '\n';
  }
  return os.str();
}

Dataset synth_lexicon(const LexiconSpec& spec, std::size_t slot_len, std::uint64_t seed) {
  spec.validate(slot_len);
  const auto seg_len = static_cast<double>(spec.segment_length(slot_len));
  const auto& j = spec.jitter;
  Dataset ds;
  ds.slot_len = slot_len;
  for (std::size_t w = 0; w < spec.words.size(); ++w) {
    const auto& word = spec.words[w];
    ds.class_names.push_back(word.name);
    for (std::size_t tok = 0; tok < word.count; ++tok) {
      Rng rng = Rng::derive(seed, (static_cast<std::uint64_t>(w) << 32) | tok);
      std::vector<double> samples;
      for (Segment seg : word.segments) {
        const auto n = static_cast<std::size_t>(std::lround(seg_len * rng.uniform(1.0 - j.duration, 1.0 + j.duration)));
        const double amp = rng.uniform(1.0 - j.amplitude, 1.0 + j.amplitude);
        const double pitch = rng.uniform(1.0 - j.pitch, 1.0 + j.pitch);
        render_segment(seg, n, amp, pitch, rng, samples);
      }
      double peak = 0.0;
      for (double v : samples) peak = std::max(peak, std::abs(v));
      if (peak > 0.0)
        for (double& v : samples) v *= 0.9 / peak;
      AudioClip clip;
      clip.samples = pad_or_trim(std::move(samples), slot_len);
      clip.label = w;
      ds.clips.push_back(std::move(clip));
    }
  }
  return ds;
}

LexiconSpec desk_lexicon(std::size_t tokens_per_word) {
  LexiconSpec spec;
  spec.words = {
      {"hiss_low", {Segment::noise_burst, Segment::tone_low}, tokens_per_word},
      {"hiss_high", {Segment::noise_burst, Segment::tone_high}, tokens_per_word},
      {"low_chirp", {Segment::tone_low, Segment::chirp}, tokens_per_word},
      {"chirp_high", {Segment::chirp, Segment::tone_high}, tokens_per_word},
  };
  return spec;
}

}  // namespace lexigan::corpus
