#include "lexigan/corpus/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "lexigan/errors.hpp"

namespace lexigan::corpus {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

std::int16_t quantize(double s) {
  const double clamped = std::clamp(s, -1.0, 1.0);
  // std::round rounds halves away from zero.
  return static_cast<std::int16_t>(std::round(clamped * 32767.0));
}

}  // namespace

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (const auto& c : clips)
    if (c.label && *c.label < counts.size()) ++counts[*c.label];
  return counts;
}

std::vector<unsigned char> encode_wav(const std::vector<double>& samples, int sample_rate) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  const char* riff = "RIFF";
  out.insert(out.end(), riff, riff + 4);
  put_u32(out, 36 + data_bytes);
  const char* wave_fmt = "WAVEfmt ";
  out.insert(out.end(), wave_fmt, wave_fmt + 8);
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  const char* data = "data";
  out.insert(out.end(), data, data + 4);
  put_u32(out, data_bytes);
  for (double s : samples) put_u16(out, static_cast<std::uint16_t>(quantize(s)));
  return out;
}

AudioClip decode_wav(const std::vector<unsigned char>& bytes, const std::string& origin) {
  auto fail_parse = [&](const std::string& what) { throw ParseError(origin + ": " + what); };
  auto fail_format = [&](const std::string& what) { throw FormatError(origin + ": " + what); };
  if (bytes.size() < 12) fail_parse("truncated RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0) fail_format("not a RIFF file");
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) fail_format("RIFF form type is not WAVE");

  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::uint32_t size = read_u32(hdr + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      fail_parse("chunk '" + std::string(reinterpret_cast<const char*>(hdr), 4) + "' truncated (declares " +
                 std::to_string(size) + " bytes, " + std::to_string(bytes.size() - body) + " available)");
    }
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16) fail_parse("fmt chunk shorter than 16 bytes");
      const unsigned char* f = bytes.data() + body;
      const auto codec = read_u16(f);
      const auto channels = read_u16(f + 2);
      const auto rate = read_u32(f + 4);
      const auto bits = read_u16(f + 14);
      if (codec != 1) fail_format("audio format " + std::to_string(codec) + " is not PCM (1)");
      if (channels != 1) fail_format("channel count " + std::to_string(channels) + " is not mono (1)");
      if (rate != static_cast<std::uint32_t>(kSampleRate)) {
        fail_format("sample rate " + std::to_string(rate) + " is not " + std::to_string(kSampleRate));
      }
      if (bits != 16) fail_format("bits per sample " + std::to_string(bits) + " is not 16");
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt) fail_parse("data chunk before fmt chunk");
      if (size % 2 != 0) fail_parse("data chunk has odd byte count");
      AudioClip clip;
      clip.samples.resize(size / 2);
      for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        const auto raw = static_cast<std::int16_t>(read_u16(bytes.data() + body + 2 * i));
        clip.samples[i] = std::max(-1.0, static_cast<double>(raw) / 32767.0);
      }
      return clip;
    }
    pos = body + size + (size & 1U);
  }
  fail_parse(have_fmt ? "missing data chunk" : "missing fmt chunk");
  return {};
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav(bytes, path.string());
}

void write_wav(const AudioClip& clip, const std::filesystem::path& path) {
  const auto bytes = encode_wav(clip.samples, clip.sample_rate);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<double> pad_or_trim(std::vector<double> samples, std::size_t slot_len) {
  if (slot_len < 1) throw ValidationError("slot length must be >= 1");
  samples.resize(slot_len, 0.0);
  return samples;
}

Dataset load_corpus_dir(const std::filesystem::path& root, std::size_t slot_len) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw IoError("corpus root " + root.string() + " is not a directory");
  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty()) throw ValidationError("corpus root " + root.string() + " has no class directories");

  Dataset ds;
  ds.slot_len = slot_len;
  for (std::size_t label = 0; label < class_dirs.size(); ++label) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(class_dirs[label])) {
      auto ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
      if (entry.is_regular_file() && ext == ".wav") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ValidationError("class directory " + class_dirs[label].string() + " has no .wav files");
    ds.class_names.push_back(class_dirs[label].filename().string());
    for (const auto& f : files) {
      AudioClip clip = read_wav(f);
      clip.samples = pad_or_trim(std::move(clip.samples), slot_len);
      clip.label = label;
      ds.clips.push_back(std::move(clip));
    }
  }
  return ds;
}

}  // namespace lexigan::corpus
