#include "lexigan/probe/templates.hpp"

#include <cmath>

#include "lexigan/errors.hpp"

namespace lexigan::probe {

namespace {

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TemplateBank build_templates(const corpus::Dataset& dataset, const StftConfig& stft) {
  const std::size_t K = dataset.num_classes();
  if (K == 0) throw ValidationError("build_templates: dataset has no classes");
  TemplateBank bank;
  bank.class_names = dataset.class_names;
  bank.slot_len = dataset.slot_len;
  bank.stft = stft;

  std::vector<Spectrogram> specs;
  specs.reserve(dataset.clips.size());
  for (const auto& clip : dataset.clips) {
    if (clip.samples.size() != dataset.slot_len) {
      throw ValidationError("build_templates: clip has " + std::to_string(clip.samples.size()) +
                            " samples, slot is " + std::to_string(dataset.slot_len));
    }
    specs.push_back(log_spectrogram(clip.samples, stft));
  }
  bank.frames = specs.empty() ? 0 : specs.front().frames;
  bank.bins = specs.empty() ? 0 : specs.front().bins;

  std::vector<std::size_t> counts(K, 0);
  bank.templates.assign(K, std::vector<double>(bank.frames * bank.bins, 0.0));
  for (std::size_t i = 0; i < dataset.clips.size(); ++i) {
    const auto& label = dataset.clips[i].label;
    if (!label || *label >= K) throw ValidationError("build_templates: clip " + std::to_string(i) + " has no valid label");
    ++counts[*label];
    auto& t = bank.templates[*label];
    for (std::size_t j = 0; j < t.size(); ++j) t[j] += specs[i].values[j];
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (counts[k] == 0) throw ValidationError("build_templates: class '" + dataset.class_names[k] + "' has no clips");
    for (auto& v : bank.templates[k]) v /= static_cast<double>(counts[k]);
  }

  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const double d = distance(specs[i].values, bank.templates[*dataset.clips[i].label]);
    sum += d;
    sq += d * d;
  }
  const double n = static_cast<double>(specs.size());
  const double mu = sum / n;
  const double var = n > 1 ? std::max(0.0, (sq - n * mu * mu) / (n - 1)) : 0.0;
  bank.reject_threshold = mu + 3.0 * std::sqrt(var);
  return bank;
}

Classification classify(std::span<const double> clip, const TemplateBank& bank) {
  if (clip.size() != bank.slot_len) {
    throw ValidationError("classify: clip has " + std::to_string(clip.size()) + " samples, templates expect " +
                          std::to_string(bank.slot_len));
  }
  const auto spec = log_spectrogram(clip, bank.stft);
  Classification c;
  c.distances.reserve(bank.num_classes());
  for (const auto& t : bank.templates) c.distances.push_back(distance(spec.values, t));
  for (std::size_t k = 1; k < c.distances.size(); ++k)
    if (c.distances[k] < c.distances[c.nearest]) c.nearest = k;
  c.label = c.distances[c.nearest] > bank.reject_threshold ? bank.else_label() : c.nearest;
  return c;
}

double self_classification_accuracy(const corpus::Dataset& dataset, const TemplateBank& bank) {
  if (dataset.clips.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& clip : dataset.clips) {
    if (clip.label && classify(clip.samples, bank).label == *clip.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(dataset.clips.size());
}

}  // namespace lexigan::probe
