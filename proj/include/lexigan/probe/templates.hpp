#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lexigan/corpus/audio.hpp"
#include "lexigan/probe/spectral.hpp"

namespace lexigan::probe {

/// Nearest-template labeller for generated audio. One mean log-spectrogram per
/// class; outputs farther from every template than `reject_threshold` are
/// labelled "else" (index num_classes()).
struct TemplateBank {
  std::vector<std::string> class_names;
  std::size_t slot_len = 0;
  StftConfig stft;
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<std::vector<double>> templates;
  // mean + 3 * stdev of each training clip's distance to its own template
  double reject_threshold = 0.0;

  std::size_t num_classes() const noexcept { return templates.size(); }
  std::size_t else_label() const noexcept { return templates.size(); }
};

TemplateBank build_templates(const corpus::Dataset& dataset, const StftConfig& stft = {});

struct Classification {
  std::size_t label = 0;    // class index, or else_label() when rejected
  std::size_t nearest = 0;  // argmin distance, ties to the lower index
  std::vector<double> distances;
};

Classification classify(std::span<const double> clip, const TemplateBank& bank);

/// Fraction of dataset clips whose label (with rejection) equals their own class.
double self_classification_accuracy(const corpus::Dataset& dataset, const TemplateBank& bank);

}  // namespace lexigan::probe
