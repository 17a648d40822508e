#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "lexigan/models/latent.hpp"
#include "lexigan/models/networks.hpp"
#include "lexigan/probe/regression.hpp"
#include "lexigan/probe/spectral.hpp"
#include "lexigan/probe/templates.hpp"

namespace lexigan::probe {

/// Statistics of the outputs generated for one code class at one value.
struct ProbeRow {
  std::size_t class_index = 0;
  std::vector<double> code;
  double value = 0.0;
  std::vector<std::size_t> counts;  // per template class, then else
  std::size_t modal_class = 0;      // ties to the lower index
  double modal_fraction = 0.0;
  double entropy = 0.0;             // nats
  double waveform_variance = 0.0;   // mean squared deviation from the mean waveform
  std::vector<std::size_t> labels;  // per sample index
  std::vector<SpectralFeatures> features;
};

struct ProbeReport {
  std::vector<std::string> class_names;  // template classes; "else" is implied
  models::LatentConfig latent;
  double value = 0.0;
  std::size_t samples_per_code = 0;
  std::uint64_t seed = 0;
  std::string checkpoint_id;
  std::vector<ProbeRow> rows;

  std::size_t num_categories() const noexcept { return class_names.size() + 1; }
};

struct ProbeOptions {
  std::size_t threads = 1;
  std::size_t batch = 50;
  std::string checkpoint_id;
};

/// Generates `samples_per_code` outputs for every code class with the code set
/// to `value`. Sample i uses the same noise for every code.
ProbeReport sweep_codes(const models::NetworkParams<float>& generator, const models::LatentConfig& latent,
                        const TemplateBank& bank, double value, std::size_t samples_per_code, std::uint64_t seed,
                        const ProbeOptions& options = {});

/// sweep_codes at each of `values`, which must be strictly increasing.
std::vector<ProbeReport> extreme_probe(const models::NetworkParams<float>& generator,
                                       const models::LatentConfig& latent, const TemplateBank& bank,
                                       const std::vector<double>& values, std::size_t samples_per_code,
                                       std::uint64_t seed, const ProbeOptions& options = {});

double entropy_nats(const std::vector<std::size_t>& counts);

/// Word assumed to underlie each code. Pairs (code, word) are taken in order
/// of decreasing within-code proportion, each code and each word used once;
/// equal proportions go to the lower code index and are flagged.
struct CodeAssignment {
  std::vector<std::size_t> word;  // per row; num classes when unassigned
  std::vector<bool> tie;
  bool any_tie = false;
};

CodeAssignment assign_codes(const ProbeReport& report);

/// Fraction of all outputs whose oracle label is the word assigned to their code.
double retrieval_accuracy(const ProbeReport& report, const CodeAssignment& assignment);

double median_modal_fraction(const ProbeReport& report);
double median_entropy(const ProbeReport& report);
double median_waveform_variance(const ProbeReport& report);

/// Largest pairwise total-variation distance between row distributions.
double max_pairwise_tv(const ProbeReport& report);

/// Outcome = oracle label (else included), predictor = code class.
struct CodeModelFit {
  RegressionFit full;
  RegressionFit empty;
};

CodeModelFit fit_code_model(const ProbeReport& report);

using AcousticPredicate = std::function<bool(const SpectralFeatures&)>;

/// Noise-like onset: first-half spectral centroid above 2 kHz.
AcousticPredicate high_centroid_onset(double threshold_hz = 2000.0);

struct FeatureAssociation {
  RegressionFit full;                  // all feature bits
  std::vector<RegressionFit> dropped;  // dropped[j]: feature j removed
};

/// Binary regression of the predicate on the fiw feature bits over every output.
FeatureAssociation feature_association(const ProbeReport& report, const AcousticPredicate& predicate);

void write_report_csv(const ProbeReport& report, std::ostream& out, bool header = true);
void write_report_jsonl(const ProbeReport& report, std::ostream& out);
std::string fit_to_json(const RegressionFit& fit);

}  // namespace lexigan::probe
