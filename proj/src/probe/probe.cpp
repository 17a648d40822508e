#include "lexigan/probe/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "lexigan/autodiff/tensor.hpp"
#include "lexigan/errors.hpp"
#include "lexigan/parallel.hpp"

namespace lexigan::probe {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void finish_row(ProbeRow& row, std::size_t categories, const std::vector<std::vector<double>>& waves) {
  row.counts.assign(categories, 0);
  for (auto l : row.labels) ++row.counts[l];
  row.modal_class = static_cast<std::size_t>(std::max_element(row.counts.begin(), row.counts.end()) - row.counts.begin());
  row.modal_fraction = static_cast<double>(row.counts[row.modal_class]) / static_cast<double>(row.labels.size());
  row.entropy = entropy_nats(row.counts);

  const std::size_t L = waves.front().size();
  std::vector<double> mean(L, 0.0);
  for (const auto& w : waves)
    for (std::size_t i = 0; i < L; ++i) mean[i] += w[i];
  for (auto& m : mean) m /= static_cast<double>(waves.size());
  double sq = 0.0;
  for (const auto& w : waves)
    for (std::size_t i = 0; i < L; ++i) sq += (w[i] - mean[i]) * (w[i] - mean[i]);
  row.waveform_variance = sq / static_cast<double>(waves.size() * L);
}

}  // namespace

double entropy_nats(const std::vector<std::size_t>& counts) {
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  if (total == 0.0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return std::max(0.0, h);
}

ProbeReport sweep_codes(const models::NetworkParams<float>& generator, const models::LatentConfig& latent,
                        const TemplateBank& bank, double value, std::size_t samples_per_code, std::uint64_t seed,
                        const ProbeOptions& options) {
  if (!std::isfinite(value)) throw ValidationError("probe value must be finite");
  if (samples_per_code == 0) throw ValidationError("samples per code must be at least 1");
  latent.validate();
  if (generator.spec().latent != latent) throw ValidationError("generator latent layout does not match probe layout");
  if (generator.spec().table().output_length() != bank.slot_len) {
    throw ValidationError("generator output length " + std::to_string(generator.spec().table().output_length()) +
                          " differs from template slot " + std::to_string(bank.slot_len));
  }

  ProbeReport report;
  report.class_names = bank.class_names;
  report.latent = latent;
  report.value = value;
  report.samples_per_code = samples_per_code;
  report.seed = seed;
  report.checkpoint_id = options.checkpoint_id;
  const std::size_t codes = latent.num_classes();
  report.rows.resize(codes);

  const std::size_t batch = std::max<std::size_t>(1, options.batch);
  parallel_for(codes, options.threads, [&](std::size_t c) {
    ad::NoGradGuard no_grad;
    ProbeRow& row = report.rows[c];
    row.class_index = c;
    row.code = models::encode_class(latent, c, value);
    row.value = value;
    std::vector<std::vector<double>> waves;
    waves.reserve(samples_per_code);
    for (std::size_t start = 0; start < samples_per_code; start += batch) {
      const std::size_t n = std::min(batch, samples_per_code - start);
      std::vector<models::LatentVector> zs(n);
      for (std::size_t i = 0; i < n; ++i) {
        Rng rng = Rng::derive(seed, start + i);
        zs[i] = {row.code, models::sample_noise(latent.num_noise, rng)};
      }
      const auto audio = models::generate(generator, zs);
      const std::size_t L = audio.shape()[1];
      const auto data = audio.data();
      for (std::size_t i = 0; i < n; ++i) {
        waves.emplace_back(data.begin() + static_cast<std::ptrdiff_t>(i * L),
                           data.begin() + static_cast<std::ptrdiff_t>((i + 1) * L));
        row.labels.push_back(classify(waves.back(), bank).label);
        row.features.push_back(spectral_features(waves.back()));
      }
    }
    finish_row(row, report.num_categories(), waves);
  });
  return report;
}

std::vector<ProbeReport> extreme_probe(const models::NetworkParams<float>& generator,
                                       const models::LatentConfig& latent, const TemplateBank& bank,
                                       const std::vector<double>& values, std::size_t samples_per_code,
                                       std::uint64_t seed, const ProbeOptions& options) {
  for (std::size_t i = 1; i < values.size(); ++i)
    if (!(values[i] > values[i - 1])) throw ValidationError("probe values must be strictly increasing");
  std::vector<ProbeReport> out;
  for (double v : values) out.push_back(sweep_codes(generator, latent, bank, v, samples_per_code, seed, options));
  return out;
}

CodeAssignment assign_codes(const ProbeReport& report) {
  const std::size_t words = report.class_names.size();
  const std::size_t codes = report.rows.size();
  struct Pair {
    double proportion;
    std::size_t code, word;
  };
  std::vector<Pair> pairs;
  for (std::size_t c = 0; c < codes; ++c) {
    const auto& row = report.rows[c];
    const double n = static_cast<double>(row.labels.size());
    for (std::size_t w = 0; w < words; ++w)
      if (row.counts[w] > 0) pairs.push_back({static_cast<double>(row.counts[w]) / n, c, w});
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(b.proportion, a.code, a.word) < std::tie(a.proportion, b.code, b.word);
  });

  CodeAssignment a;
  a.word.assign(codes, words);
  a.tie.assign(codes, false);
  std::vector<bool> word_taken(words, false);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (a.word[p.code] != words || word_taken[p.word]) continue;
    // Another open pair at the same proportion competing for this code or word.
    for (std::size_t j = i + 1; j < pairs.size() && pairs[j].proportion == p.proportion; ++j) {
      const auto& q = pairs[j];
      if (a.word[q.code] != words || word_taken[q.word]) continue;
      if (q.code == p.code || q.word == p.word) {
        a.tie[p.code] = a.tie[q.code] = true;
        a.any_tie = true;
      }
    }
    a.word[p.code] = p.word;
    word_taken[p.word] = true;
  }
  return a;
}

double retrieval_accuracy(const ProbeReport& report, const CodeAssignment& assignment) {
  std::size_t hits = 0, total = 0;
  for (std::size_t c = 0; c < report.rows.size(); ++c) {
    for (auto l : report.rows[c].labels) {
      if (l == assignment.word[c] && l < report.class_names.size()) ++hits;
      ++total;
    }
  }
  return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

double median_modal_fraction(const ProbeReport& report) {
  std::vector<double> v;
  for (const auto& r : report.rows) v.push_back(r.modal_fraction);
  return median(std::move(v));
}

double median_entropy(const ProbeReport& report) {
  std::vector<double> v;
  for (const auto& r : report.rows) v.push_back(r.entropy);
  return median(std::move(v));
}

double median_waveform_variance(const ProbeReport& report) {
  std::vector<double> v;
  for (const auto& r : report.rows) v.push_back(r.waveform_variance);
  return median(std::move(v));
}

double max_pairwise_tv(const ProbeReport& report) {
  double worst = 0.0;
  for (std::size_t a = 0; a < report.rows.size(); ++a) {
    for (std::size_t b = a + 1; b < report.rows.size(); ++b) {
      const auto& ra = report.rows[a];
      const auto& rb = report.rows[b];
      const double na = static_cast<double>(ra.labels.size()), nb = static_cast<double>(rb.labels.size());
      double tv = 0.0;
      for (std::size_t k = 0; k < ra.counts.size(); ++k)
        tv += std::abs(static_cast<double>(ra.counts[k]) / na - static_cast<double>(rb.counts[k]) / nb);
      worst = std::max(worst, 0.5 * tv);
    }
  }
  return worst;
}

CodeModelFit fit_code_model(const ProbeReport& report) {
  std::vector<std::size_t> outcomes, codes;
  for (const auto& row : report.rows) {
    for (auto l : row.labels) {
      outcomes.push_back(l);
      codes.push_back(row.class_index);
    }
  }
  CodeModelFit fit;
  fit.empty = fit_multinomial(outcomes);
  fit.full = fit_multinomial(outcomes, std::span<const std::size_t>(codes));
  return fit;
}

AcousticPredicate high_centroid_onset(double threshold_hz) {
  return [threshold_hz](const SpectralFeatures& f) { return f.first_half_centroid_hz > threshold_hz; };
}

FeatureAssociation feature_association(const ProbeReport& report, const AcousticPredicate& predicate) {
  if (report.latent.arch != models::Arch::fiw) throw ValidationError("feature association needs a fiw report");
  const std::size_t n_feat = report.latent.num_code;
  std::vector<int> outcomes;
  std::vector<double> bits;
  for (const auto& row : report.rows) {
    for (const auto& f : row.features) {
      outcomes.push_back(predicate(f) ? 1 : 0);
      for (double c : row.code) bits.push_back(c != 0.0 ? 1.0 : 0.0);
    }
  }
  FeatureAssociation out;
  out.full = fit_binary(outcomes, bits, n_feat);
  for (std::size_t j = 0; j < n_feat; ++j) {
    std::vector<double> reduced;
    reduced.reserve(outcomes.size() * (n_feat - 1));
    for (std::size_t i = 0; i < outcomes.size(); ++i)
      for (std::size_t k = 0; k < n_feat; ++k)
        if (k != j) reduced.push_back(bits[i * n_feat + k]);
    out.dropped.push_back(fit_binary(outcomes, reduced, n_feat - 1));
  }
  return out;
}

namespace {

std::string code_string(const std::vector<double>& code) {
  std::string s;
  for (std::size_t i = 0; i < code.size(); ++i) {
    if (i) s += ' ';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", code[i]);
    s += buf;
  }
  return s;
}

}  // namespace

void write_report_csv(const ProbeReport& report, std::ostream& out, bool header) {
  if (header) {
    out << "code,value";
    for (const auto& name : report.class_names) out << ',' << name;
    out << ",else,modal_class,modal_frac,entropy\n";
  }
  char buf[64];
  for (const auto& row : report.rows) {
    out << '[' << code_string(row.code) << ']';
    std::snprintf(buf, sizeof buf, ",%g", row.value);
    out << buf;
    for (auto c : row.counts) out << ',' << c;
    const std::string modal =
        row.modal_class < report.class_names.size() ? report.class_names[row.modal_class] : std::string("else");
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f", row.modal_fraction, row.entropy);
    out << ',' << modal << buf << '\n';
  }
}

void write_report_jsonl(const ProbeReport& report, std::ostream& out) {
  for (const auto& row : report.rows) {
    nlohmann::ordered_json j;
    j["checkpoint"] = report.checkpoint_id;
    j["seed"] = report.seed;
    j["code"] = row.code;
    j["value"] = row.value;
    nlohmann::ordered_json counts;
    for (std::size_t k = 0; k < report.class_names.size(); ++k) counts[report.class_names[k]] = row.counts[k];
    counts["else"] = row.counts.back();
    j["counts"] = counts;
    j["modal_class"] =
        row.modal_class < report.class_names.size() ? report.class_names[row.modal_class] : std::string("else");
    j["modal_frac"] = row.modal_fraction;
    j["entropy"] = row.entropy;
    j["waveform_variance"] = row.waveform_variance;
    out << j.dump() << '\n';
  }
}

std::string fit_to_json(const RegressionFit& fit) {
  nlohmann::ordered_json j;
  j["kind"] = fit.kind == FitKind::multinomial ? "multinomial" : "binary";
  j["outcome_classes"] = fit.outcome_classes;
  j["coefficients"] = fit.coefficients;
  j["log_likelihood"] = fit.log_likelihood;
  j["k"] = fit.k;
  j["aic"] = fit.aic;
  j["converged"] = fit.converged;
  j["separation"] = fit.separation;
  j["iterations"] = fit.iterations;
  j["n_obs"] = fit.n_obs;
  j["accuracy"] = fit.accuracy;
  if (!fit.note.empty()) j["note"] = fit.note;
  return j.dump(2);
}

}  // namespace lexigan::probe
