#include "lexigan/probe/regression.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include "lexigan/errors.hpp"

namespace lexigan::probe {

namespace {

struct Problem {
  std::span<const std::size_t> labels;
  std::size_t K;
  std::span<const double> X;
  std::size_t p;

  std::size_t n() const { return labels.size(); }

  // Negative log-likelihood and its gradient w.r.t. W [(K-1) x p].
  double evaluate(const std::vector<double>& W, std::vector<double>* grad) const {
    if (grad) grad->assign(W.size(), 0.0);
    std::vector<double> eta(K), prob(K);
    double nll = 0.0;
    for (std::size_t i = 0; i < n(); ++i) {
      const double* x = X.data() + i * p;
      eta[0] = 0.0;
      for (std::size_t k = 1; k < K; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < p; ++j) s += W[(k - 1) * p + j] * x[j];
        eta[k] = s;
      }
      const double mx = *std::max_element(eta.begin(), eta.end());
      double z = 0.0;
      for (std::size_t k = 0; k < K; ++k) z += std::exp(eta[k] - mx);
      const double lse = mx + std::log(z);
      nll -= eta[labels[i]] - lse;
      if (grad) {
        for (std::size_t k = 1; k < K; ++k) {
          const double r = std::exp(eta[k] - lse) - (labels[i] == k ? 1.0 : 0.0);
          for (std::size_t j = 0; j < p; ++j) (*grad)[(k - 1) * p + j] += r * x[j];
        }
      }
    }
    return nll;
  }

  std::vector<double> probabilities(const std::vector<double>& W, std::size_t i) const {
    const double* x = X.data() + i * p;
    std::vector<double> eta(K, 0.0);
    for (std::size_t k = 1; k < K; ++k)
      for (std::size_t j = 0; j < p; ++j) eta[k] += W[(k - 1) * p + j] * x[j];
    const double mx = *std::max_element(eta.begin(), eta.end());
    double z = 0.0;
    for (auto& e : eta) z += (e = std::exp(e - mx));
    for (auto& e : eta) e /= z;
    return eta;
  }
};

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

RegressionFit fit_logistic_design(std::span<const std::size_t> labels, std::size_t num_classes,
                                  std::span<const double> design, std::size_t p, const SolverOptions& options) {
  if (num_classes < 2) throw ValidationError("logistic regression needs at least two outcome classes");
  if (labels.empty()) throw ValidationError("logistic regression needs observations");
  if (p == 0 || design.size() != labels.size() * p) throw ValidationError("design matrix has the wrong size");
  for (auto y : labels)
    if (y >= num_classes) throw ValidationError("outcome label " + std::to_string(y) + " out of range");

  const Problem prob{labels, num_classes, design, p};
  std::vector<double> W((num_classes - 1) * p, 0.0), grad, trial, trial_grad;
  double f = prob.evaluate(W, &grad);
  double step = 1.0 / static_cast<double>(labels.size());
  // Nonmonotone Armijo test against the worst of the last few objective values,
  // with Barzilai-Borwein trial steps.
  constexpr std::size_t kMemory = 10;
  std::deque<double> recent{f};

  RegressionFit fit;
  std::size_t it = 0;
  for (; it < options.max_iterations; ++it) {
    if (max_abs(grad) < options.gradient_tolerance) {
      fit.converged = true;
      break;
    }
    double gg = 0.0;
    for (double g : grad) gg += g * g;
    const double reference = *std::max_element(recent.begin(), recent.end());
    bool moved = false;
    while (step > 1e-300) {
      trial = W;
      for (std::size_t j = 0; j < W.size(); ++j) trial[j] -= step * grad[j];
      const double ft = prob.evaluate(trial, &trial_grad);
      if (std::isfinite(ft) && ft <= reference - 1e-4 * step * gg) {
        double sy = 0.0, ss = 0.0;
        for (std::size_t j = 0; j < W.size(); ++j) {
          const double sj = trial[j] - W[j];
          sy += sj * (trial_grad[j] - grad[j]);
          ss += sj * sj;
        }
        W.swap(trial);
        grad.swap(trial_grad);
        f = ft;
        step = sy > 0.0 ? std::clamp(ss / sy, 1e-12, 1e12) : step * 2.0;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;  // no decrease possible at machine precision
    recent.push_back(f);
    if (recent.size() > kMemory) recent.pop_front();
  }

  fit.iterations = it;
  fit.n_obs = labels.size();
  fit.log_likelihood = -f;
  fit.k = W.size();
  fit.aic = 2.0 * static_cast<double>(fit.k) - 2.0 * fit.log_likelihood;
  fit.coefficients.assign(num_classes - 1, std::vector<double>(p));
  for (std::size_t k = 0; k + 1 < num_classes; ++k)
    for (std::size_t j = 0; j < p; ++j) fit.coefficients[k][j] = W[k * p + j];

  std::size_t hits = 0;
  double worst_fit = 1.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto pr = prob.probabilities(W, i);
    const auto arg = static_cast<std::size_t>(std::max_element(pr.begin(), pr.end()) - pr.begin());
    if (arg == labels[i]) ++hits;
    worst_fit = std::min(worst_fit, pr[labels[i]]);
  }
  fit.accuracy = static_cast<double>(hits) / static_cast<double>(labels.size());
  if (worst_fit > 1.0 - 1e-6) {
    // Every observation fitted with certainty: the likelihood has no finite
    // maximiser and the coefficients only stopped because the gradient underflowed.
    fit.separation = true;
    fit.converged = false;
    fit.note = "complete separation: coefficients diverge";
  } else if (!fit.converged) {
    fit.note = "gradient tolerance not reached after " + std::to_string(it) + " iterations";
  }
  return fit;
}

RegressionFit fit_multinomial(std::span<const std::size_t> outcomes,
                              std::optional<std::span<const std::size_t>> predictor, const SolverOptions& options) {
  if (outcomes.empty()) throw ValidationError("fit_multinomial: no observations");
  std::map<std::size_t, std::size_t> class_index;
  for (auto y : outcomes) class_index.emplace(y, 0);
  if (class_index.size() < 2) throw ValidationError("fit_multinomial: needs at least two observed outcome classes");
  std::vector<std::size_t> classes;
  for (auto& [label, idx] : class_index) {
    idx = classes.size();
    classes.push_back(label);
  }
  std::vector<std::size_t> labels;
  labels.reserve(outcomes.size());
  for (auto y : outcomes) labels.push_back(class_index[y]);

  std::size_t levels = 1;
  if (predictor) {
    if (predictor->size() != outcomes.size()) throw ValidationError("fit_multinomial: predictor length mismatch");
    for (auto l : *predictor) levels = std::max(levels, l + 1);
    if (levels < 2) throw ValidationError("fit_multinomial: predictor needs at least two levels");
  }
  const std::size_t p = levels;  // intercept + (levels - 1) indicators
  std::vector<double> X(outcomes.size() * p, 0.0);
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    X[i * p] = 1.0;
    if (predictor && (*predictor)[i] > 0) X[i * p + (*predictor)[i]] = 1.0;
  }
  auto fit = fit_logistic_design(labels, classes.size(), X, p, options);
  fit.kind = FitKind::multinomial;
  fit.outcome_classes = std::move(classes);
  return fit;
}

RegressionFit fit_binary(std::span<const int> outcomes, std::span<const double> features, std::size_t num_features,
                         const SolverOptions& options) {
  if (outcomes.empty()) throw ValidationError("fit_binary: no observations");
  if (features.size() != outcomes.size() * num_features) throw ValidationError("fit_binary: feature matrix size mismatch");
  std::vector<std::size_t> labels;
  labels.reserve(outcomes.size());
  for (int y : outcomes) {
    if (y != 0 && y != 1) throw ValidationError("fit_binary: outcomes must be 0 or 1, got " + std::to_string(y));
    labels.push_back(static_cast<std::size_t>(y));
  }
  const std::size_t p = num_features + 1;
  std::vector<double> X(outcomes.size() * p);
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    X[i * p] = 1.0;
    for (std::size_t j = 0; j < num_features; ++j) X[i * p + 1 + j] = features[i * num_features + j];
  }
  auto fit = fit_logistic_design(labels, 2, X, p, options);
  fit.kind = FitKind::binary;
  fit.outcome_classes = {0, 1};
  return fit;
}

}  // namespace lexigan::probe
