#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lexigan::probe {

enum class FitKind { multinomial, binary };

/// Fitted (multinomial) logistic model. Row r of `coefficients` holds the
/// linear predictor of outcome class `outcome_classes[r + 1]` against the
/// reference class `outcome_classes[0]`; column 0 is the intercept.
struct RegressionFit {
  FitKind kind = FitKind::multinomial;
  std::vector<std::size_t> outcome_classes;
  std::vector<std::vector<double>> coefficients;
  double log_likelihood = 0.0;
  std::size_t k = 0;  // free parameters
  double aic = 0.0;   // 2k - 2 logL
  bool converged = false;
  bool separation = false;
  std::size_t iterations = 0;
  std::size_t n_obs = 0;
  double accuracy = 0.0;  // in-sample, predicted class = argmax probability
  std::string note;
};

struct SolverOptions {
  double gradient_tolerance = 1e-8;
  std::size_t max_iterations = 100000;
};

/// Multinomial logistic regression of `outcomes` on a categorical predictor.
/// `predictor` gives each observation's level (level 0 is the reference);
/// without it only intercepts are fitted (the empty model). Outcome classes
/// are the distinct observed labels; the smallest is the reference.
RegressionFit fit_multinomial(std::span<const std::size_t> outcomes,
                              std::optional<std::span<const std::size_t>> predictor = std::nullopt,
                              const SolverOptions& options = {});

/// Binary logistic regression with intercept on row-major `features`
/// [outcomes.size(), num_features]. num_features may be 0.
RegressionFit fit_binary(std::span<const int> outcomes, std::span<const double> features, std::size_t num_features,
                         const SolverOptions& options = {});

/// Softmax regression on an explicit design matrix [n, p] (include the
/// intercept column yourself). Labels must lie in [0, num_classes).
RegressionFit fit_logistic_design(std::span<const std::size_t> labels, std::size_t num_classes,
                                  std::span<const double> design, std::size_t p, const SolverOptions& options);

}  // namespace lexigan::probe
