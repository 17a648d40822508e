#include "lexigan/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "lexigan/autodiff/ops.hpp"
#include "lexigan/autodiff/tape.hpp"

namespace lexigan::ad {

GradCheckResult check_gradients(const std::function<Tensor<double>()>& loss, std::span<Tensor<double>> params,
                                std::span<const std::string> names, GradCheckOptions options) {
  for (auto& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  std::optional<testing::ActivationPattern> pattern;
  if (options.pin_activations) {
    pattern.emplace();
    pattern->record();
  }
  backward(loss());

  GradCheckResult result;
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& p = params[t];
    std::vector<double> analytic(p.size(), 0.0);
    if (p.has_grad()) std::copy(p.grad().begin(), p.grad().end(), analytic.begin());
    double scale = 0.0;
    for (double a : analytic) scale = std::max(scale, std::abs(a));
    const double floor = std::max(options.floor_fraction * scale, 1e-12);

    std::vector<std::size_t> picks;
    const std::size_t n = p.size();
    const std::size_t want = options.max_entries_per_tensor == 0 ? n : std::min(n, options.max_entries_per_tensor);
    for (std::size_t k = 0; k < want; ++k) picks.push_back(want == n ? k : (k * n) / want + (n / want) / 2);

    auto data = p.mutable_data();
    for (std::size_t idx : picks) {
      const double saved = data[idx];
      data[idx] = saved + options.epsilon;
      if (pattern) pattern->replay();
      const double up = loss().item();
      data[idx] = saved - options.epsilon;
      if (pattern) pattern->replay();
      const double down = loss().item();
      data[idx] = saved;
      const double numeric = (up - down) / (2.0 * options.epsilon);
      const double denom = std::max({std::abs(analytic[idx]), std::abs(numeric), floor});
      const double rel = std::abs(analytic[idx] - numeric) / denom;
      ++result.entries_checked;
      if (rel > result.max_rel_error || result.worst.empty()) {
        result.max_rel_error = std::max(rel, result.max_rel_error);
        std::ostringstream os;
        os << (t < names.size() ? names[t] : "param" + std::to_string(t)) << '[' << idx << "]: analytic "
           << analytic[idx] << " vs numeric " << numeric;
        if (rel >= result.max_rel_error) result.worst = os.str();
      }
    }
  }
  for (auto& p : params) p.zero_grad();
  return result;
}

}  // namespace lexigan::ad
