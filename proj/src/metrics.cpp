#include "ora/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ora/error.hpp"

namespace ora {
namespace {

void require_scores(std::span<const double> s, const char* what) {
  if (s.empty()) throw Error(Errc::empty_input, std::string(what) + " scores are empty");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (std::isnan(s[i])) {
      throw Error(Errc::non_finite_values,
                  std::string(what) + " score at index " + std::to_string(i) + " is NaN");
    }
  }
}

// ceil(tpr * n), guarded so that 0.95 * 100 style products round to the
// intended integer.
std::size_t required_passes(double tpr, std::size_t n) {
  if (!(tpr > 0.0) || tpr > 1.0) {
    throw Error(Errc::invalid_argument, "tpr " + std::to_string(tpr) + " outside (0, 1]");
  }
  const double exact = tpr * static_cast<double>(n);
  const double k = std::ceil(exact - 1e-9 * std::max(1.0, exact));
  return std::clamp<std::size_t>(static_cast<std::size_t>(k), 1, n);
}

}  // namespace

double choose_threshold(std::span<const double> id_scores, double tpr) {
  require_scores(id_scores, "ID");
  const std::size_t k = required_passes(tpr, id_scores.size());
  std::vector<double> sorted(id_scores.begin(), id_scores.end());
  const auto kth = sorted.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(sorted.begin(), kth, sorted.end(), std::greater<>());
  return *kth;
}

double fpr_at_tpr(std::span<const double> id_scores, std::span<const double> ood_scores,
                  double tpr) {
  require_scores(ood_scores, "OOD");
  const double lambda = choose_threshold(id_scores, tpr);
  const auto passed = std::count_if(ood_scores.begin(), ood_scores.end(),
                                    [&](double s) { return decide(s, lambda) == Decision::id; });
  return static_cast<double>(passed) / static_cast<double>(ood_scores.size());
}

double auroc(std::span<const double> id_scores, std::span<const double> ood_scores) {
  require_scores(id_scores, "ID");
  require_scores(ood_scores, "OOD");
  std::vector<double> id(id_scores.begin(), id_scores.end());
  std::vector<double> ood(ood_scores.begin(), ood_scores.end());
  std::sort(id.begin(), id.end());
  std::sort(ood.begin(), ood.end());

  // Twice the Mann-Whitney U: 2 per (id > ood) pair, 1 per tie.
  std::uint64_t twice_u = 0;
  std::size_t below = 0;  // OOD scores strictly below the current ID value
  std::size_t i = 0;
  while (i < id.size()) {
    const double v = id[i];
    std::size_t j = i;
    while (j < id.size() && id[j] == v) ++j;
    while (below < ood.size() && ood[below] < v) ++below;
    std::size_t upto = below;
    while (upto < ood.size() && ood[upto] == v) ++upto;
    const std::uint64_t group = j - i;
    twice_u += group * (2 * static_cast<std::uint64_t>(below) + (upto - below));
    i = j;
  }
  return static_cast<double>(twice_u) /
         (2.0 * static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

DetectionReport evaluate(std::span<const double> id_scores, std::span<const double> ood_scores,
                         double tpr) {
  DetectionReport r;
  r.lambda = choose_threshold(id_scores, tpr);
  r.fpr95 = fpr_at_tpr(id_scores, ood_scores, tpr);
  r.auroc = auroc(id_scores, ood_scores);
  r.n_id = id_scores.size();
  r.n_ood = ood_scores.size();
  return r;
}

nlohmann::json to_json(const DetectionReport& r) {
  return nlohmann::json{{"method", r.method}, {"id", r.id_name},     {"ood", r.ood_name},
                        {"fpr95", r.fpr95},   {"auroc", r.auroc},    {"lambda", r.lambda},
                        {"n_id", r.n_id},     {"n_ood", r.n_ood}};
}

}  // namespace ora
