#pragma once

#include <cstddef>
#include <span>
#include <string>

#include <nlohmann/json_fwd.hpp>

namespace ora {

enum class Decision { id, ood };

/// The ceil(tpr * n)-th largest ID score: the largest lambda admitting at
/// least that many ID samples under score >= lambda.
double choose_threshold(std::span<const double> id_scores, double tpr = 0.95);

inline Decision decide(double score, double lambda) noexcept {
  return score >= lambda ? Decision::id : Decision::ood;
}

/// Fraction of OOD scores >= the threshold chosen on the ID scores.
double fpr_at_tpr(std::span<const double> id_scores, std::span<const double> ood_scores,
                  double tpr = 0.95);

/// P(id > ood) + 0.5 P(id == ood), by sorting and tie-group counting.
double auroc(std::span<const double> id_scores, std::span<const double> ood_scores);

struct DetectionReport {
  std::string method;
  std::string id_name;
  std::string ood_name;
  double fpr95 = 0.0;
  double auroc = 0.0;
  double lambda = 0.0;
  std::size_t n_id = 0;
  std::size_t n_ood = 0;
};

DetectionReport evaluate(std::span<const double> id_scores, std::span<const double> ood_scores,
                         double tpr = 0.95);

nlohmann::json to_json(const DetectionReport& r);

}  // namespace ora
