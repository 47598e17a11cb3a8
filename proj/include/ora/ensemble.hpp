#pragma once

#include <string>
#include <vector>

#include "ora/matrix.hpp"
#include "ora/metrics.hpp"

namespace ora {

/// K aligned score vectors over the same samples, one per model.
struct ScoreTable {
  std::vector<std::string> model_names;
  std::vector<ScoreVector> scores;
  /// Optional per-model sample ids; when two models both carry ids they must agree.
  std::vector<std::vector<std::string>> sample_ids;

  std::size_t models() const noexcept { return scores.size(); }
};

void validate(const ScoreTable& t);

/// Elementwise sum in model order.
ScoreVector sum_scores(const ScoreTable& t);

enum class EnsembleNormalization { none, zscore };

struct EnsembleConfig {
  double tpr = 0.95;
  EnsembleNormalization normalization = EnsembleNormalization::none;
};

/// Sums each table and evaluates the summed ID vs OOD scores. With zscore,
/// every model's scores are standardized by that model's ID mean and std
/// before summing.
DetectionReport evaluate_ensemble(const ScoreTable& id, const ScoreTable& ood,
                                  const EnsembleConfig& cfg = {});

}  // namespace ora
