#include "ora/ensemble.hpp"

#include <cmath>
#include <string>

#include "ora/error.hpp"

namespace ora {

void validate(const ScoreTable& t) {
  if (t.scores.empty()) throw Error(Errc::empty_input, "score table has no models");
  if (!t.model_names.empty() && t.model_names.size() != t.scores.size()) {
    throw Error(Errc::length_mismatch, "model_names and scores disagree in count");
  }
  const std::size_t n = t.scores.front().size();
  for (std::size_t k = 0; k < t.scores.size(); ++k) {
    if (t.scores[k].size() != n) {
      throw Error(Errc::length_mismatch, "model " + std::to_string(k) + " has " +
                                             std::to_string(t.scores[k].size()) +
                                             " scores, model 0 has " + std::to_string(n));
    }
  }
  const std::vector<std::string>* reference = nullptr;
  for (std::size_t k = 0; k < t.sample_ids.size(); ++k) {
    const auto& ids = t.sample_ids[k];
    if (ids.empty()) continue;
    if (ids.size() != n) {
      throw Error(Errc::length_mismatch, "sample_ids of model " + std::to_string(k) +
                                             " do not cover every row");
    }
    if (reference && *reference != ids) {
      throw Error(Errc::length_mismatch,
                  "sample_ids of model " + std::to_string(k) + " are not aligned with earlier models");
    }
    reference = &ids;
  }
}

ScoreVector sum_scores(const ScoreTable& t) {
  validate(t);
  ScoreVector out(t.scores.front().size(), 0.0);
  for (const auto& s : t.scores) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += s[i];
  }
  return out;
}

DetectionReport evaluate_ensemble(const ScoreTable& id, const ScoreTable& ood,
                                  const EnsembleConfig& cfg) {
  validate(id);
  validate(ood);
  if (id.models() != ood.models() ||
      (!id.model_names.empty() && !ood.model_names.empty() && id.model_names != ood.model_names)) {
    throw Error(Errc::model_set_mismatch, "ID and OOD tables list different models");
  }
  if (cfg.normalization == EnsembleNormalization::none) {
    return evaluate(sum_scores(id), sum_scores(ood), cfg.tpr);
  }

  ScoreTable id_std = id;
  ScoreTable ood_std = ood;
  for (std::size_t k = 0; k < id.models(); ++k) {
    const auto& ref = id.scores[k];
    double mean = 0.0;
    for (double v : ref) mean += v;
    mean /= static_cast<double>(ref.size());
    double var = 0.0;
    for (double v : ref) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(ref.size()));
    const double scale = sd > 0.0 ? 1.0 / sd : 1.0;
    for (double& v : id_std.scores[k]) v = (v - mean) * scale;
    for (double& v : ood_std.scores[k]) v = (v - mean) * scale;
  }
  return evaluate(sum_scores(id_std), sum_scores(ood_std), cfg.tpr);
}

}  // namespace ora
