#pragma once

// Reference scores: logit-based (MSP, MaxLogit, Energy), boundary-distance
// based (fDBD) and feature k-NN. Higher is more in-distribution everywhere.

#include <cstddef>
#include <span>
#include <string_view>

#include "ora/feature_store.hpp"
#include "ora/geometry.hpp"
#include "ora/matrix.hpp"

namespace ora {

double msp(std::span<const double> logits);
double max_logit(std::span<const double> logits);
/// log-sum-exp of the logits.
double energy(std::span<const double> logits);

/// Mean over contrast classes of d(z, z_db) / ||z - mu||.
double fdbd_score(std::span<const double> z, const LinearHead& head, std::span<const double> mu);

inline constexpr std::size_t kDefaultKnnK = 50;

/// Exact k-NN over an L2-normalized bank of ID features.
class KnnIndex {
 public:
  /// Normalizes each row of `bank`. Throws empty_input on an empty bank,
  /// invalid_argument when k is 0 or larger than the bank, and
  /// degenerate_centering when a bank row has zero norm.
  KnnIndex(const Matrix& bank, std::size_t k);

  /// Wraps rows that are already unit-norm (e.g. a calibrated bank file).
  static KnnIndex from_normalized(Matrix bank, std::size_t k);

  const Matrix& bank() const noexcept { return bank_; }
  std::size_t k() const noexcept { return k_; }

 private:
  KnnIndex() = default;
  Matrix bank_;
  std::size_t k_ = 1;
};

/// Negative Euclidean distance from normalized z to its k-th nearest bank row.
double knn_score(std::span<const double> z, const KnnIndex& index);

enum class Method { ora, fdbd, msp, maxlogit, energy, knn };

std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view name);

BatchScores knn_scores(const FeatureMatrix& x, const KnnIndex& index, Exec exec = Exec::parallel);
BatchScores fdbd_scores(const FeatureMatrix& x, const LinearHead& head, std::span<const double> mu,
                        Exec exec = Exec::parallel);
/// msp / maxlogit / energy over head logits.
BatchScores logit_scores(const FeatureMatrix& x, const LinearHead& head, Method method,
                         Exec exec = Exec::parallel);

}  // namespace ora
