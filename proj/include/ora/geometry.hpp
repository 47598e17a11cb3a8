#pragma once

// Decision-boundary geometry for linear heads: projections onto pairwise
// boundaries, the relative angle seen from a centering point, and the ORA
// score built on top of them.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ora/error.hpp"
#include "ora/feature_store.hpp"
#include "ora/matrix.hpp"

namespace ora {

/// Threshold below which ||z - mu|| or ||z_db - mu|| counts as zero.
inline constexpr double kZeroEps = 1e-12;

/// Pair threshold: ||w1 - w2|| <= 1e-12 * max(1, ||w1|| + ||w2||) is degenerate.
double degenerate_threshold(double norm1, double norm2) noexcept;

enum class CenteringStrategy {
  global_mean,
  class_mean,
  predicted_class_mean,
  elementwise_max,
  elementwise_min,
  elementwise_median,
  origin,
};

std::string_view to_string(CenteringStrategy s) noexcept;
/// Throws Error(usage) on an unknown name.
CenteringStrategy parse_centering(std::string_view name);

/// Reference point for the relative angle. predicted_class_mean keeps one
/// mean per class and picks the row of the predicted class at scoring time;
/// every other strategy uses a single vector.
struct Centering {
  CenteringStrategy strategy = CenteringStrategy::global_mean;
  std::vector<double> vector;
  Matrix class_means;  // C x D, only for predicted_class_mean
  std::size_t class_index = 0;  // only for class_mean

  std::size_t dim() const noexcept;
  std::span<const double> for_class(std::size_t predicted) const noexcept;

  static Centering fixed(std::vector<double> mu,
                         CenteringStrategy s = CenteringStrategy::global_mean);
};

enum class Aggregation { max, mean, min };

std::string_view to_string(Aggregation a) noexcept;
Aggregation parse_aggregation(std::string_view name);

struct BoundaryProjection {
  std::vector<double> z_db;
  std::size_t y1 = 0;
  std::size_t y2 = 0;
};

struct AngleRecord {
  double theta = 0.0;       // radians, [0, pi]
  double alpha_sine = 0.0;  // sine of the angle at the projected vertex
  double distance = 0.0;    // ||z - z_db||
};

/// argmax_c of the logits; ties go to the lowest class index.
std::size_t predict(std::span<const double> z, const LinearHead& head);

BoundaryProjection project_to_boundary(std::span<const double> z, const LinearHead& head,
                                       std::size_t y1, std::size_t y2);

/// Boundary between two class embeddings under inner-product scoring:
/// z_db = z - <z, u> u with u = (e1 - e2) / ||e1 - e2||.
BoundaryProjection project_to_boundary_similarity(std::span<const double> z,
                                                  std::span<const double> e1,
                                                  std::span<const double> e2);

/// Angle at mu between z - mu and z_db - mu. alpha_sine comes from the law
/// of sines in the triangle {mu, z, z_db}, and is 0 when z == z_db.
AngleRecord relative_angle(std::span<const double> z, std::span<const double> z_db,
                           std::span<const double> mu);

double ora_score(std::span<const double> z, const LinearHead& head, const Centering& centering,
                 Aggregation agg = Aggregation::max);

/// Per-sample scores plus the rows that could not be scored. Failed rows
/// hold NaN in `scores`.
struct BatchScores {
  struct RowError {
    std::size_t row;
    Errc code;
  };
  ScoreVector scores;
  std::vector<RowError> errors;
};

enum class Exec { serial, parallel };

/// Throws only when every row fails.
BatchScores ora_scores_batch(const FeatureMatrix& x, const LinearHead& head,
                             const Centering& centering, Aggregation agg = Aggregation::max,
                             Exec exec = Exec::parallel);

/// labels are required for class_mean, head for predicted_class_mean.
Centering compute_centering(const FeatureMatrix& x_id, CenteringStrategy strategy,
                            const std::vector<std::size_t>* labels = nullptr,
                            const LinearHead* head = nullptr, std::size_t class_index = 0);

struct DistanceSummary {
  double mean = 0.0;
  double std = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

/// Distance from z to the nearest boundary of its predicted class.
double boundary_distance(std::span<const double> z, const LinearHead& head);

BatchScores boundary_distances(const FeatureMatrix& x, const LinearHead& head,
                               Exec exec = Exec::parallel);

DistanceSummary boundary_distance_stats(const FeatureMatrix& x, const LinearHead& head,
                                        Exec exec = Exec::parallel);

/// sin(alpha) of the max-angle pair for each row; diagnostic only.
BatchScores alpha_sine_scores(const FeatureMatrix& x, const LinearHead& head,
                              const Centering& centering, Exec exec = Exec::parallel);

namespace detail {

/// Everything the per-sample ORA pass produces, computed without throwing.
struct SampleGeometry {
  Errc status = Errc::invalid_argument;
  bool ok = false;
  std::size_t predicted = 0;
  double score = 0.0;           // aggregated theta
  double max_theta = 0.0;
  double alpha_sine_at_max = 0.0;
  double distance_at_max = 0.0;
  std::size_t valid_pairs = 0;
};

SampleGeometry sample_geometry(std::span<const double> z, const LinearHead& head,
                               const Centering& centering, Aggregation agg) noexcept;

}  // namespace detail

}  // namespace ora
