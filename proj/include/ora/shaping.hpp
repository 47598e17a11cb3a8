#pragma once

// Activation shaping applied to features before scoring: ReAct clamping,
// ASH-S prune-and-scale, and Scale.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ora/feature_store.hpp"
#include "ora/geometry.hpp"

namespace ora {

enum class ShapeMethod { none, react, ash_s, scale };

std::string_view to_string(ShapeMethod m) noexcept;
/// Accepts "none", "react", "ash" / "ash_s", "scale".
ShapeMethod parse_shape_method(std::string_view name);

/// Default percentiles: ReAct 80, ASH 35, Scale 90.
double default_percentile(ShapeMethod m) noexcept;

struct ShapingConfig {
  ShapeMethod method = ShapeMethod::none;
  double percentile = 0.0;
  std::optional<double> react_clamp;  // set by calibrate_react

  static ShapingConfig with_defaults(ShapeMethod m);
};

/// Linear interpolation between closest ranks: rank p/100 * (n - 1).
double percentile(std::vector<double> values, double p);

/// Percentile of the flattened ID activations.
double calibrate_react(const FeatureMatrix& x_id, double percentile = 80.0);

std::vector<double> apply_react(std::span<const double> z, double clamp);
/// Keeps the ceil((100 - p)% * D) largest entries (lower index wins ties),
/// zeroes the rest and scales the kept ones by exp(s1 / s2).
std::vector<double> apply_ash_s(std::span<const double> z, double percentile);
/// Multiplies z by exp(s1 / s2) where s2 sums the entries at or above the
/// per-sample percentile.
std::vector<double> apply_scale(std::span<const double> z, double percentile);

std::vector<double> shape(std::span<const double> z, const ShapingConfig& cfg);

/// Row-wise shaping. Throws on the first row that cannot be shaped, naming it.
FeatureMatrix shape_features(const FeatureMatrix& x, const ShapingConfig& cfg,
                             Exec exec = Exec::parallel);

/// Shapes the rows and scores the result with ORA. `centering` is expected
/// to come from shaped ID features (see shaped_centering).
BatchScores shape_then_score(const FeatureMatrix& x, const LinearHead& head,
                             const Centering& centering, Aggregation agg,
                             const ShapingConfig& cfg);

/// Calibrates ReAct on x_id when needed, then computes the centering on the
/// shaped ID features. With recompute_on_shaped = false the unshaped
/// features define the centering.
struct ShapedCalibration {
  ShapingConfig config;
  Centering centering;
};

ShapedCalibration calibrate_shaped(const FeatureMatrix& x_id, ShapingConfig cfg,
                                   CenteringStrategy strategy,
                                   const std::vector<std::size_t>* labels = nullptr,
                                   const LinearHead* head = nullptr,
                                   std::size_t class_index = 0,
                                   bool recompute_on_shaped = true);

}  // namespace ora
