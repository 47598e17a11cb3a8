#include "ora/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ora/error.hpp"

namespace ora {
namespace {

void require_percentile(double p, bool allow_zero, bool allow_hundred) {
  const bool low_ok = allow_zero ? p >= 0.0 : p > 0.0;
  const bool high_ok = allow_hundred ? p <= 100.0 : p < 100.0;
  if (!std::isfinite(p) || !low_ok || !high_ok) {
    throw Error(Errc::invalid_argument, "percentile " + std::to_string(p) + " out of range");
  }
}

std::vector<double> scaled(std::span<const double> z, double s1, double s2) {
  if (!(s2 > kZeroEps)) {
    throw Error(Errc::all_nonpositive, "kept activations sum to " + std::to_string(s2));
  }
  const double factor = std::exp(s1 / s2);
  if (!std::isfinite(factor)) {
    throw Error(Errc::numeric_overflow, "exp(s1/s2) overflows with s1/s2 = " +
                                            std::to_string(s1 / s2));
  }
  std::vector<double> out(z.begin(), z.end());
  for (double& v : out) v *= factor;
  return out;
}

}  // namespace

std::string_view to_string(ShapeMethod m) noexcept {
  switch (m) {
    case ShapeMethod::none: return "none";
    case ShapeMethod::react: return "react";
    case ShapeMethod::ash_s: return "ash";
    case ShapeMethod::scale: return "scale";
  }
  return "unknown";
}

ShapeMethod parse_shape_method(std::string_view name) {
  if (name == "none") return ShapeMethod::none;
  if (name == "react") return ShapeMethod::react;
  if (name == "ash" || name == "ash_s") return ShapeMethod::ash_s;
  if (name == "scale") return ShapeMethod::scale;
  throw Error(Errc::usage, "unknown shaping method '" + std::string(name) + "'");
}

double default_percentile(ShapeMethod m) noexcept {
  switch (m) {
    case ShapeMethod::react: return 80.0;
    case ShapeMethod::ash_s: return 35.0;
    case ShapeMethod::scale: return 90.0;
    case ShapeMethod::none: return 0.0;
  }
  return 0.0;
}

ShapingConfig ShapingConfig::with_defaults(ShapeMethod m) {
  ShapingConfig cfg;
  cfg.method = m;
  cfg.percentile = default_percentile(m);
  return cfg;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(Errc::empty_input, "percentile of an empty set");
  require_percentile(p, true, true);
  std::sort(values.begin(), values.end());
  const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double calibrate_react(const FeatureMatrix& x_id, double p) {
  if (x_id.data.empty()) throw Error(Errc::empty_input, "no ID activations to calibrate ReAct");
  require_percentile(p, false, true);
  const auto v = x_id.data.values();
  return percentile(std::vector<double>(v.begin(), v.end()), p);
}

std::vector<double> apply_react(std::span<const double> z, double clamp) {
  std::vector<double> out(z.begin(), z.end());
  for (double& v : out) v = std::min(v, clamp);
  return out;
}

std::vector<double> apply_ash_s(std::span<const double> z, double p) {
  require_percentile(p, true, false);
  if (z.empty() || std::none_of(z.begin(), z.end(), [](double v) { return v > 0.0; })) {
    throw Error(Errc::all_nonpositive, "ASH needs at least one positive activation");
  }
  const std::size_t n = z.size();
  const double keep_exact = (100.0 - p) * static_cast<double>(n) / 100.0;
  auto keep = static_cast<std::size_t>(std::ceil(keep_exact - 1e-9));
  keep = std::clamp<std::size_t>(keep, 1, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return z[a] > z[b]; });

  double s1 = 0.0;
  for (double v : z) s1 += v;
  std::vector<double> pruned(n, 0.0);
  double s2 = 0.0;
  for (std::size_t i = 0; i < keep; ++i) {
    pruned[order[i]] = z[order[i]];
    s2 += z[order[i]];
  }
  return scaled(pruned, s1, s2);
}

std::vector<double> apply_scale(std::span<const double> z, double p) {
  require_percentile(p, true, false);
  const double threshold = percentile(std::vector<double>(z.begin(), z.end()), p);
  double s1 = 0.0, s2 = 0.0;
  for (double v : z) {
    s1 += v;
    if (v >= threshold) s2 += v;
  }
  return scaled(z, s1, s2);
}

std::vector<double> shape(std::span<const double> z, const ShapingConfig& cfg) {
  switch (cfg.method) {
    case ShapeMethod::none: return {z.begin(), z.end()};
    case ShapeMethod::react:
      if (!cfg.react_clamp) {
        throw Error(Errc::invalid_argument, "ReAct shaping used before calibration");
      }
      return apply_react(z, *cfg.react_clamp);
    case ShapeMethod::ash_s: return apply_ash_s(z, cfg.percentile);
    case ShapeMethod::scale: return apply_scale(z, cfg.percentile);
  }
  return {z.begin(), z.end()};
}

FeatureMatrix shape_features(const FeatureMatrix& x, const ShapingConfig& cfg, Exec exec) {
  FeatureMatrix out;
  out.sample_ids = x.sample_ids;
  if (cfg.method == ShapeMethod::none) {
    out.data = x.data;
    return out;
  }
  out.data = Matrix(x.data.rows(), x.data.cols());
  const auto n = static_cast<long long>(x.data.rows());
  std::vector<int> failed(x.data.rows(), 0);
  std::vector<Errc> codes(x.data.rows(), Errc::invalid_argument);

  const auto shape_row = [&](long long i) {
    const auto r = static_cast<std::size_t>(i);
    try {
      const auto row = shape(x.data.row(r), cfg);
      std::copy(row.begin(), row.end(), out.data.row(r).begin());
    } catch (const Error& e) {
      failed[r] = 1;
      codes[r] = e.code();
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i) shape_row(i);
  } else {
    for (long long i = 0; i < n; ++i) shape_row(i);
  }

  for (std::size_t r = 0; r < failed.size(); ++r) {
    if (failed[r]) {
      throw Error(codes[r], "shaping failed at row " + std::to_string(r) + " (" +
                                std::string(to_string(codes[r])) + ")");
    }
  }
  return out;
}

BatchScores shape_then_score(const FeatureMatrix& x, const LinearHead& head,
                             const Centering& centering, Aggregation agg,
                             const ShapingConfig& cfg) {
  return ora_scores_batch(shape_features(x, cfg), head, centering, agg);
}

ShapedCalibration calibrate_shaped(const FeatureMatrix& x_id, ShapingConfig cfg,
                                   CenteringStrategy strategy,
                                   const std::vector<std::size_t>* labels,
                                   const LinearHead* head, std::size_t class_index,
                                   bool recompute_on_shaped) {
  if (cfg.method == ShapeMethod::react && !cfg.react_clamp) {
    cfg.react_clamp = calibrate_react(x_id, cfg.percentile);
  }
  ShapedCalibration cal;
  cal.config = cfg;
  if (recompute_on_shaped && cfg.method != ShapeMethod::none) {
    cal.centering = compute_centering(shape_features(x_id, cfg), strategy, labels, head, class_index);
  } else {
    cal.centering = compute_centering(x_id, strategy, labels, head, class_index);
  }
  return cal;
}

}  // namespace ora
