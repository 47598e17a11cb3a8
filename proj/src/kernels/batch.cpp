// Batch scoring kernels. Every kernel evaluates the same per-row function
// as its scalar counterpart; Exec only selects the OpenMP or plain loop.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kernels/row_driver.hpp"
#include "ora/baselines.hpp"
#include "ora/error.hpp"
#include "ora/geometry.hpp"

namespace ora {
namespace {

void require_same_dim(std::size_t features, std::size_t other, const char* what) {
  if (features != other) {
    throw Error(Errc::dimension_mismatch, "features have dimension " + std::to_string(features) +
                                              " but " + what + " has " + std::to_string(other));
  }
}

}  // namespace

BatchScores ora_scores_batch(const FeatureMatrix& x, const LinearHead& head,
                             const Centering& centering, Aggregation agg, Exec exec) {
  require_same_dim(x.dim(), head.dim(), "the head");
  require_same_dim(x.dim(), centering.dim(), "the centering vector");
  std::vector<kernels::RowValue> rows;
  kernels::run_rows(x.size(), exec, rows, [&](std::size_t i) {
    const auto g = detail::sample_geometry(x.data.row(i), head, centering, agg);
    return g.ok ? kernels::RowValue::success(g.score) : kernels::RowValue::failure(g.status);
  });
  return kernels::collect(rows, "ora scoring");
}

BatchScores alpha_sine_scores(const FeatureMatrix& x, const LinearHead& head,
                              const Centering& centering, Exec exec) {
  require_same_dim(x.dim(), head.dim(), "the head");
  require_same_dim(x.dim(), centering.dim(), "the centering vector");
  std::vector<kernels::RowValue> rows;
  kernels::run_rows(x.size(), exec, rows, [&](std::size_t i) {
    const auto g = detail::sample_geometry(x.data.row(i), head, centering, Aggregation::max);
    return g.ok ? kernels::RowValue::success(g.alpha_sine_at_max)
                : kernels::RowValue::failure(g.status);
  });
  return kernels::collect(rows, "sin(alpha) diagnostic");
}

BatchScores boundary_distances(const FeatureMatrix& x, const LinearHead& head, Exec exec) {
  require_same_dim(x.dim(), head.dim(), "the head");
  std::vector<kernels::RowValue> rows;
  kernels::run_rows(x.size(), exec, rows, [&](std::size_t i) {
    return kernels::RowValue::success(boundary_distance(x.data.row(i), head));
  });
  return kernels::collect(rows, "boundary distance");
}

DistanceSummary boundary_distance_stats(const FeatureMatrix& x, const LinearHead& head,
                                        Exec exec) {
  const auto b = boundary_distances(x, head, exec);
  DistanceSummary s;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (double v : b.scores) {
    if (std::isnan(v)) continue;
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    ++s.count;
  }
  s.mean = sum / static_cast<double>(s.count);
  double var = 0.0;
  for (double v : b.scores) {
    if (std::isnan(v)) continue;
    var += (v - s.mean) * (v - s.mean);
  }
  s.std = std::sqrt(var / static_cast<double>(s.count));
  return s;
}

BatchScores knn_scores(const FeatureMatrix& x, const KnnIndex& index, Exec exec) {
  require_same_dim(x.dim(), index.bank().cols(), "the k-NN bank");
  std::vector<kernels::RowValue> rows;
  kernels::run_rows(x.size(), exec, rows, [&](std::size_t i) {
    return kernels::RowValue::success(knn_score(x.data.row(i), index));
  });
  return kernels::collect(rows, "knn scoring");
}

BatchScores fdbd_scores(const FeatureMatrix& x, const LinearHead& head, std::span<const double> mu,
                        Exec exec) {
  require_same_dim(x.dim(), head.dim(), "the head");
  require_same_dim(x.dim(), mu.size(), "the centering vector");
  std::vector<kernels::RowValue> rows;
  kernels::run_rows(x.size(), exec, rows, [&](std::size_t i) {
    return kernels::RowValue::success(fdbd_score(x.data.row(i), head, mu));
  });
  return kernels::collect(rows, "fdbd scoring");
}

BatchScores logit_scores(const FeatureMatrix& x, const LinearHead& head, Method method,
                         Exec exec) {
  require_same_dim(x.dim(), head.dim(), "the head");
  double (*score)(std::span<const double>) = nullptr;
  switch (method) {
    case Method::msp: score = &msp; break;
    case Method::maxlogit: score = &max_logit; break;
    case Method::energy: score = &energy; break;
    default:
      throw Error(Errc::invalid_argument,
                  "method '" + std::string(to_string(method)) + "' is not logit-based");
  }
  std::vector<kernels::RowValue> rows;
  kernels::run_rows(x.size(), exec, rows, [&](std::size_t i) {
    std::vector<double> logits(head.classes());
    head.logits(x.data.row(i), logits);
    return kernels::RowValue::success(score(logits));
  });
  return kernels::collect(rows, "logit scoring");
}

}  // namespace ora
