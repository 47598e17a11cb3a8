#include "ora/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ora/error.hpp"

namespace ora {
namespace {

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw Error(Errc::dimension_mismatch, std::string(what) + " has dimension " +
                                              std::to_string(got) + ", expected " +
                                              std::to_string(want));
  }
}

void require_class(std::size_t c, const LinearHead& head) {
  if (c >= head.classes()) {
    throw Error(Errc::invalid_argument, "class " + std::to_string(c) + " out of range for " +
                                            std::to_string(head.classes()) + " classes");
  }
}

std::size_t argmax_logit(std::span<const double> z, const LinearHead& head) noexcept {
  std::size_t best = 0;
  double best_logit = head.logit(0, z);
  for (std::size_t c = 1; c < head.classes(); ++c) {
    const double l = head.logit(c, z);
    if (l > best_logit) {
      best_logit = l;
      best = c;
    }
  }
  return best;
}

// A single square root of the product keeps collinear pairs at exactly cos = 1.
double clamped_angle(double inner, double sq1, double sq2) noexcept {
  const double c = std::clamp(inner / std::sqrt(sq1 * sq2), -1.0, 1.0);
  return std::acos(c);
}

double law_of_sines_alpha(double centered_norm, double theta, double dist) noexcept {
  if (!(dist > kZeroEps)) return 0.0;
  return std::clamp(centered_norm * std::sin(theta) / dist, 0.0, 1.0);
}

}  // namespace

double degenerate_threshold(double norm1, double norm2) noexcept {
  return 1e-12 * std::max(1.0, norm1 + norm2);
}

std::string_view to_string(CenteringStrategy s) noexcept {
  switch (s) {
    case CenteringStrategy::global_mean: return "global_mean";
    case CenteringStrategy::class_mean: return "class_mean";
    case CenteringStrategy::predicted_class_mean: return "predicted_class_mean";
    case CenteringStrategy::elementwise_max: return "elementwise_max";
    case CenteringStrategy::elementwise_min: return "elementwise_min";
    case CenteringStrategy::elementwise_median: return "elementwise_median";
    case CenteringStrategy::origin: return "origin";
  }
  return "unknown";
}

CenteringStrategy parse_centering(std::string_view name) {
  for (auto s : {CenteringStrategy::global_mean, CenteringStrategy::class_mean,
                 CenteringStrategy::predicted_class_mean, CenteringStrategy::elementwise_max,
                 CenteringStrategy::elementwise_min, CenteringStrategy::elementwise_median,
                 CenteringStrategy::origin}) {
    if (name == to_string(s)) return s;
  }
  throw Error(Errc::usage, "unknown centering strategy '" + std::string(name) + "'");
}

std::size_t Centering::dim() const noexcept {
  return strategy == CenteringStrategy::predicted_class_mean ? class_means.cols() : vector.size();
}

std::span<const double> Centering::for_class(std::size_t predicted) const noexcept {
  if (strategy == CenteringStrategy::predicted_class_mean) return class_means.row(predicted);
  return vector;
}

Centering Centering::fixed(std::vector<double> mu, CenteringStrategy s) {
  Centering c;
  c.strategy = s;
  c.vector = std::move(mu);
  return c;
}

std::string_view to_string(Aggregation a) noexcept {
  switch (a) {
    case Aggregation::max: return "max";
    case Aggregation::mean: return "mean";
    case Aggregation::min: return "min";
  }
  return "unknown";
}

Aggregation parse_aggregation(std::string_view name) {
  if (name == "max") return Aggregation::max;
  if (name == "mean") return Aggregation::mean;
  if (name == "min") return Aggregation::min;
  throw Error(Errc::usage, "unknown aggregation '" + std::string(name) + "'");
}

std::size_t predict(std::span<const double> z, const LinearHead& head) {
  require_dim(z.size(), head.dim(), "feature vector");
  return argmax_logit(z, head);
}

BoundaryProjection project_to_boundary(std::span<const double> z, const LinearHead& head,
                                       std::size_t y1, std::size_t y2) {
  require_dim(z.size(), head.dim(), "feature vector");
  require_class(y1, head);
  require_class(y2, head);
  if (y1 == y2) throw Error(Errc::invalid_argument, "boundary needs two distinct classes");

  const auto w1 = head.row(y1);
  const auto w2 = head.row(y2);
  std::vector<double> normal(z.size());
  for (std::size_t d = 0; d < z.size(); ++d) normal[d] = w1[d] - w2[d];
  const double nn = dot(normal, normal);
  if (std::sqrt(nn) <= degenerate_threshold(head.row_norm(y1), head.row_norm(y2))) {
    throw Error(Errc::degenerate_boundary, "classes " + std::to_string(y1) + " and " +
                                               std::to_string(y2) + " share a weight direction");
  }
  const double step = (dot(normal, z) + (head.bias()[y1] - head.bias()[y2])) / nn;

  BoundaryProjection p;
  p.y1 = y1;
  p.y2 = y2;
  p.z_db.resize(z.size());
  for (std::size_t d = 0; d < z.size(); ++d) p.z_db[d] = z[d] - step * normal[d];
  return p;
}

BoundaryProjection project_to_boundary_similarity(std::span<const double> z,
                                                  std::span<const double> e1,
                                                  std::span<const double> e2) {
  require_dim(e1.size(), z.size(), "first class embedding");
  require_dim(e2.size(), z.size(), "second class embedding");
  const double n1 = norm(e1);
  const double n2 = norm(e2);
  if (!(n1 > 0.0) || !(n2 > 0.0)) {
    throw Error(Errc::degenerate_boundary, "class embedding has zero norm");
  }
  std::vector<double> u(z.size());
  for (std::size_t d = 0; d < z.size(); ++d) u[d] = e1[d] / n1 - e2[d] / n2;
  const double nu = norm(u);
  if (nu <= degenerate_threshold(1.0, 1.0)) {
    throw Error(Errc::degenerate_boundary, "class embeddings coincide after normalization");
  }
  for (double& v : u) v /= nu;
  const double along = dot(z, u);

  BoundaryProjection p;
  p.z_db.resize(z.size());
  for (std::size_t d = 0; d < z.size(); ++d) p.z_db[d] = z[d] - along * u[d];
  return p;
}

AngleRecord relative_angle(std::span<const double> z, std::span<const double> z_db,
                           std::span<const double> mu) {
  require_dim(z_db.size(), z.size(), "projection");
  require_dim(mu.size(), z.size(), "centering vector");
  double inner = 0.0, zz = 0.0, qq = 0.0, dd = 0.0;
  for (std::size_t d = 0; d < z.size(); ++d) {
    const double a = z[d] - mu[d];
    const double q = z_db[d] - mu[d];
    const double s = z[d] - z_db[d];
    inner += a * q;
    zz += a * a;
    qq += q * q;
    dd += s * s;
  }
  const double za = std::sqrt(zz);
  const double qa = std::sqrt(qq);
  if (za <= kZeroEps || qa <= kZeroEps) {
    throw Error(Errc::degenerate_centering, "feature or its projection coincides with the centering point");
  }
  AngleRecord r;
  r.theta = clamped_angle(inner, zz, qq);
  r.distance = std::sqrt(dd);
  r.alpha_sine = law_of_sines_alpha(za, r.theta, r.distance);
  return r;
}

namespace detail {

SampleGeometry sample_geometry(std::span<const double> z, const LinearHead& head,
                               const Centering& centering, Aggregation agg) noexcept {
  SampleGeometry g;
  const std::size_t dim = head.dim();
  if (z.size() != dim || centering.dim() != dim) {
    g.status = Errc::dimension_mismatch;
    return g;
  }
  g.predicted = argmax_logit(z, head);
  const auto mu = centering.for_class(g.predicted);

  double centered_sq = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    const double a = z[d] - mu[d];
    centered_sq += a * a;
  }
  const double centered_norm = std::sqrt(centered_sq);
  if (centered_norm <= kZeroEps) {
    g.status = Errc::degenerate_centering;
    return g;
  }

  const auto w_hat = head.row(g.predicted);
  const double b_hat = head.bias()[g.predicted];
  double best = -std::numeric_limits<double>::infinity();
  double lowest = std::numeric_limits<double>::infinity();
  double total = 0.0;

  for (std::size_t c = 0; c < head.classes(); ++c) {
    if (c == g.predicted) continue;
    const auto w_c = head.row(c);

    // Normal n = w_hat - w_c; z_db = z - t n with t = (n.z + db) / ||n||^2.
    double nn = 0.0, nz = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double n = w_hat[d] - w_c[d];
      nn += n * n;
      nz += n * z[d];
    }
    const double n_norm = std::sqrt(nn);
    if (n_norm <= degenerate_threshold(head.row_norm(g.predicted), head.row_norm(c))) continue;
    const double t = (nz + (b_hat - head.bias()[c])) / nn;

    double inner = 0.0, proj_sq = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double a = z[d] - mu[d];
      const double q = a - t * (w_hat[d] - w_c[d]);
      inner += a * q;
      proj_sq += q * q;
    }
    const double proj_norm = std::sqrt(proj_sq);
    if (proj_norm <= kZeroEps) {
      g.status = Errc::degenerate_centering;
      return g;
    }

    const double theta = clamped_angle(inner, centered_sq, proj_sq);
    ++g.valid_pairs;
    total += theta;
    lowest = std::min(lowest, theta);
    if (theta >= best) {
      best = theta;
      g.distance_at_max = std::abs(t) * n_norm;
      g.alpha_sine_at_max = law_of_sines_alpha(centered_norm, theta, g.distance_at_max);
    }
  }

  if (g.valid_pairs == 0) {
    g.status = Errc::all_degenerate;
    return g;
  }
  g.max_theta = best;
  switch (agg) {
    case Aggregation::max: g.score = best; break;
    case Aggregation::mean: g.score = total / static_cast<double>(g.valid_pairs); break;
    case Aggregation::min: g.score = lowest; break;
  }
  g.ok = true;
  return g;
}

}  // namespace detail

double ora_score(std::span<const double> z, const LinearHead& head, const Centering& centering,
                 Aggregation agg) {
  require_dim(z.size(), head.dim(), "feature vector");
  require_dim(centering.dim(), head.dim(), "centering vector");
  const auto g = detail::sample_geometry(z, head, centering, agg);
  if (!g.ok) {
    throw Error(g.status, "cannot score sample: " + std::string(to_string(g.status)));
  }
  return g.score;
}

double boundary_distance(std::span<const double> z, const LinearHead& head) {
  const std::size_t pred = predict(z, head);
  const double l_hat = head.logit(pred, z);
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t c = 0; c < head.classes(); ++c) {
    if (c == pred) continue;
    const auto w_hat = head.row(pred);
    const auto w_c = head.row(c);
    double nn = 0.0;
    for (std::size_t d = 0; d < z.size(); ++d) {
      const double n = w_hat[d] - w_c[d];
      nn += n * n;
    }
    const double n_norm = std::sqrt(nn);
    if (n_norm <= degenerate_threshold(head.row_norm(pred), head.row_norm(c))) continue;
    any = true;
    best = std::min(best, std::abs(l_hat - head.logit(c, z)) / n_norm);
  }
  if (!any) throw Error(Errc::all_degenerate, "every class pair is degenerate");
  return best;
}

Centering compute_centering(const FeatureMatrix& x_id, CenteringStrategy strategy,
                            const std::vector<std::size_t>* labels, const LinearHead* head,
                            std::size_t class_index) {
  const std::size_t n = x_id.data.rows();
  const std::size_t dim = x_id.data.cols();
  if (n == 0) throw Error(Errc::empty_input, "no ID features to compute a centering from");

  Centering out;
  out.strategy = strategy;
  const auto column_mean_over = [&](auto&& include) {
    std::vector<double> sum(dim, 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!include(i)) continue;
      const auto row = x_id.data.row(i);
      for (std::size_t d = 0; d < dim; ++d) sum[d] += row[d];
      ++count;
    }
    if (count > 0) {
      for (double& v : sum) v /= static_cast<double>(count);
    }
    return std::pair{sum, count};
  };

  switch (strategy) {
    case CenteringStrategy::global_mean:
      out.vector = column_mean_over([](std::size_t) { return true; }).first;
      break;
    case CenteringStrategy::class_mean: {
      if (labels == nullptr) throw Error(Errc::missing_labels, "class_mean centering needs labels");
      if (labels->size() != n) {
        throw Error(Errc::length_mismatch, "labels length " + std::to_string(labels->size()) +
                                               " does not match " + std::to_string(n) + " rows");
      }
      auto [mean, count] =
          column_mean_over([&](std::size_t i) { return (*labels)[i] == class_index; });
      if (count == 0) {
        throw Error(Errc::empty_class, "no ID rows with label " + std::to_string(class_index));
      }
      out.vector = std::move(mean);
      out.class_index = class_index;
      break;
    }
    case CenteringStrategy::predicted_class_mean: {
      if (head == nullptr) {
        throw Error(Errc::invalid_argument, "predicted_class_mean centering needs a head");
      }
      require_dim(dim, head->dim(), "ID features");
      std::vector<std::size_t> pred(n);
      for (std::size_t i = 0; i < n; ++i) pred[i] = argmax_logit(x_id.data.row(i), *head);
      out.class_means = Matrix(head->classes(), dim);
      for (std::size_t c = 0; c < head->classes(); ++c) {
        auto [mean, count] = column_mean_over([&](std::size_t i) { return pred[i] == c; });
        if (count == 0) {
          throw Error(Errc::empty_class, "no ID rows predicted as class " + std::to_string(c));
        }
        std::copy(mean.begin(), mean.end(), out.class_means.row(c).begin());
      }
      break;
    }
    case CenteringStrategy::elementwise_max:
    case CenteringStrategy::elementwise_min: {
      const bool is_max = strategy == CenteringStrategy::elementwise_max;
      out.vector.assign(x_id.data.row(0).begin(), x_id.data.row(0).end());
      for (std::size_t i = 1; i < n; ++i) {
        const auto row = x_id.data.row(i);
        for (std::size_t d = 0; d < dim; ++d) {
          out.vector[d] = is_max ? std::max(out.vector[d], row[d]) : std::min(out.vector[d], row[d]);
        }
      }
      break;
    }
    case CenteringStrategy::elementwise_median: {
      out.vector.resize(dim);
      std::vector<double> column(n);
      for (std::size_t d = 0; d < dim; ++d) {
        for (std::size_t i = 0; i < n; ++i) column[i] = x_id.data(i, d);
        std::sort(column.begin(), column.end());
        out.vector[d] = n % 2 == 1 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
      }
      break;
    }
    case CenteringStrategy::origin:
      out.vector.assign(dim, 0.0);
      break;
  }
  return out;
}

}  // namespace ora
