#include "ora/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

#include "ora/error.hpp"

namespace ora::synth {

WorldSpec canonical_spec() { return WorldSpec{}; }

void validate(const WorldSpec& s) {
  const auto fail = [](const std::string& m) { throw Error(Errc::invalid_spec, m); };
  if (s.dim < 2) fail("dim must be >= 2");
  if (s.classes < 2) fail("classes must be >= 2");
  if (s.classes > s.dim) fail("classes must not exceed dim (class means are orthogonal)");
  if (!(s.radius > 0.0) || !std::isfinite(s.radius)) fail("radius must be positive");
  if (!(s.sigma_id > 0.0) || !std::isfinite(s.sigma_id)) fail("sigma_id must be positive");
  if (!(s.delta >= 0.0) || !std::isfinite(s.delta)) fail("delta must be non-negative");
  if (s.n_train < 1 || s.n_test < 1 || s.n_ood < 1) fail("sample counts must be >= 1");
}

nlohmann::json to_json(const WorldSpec& s) {
  return nlohmann::json{{"dim", s.dim},         {"classes", s.classes}, {"radius", s.radius},
                        {"sigma_id", s.sigma_id}, {"delta", s.delta},   {"n_train", s.n_train},
                        {"n_test", s.n_test},   {"n_ood", s.n_ood},     {"seed", s.seed}};
}

WorldSpec spec_from_json(const nlohmann::json& j) {
  WorldSpec s;
  try {
    s.dim = j.value("dim", s.dim);
    s.classes = j.value("classes", s.classes);
    s.radius = j.value("radius", s.radius);
    s.sigma_id = j.value("sigma_id", s.sigma_id);
    s.delta = j.value("delta", s.delta);
    s.n_train = j.value("n_train", s.n_train);
    s.n_test = j.value("n_test", s.n_test);
    s.n_ood = j.value("n_ood", s.n_ood);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_spec, e.what());
  }
  return s;
}

double Rng::uniform() noexcept {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::size_t Rng::index(std::size_t n) noexcept {
  return std::min(static_cast<std::size_t>(uniform() * static_cast<double>(n)), n - 1);
}

namespace {

Matrix orthonormal_directions(std::size_t count, std::size_t dim, Rng& rng) {
  Matrix q(count, dim);
  for (std::size_t c = 0; c < count; ++c) {
    auto row = q.row(c);
    for (;;) {
      for (double& v : row) v = rng.normal();
      // Modified Gram-Schmidt against the rows already accepted.
      for (std::size_t p = 0; p < c; ++p) {
        const double proj = dot(row, q.row(p));
        const auto prev = q.row(p);
        for (std::size_t d = 0; d < dim; ++d) row[d] -= proj * prev[d];
      }
      const double n = norm(row);
      if (n > 1e-8) {
        for (double& v : row) v /= n;
        break;
      }
    }
  }
  return q;
}

FeatureMatrix id_samples(const Matrix& means, std::size_t n, double sigma, Rng& rng,
                         std::vector<std::size_t>& labels) {
  FeatureMatrix x;
  x.data = Matrix(n, means.cols());
  labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = i % means.rows();
    labels[i] = y;
    const auto m = means.row(y);
    auto row = x.data.row(i);
    for (std::size_t d = 0; d < row.size(); ++d) row[d] = m[d] + sigma * rng.normal();
  }
  return x;
}

}  // namespace

World generate_world(const WorldSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  World w;
  w.spec = spec;

  w.class_means = orthonormal_directions(spec.classes, spec.dim, rng);
  for (double& v : w.class_means.values()) v *= spec.radius;

  std::vector<double> bias(spec.classes);
  for (std::size_t c = 0; c < spec.classes; ++c) {
    bias[c] = -0.5 * dot(w.class_means.row(c), w.class_means.row(c));
  }
  w.head = LinearHead::affine(w.class_means, std::move(bias));

  w.id_train = id_samples(w.class_means, spec.n_train, spec.sigma_id, rng, w.train_labels);
  w.id_test = id_samples(w.class_means, spec.n_test, spec.sigma_id, rng, w.test_labels);

  w.ood.data = Matrix(spec.n_ood, spec.dim);
  std::vector<double> shift(spec.dim);
  for (std::size_t i = 0; i < spec.n_ood; ++i) {
    const auto m = w.class_means.row(rng.index(spec.classes));
    double n = 0.0;
    do {
      for (double& v : shift) v = rng.normal();
      n = norm(shift);
    } while (!(n > 0.0));
    auto row = w.ood.data.row(i);
    for (std::size_t d = 0; d < spec.dim; ++d) {
      row[d] = m[d] + spec.delta * shift[d] / n + spec.sigma_id * rng.normal();
    }
  }
  return w;
}

double brute_force_ora(std::span<const double> z, const LinearHead& head,
                       std::span<const double> mu) {
  const std::size_t classes = head.classes();
  const std::size_t dim = head.dim();
  if (z.size() != dim || mu.size() != dim) {
    throw Error(Errc::dimension_mismatch, "brute_force_ora: dimension mismatch");
  }
  const auto W = head.weights();
  const auto b = head.bias();

  std::vector<double> logits(classes, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t d = 0; d < dim; ++d) logits[c] += W(c, d) * z[d];
    logits[c] += b[c];
  }
  std::size_t y_hat = 0;
  for (std::size_t c = 1; c < classes; ++c) {
    if (logits[c] > logits[y_hat]) y_hat = c;
  }

  std::vector<double> centered(dim);
  for (std::size_t d = 0; d < dim; ++d) centered[d] = z[d] - mu[d];
  double centered_len = 0.0;
  for (double v : centered) centered_len += v * v;
  centered_len = std::sqrt(centered_len);
  if (centered_len <= 1e-12) throw Error(Errc::degenerate_centering, "z coincides with mu");

  double score = -1.0;
  bool any = false;
  std::vector<double> normal(dim), z_db(dim), proj_centered(dim);
  for (std::size_t other = 0; other < classes; ++other) {
    if (other == y_hat) continue;
    double len_hat = 0.0, len_other = 0.0, len_normal = 0.0, numerator = b[y_hat] - b[other];
    for (std::size_t d = 0; d < dim; ++d) {
      normal[d] = W(y_hat, d) - W(other, d);
      len_hat += W(y_hat, d) * W(y_hat, d);
      len_other += W(other, d) * W(other, d);
      len_normal += normal[d] * normal[d];
      numerator += normal[d] * z[d];
    }
    const double cutoff = 1e-12 * std::max(1.0, std::sqrt(len_hat) + std::sqrt(len_other));
    if (std::sqrt(len_normal) <= cutoff) continue;

    for (std::size_t d = 0; d < dim; ++d) z_db[d] = z[d] - numerator / len_normal * normal[d];
    for (std::size_t d = 0; d < dim; ++d) proj_centered[d] = z_db[d] - mu[d];

    double inner = 0.0, proj_len = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      inner += centered[d] * proj_centered[d];
      proj_len += proj_centered[d] * proj_centered[d];
    }
    proj_len = std::sqrt(proj_len);
    if (proj_len <= 1e-12) throw Error(Errc::degenerate_centering, "z_db coincides with mu");

    double cosine = inner / (centered_len * proj_len);
    cosine = std::max(-1.0, std::min(1.0, cosine));
    const double theta = std::acos(cosine);
    if (theta >= score) score = theta;
    any = true;
  }
  if (!any) throw Error(Errc::all_degenerate, "brute_force_ora: every class pair is degenerate");
  return score;
}

}  // namespace ora::synth
