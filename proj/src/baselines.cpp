#include "ora/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ora/error.hpp"

namespace ora {
namespace {

void require_logits(std::span<const double> logits) {
  if (logits.empty()) throw Error(Errc::empty_input, "empty logit vector");
}

// Returns (max, sum of exp(l - max)).
std::pair<double, double> shifted_exp_sum(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double l : logits) s += std::exp(l - m);
  return {m, s};
}

}  // namespace

double msp(std::span<const double> logits) {
  require_logits(logits);
  const auto [m, s] = shifted_exp_sum(logits);
  return std::clamp(1.0 / s, 0.0, 1.0);
}

double max_logit(std::span<const double> logits) {
  require_logits(logits);
  return *std::max_element(logits.begin(), logits.end());
}

double energy(std::span<const double> logits) {
  require_logits(logits);
  const auto [m, s] = shifted_exp_sum(logits);
  return m + std::log(s);
}

double fdbd_score(std::span<const double> z, const LinearHead& head, std::span<const double> mu) {
  const std::size_t pred = predict(z, head);
  if (mu.size() != z.size()) {
    throw Error(Errc::dimension_mismatch, "centering vector dimension " +
                                              std::to_string(mu.size()) + " != " +
                                              std::to_string(z.size()));
  }
  const double centered = distance(z, mu);
  if (centered <= kZeroEps) {
    throw Error(Errc::degenerate_centering, "feature coincides with the centering point");
  }
  const double l_hat = head.logit(pred, z);
  const auto w_hat = head.row(pred);
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t c = 0; c < head.classes(); ++c) {
    if (c == pred) continue;
    const auto w_c = head.row(c);
    double nn = 0.0;
    for (std::size_t d = 0; d < z.size(); ++d) {
      const double n = w_hat[d] - w_c[d];
      nn += n * n;
    }
    const double n_norm = std::sqrt(nn);
    if (n_norm <= degenerate_threshold(head.row_norm(pred), head.row_norm(c))) continue;
    total += std::abs(l_hat - head.logit(c, z)) / n_norm / centered;
    ++pairs;
  }
  if (pairs == 0) throw Error(Errc::all_degenerate, "every class pair is degenerate");
  return total / static_cast<double>(pairs);
}

KnnIndex::KnnIndex(const Matrix& bank, std::size_t k) : bank_(bank), k_(k) {
  if (bank_.rows() == 0) throw Error(Errc::empty_input, "k-NN bank is empty");
  if (k_ == 0 || k_ > bank_.rows()) {
    throw Error(Errc::invalid_argument, "k = " + std::to_string(k_) + " outside [1, " +
                                            std::to_string(bank_.rows()) + "]");
  }
  for (std::size_t i = 0; i < bank_.rows(); ++i) {
    auto row = bank_.row(i);
    const double n = norm(row);
    if (!(n > 0.0)) {
      throw Error(Errc::degenerate_centering, "bank row " + std::to_string(i) + " has zero norm");
    }
    for (double& v : row) v /= n;
  }
}

KnnIndex KnnIndex::from_normalized(Matrix bank, std::size_t k) {
  if (bank.rows() == 0) throw Error(Errc::empty_input, "k-NN bank is empty");
  if (k == 0 || k > bank.rows()) {
    throw Error(Errc::invalid_argument, "k = " + std::to_string(k) + " outside [1, " +
                                            std::to_string(bank.rows()) + "]");
  }
  for (std::size_t i = 0; i < bank.rows(); ++i) {
    if (std::abs(norm(bank.row(i)) - 1.0) > 1e-9) {
      throw Error(Errc::invalid_argument, "bank row " + std::to_string(i) + " is not unit norm");
    }
  }
  KnnIndex index;
  index.bank_ = std::move(bank);
  index.k_ = k;
  return index;
}

double knn_score(std::span<const double> z, const KnnIndex& index) {
  const Matrix& bank = index.bank();
  if (z.size() != bank.cols()) {
    throw Error(Errc::dimension_mismatch, "query dimension " + std::to_string(z.size()) +
                                              " != bank dimension " + std::to_string(bank.cols()));
  }
  const double zn = norm(z);
  if (!(zn > 0.0)) throw Error(Errc::invalid_argument, "cannot normalize a zero query");

  std::vector<double> sq(bank.rows());
  for (std::size_t i = 0; i < bank.rows(); ++i) {
    const auto row = bank.row(i);
    double s = 0.0;
    for (std::size_t d = 0; d < z.size(); ++d) {
      const double diff = z[d] / zn - row[d];
      s += diff * diff;
    }
    sq[i] = s;
  }
  const auto kth = sq.begin() + static_cast<std::ptrdiff_t>(index.k() - 1);
  std::nth_element(sq.begin(), kth, sq.end());
  return -std::sqrt(*kth);
}

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::ora: return "ora";
    case Method::fdbd: return "fdbd";
    case Method::msp: return "msp";
    case Method::maxlogit: return "maxlogit";
    case Method::energy: return "energy";
    case Method::knn: return "knn";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (auto m : {Method::ora, Method::fdbd, Method::msp, Method::maxlogit, Method::energy,
                 Method::knn}) {
    if (name == to_string(m)) return m;
  }
  throw Error(Errc::usage, "unknown method '" + std::string(name) + "'");
}

}  // namespace ora
