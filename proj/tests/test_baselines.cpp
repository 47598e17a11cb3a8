#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "ora/baselines.hpp"
#include "test_support.hpp"

namespace ora {
namespace {

using testing::error_code_of;
using V = std::vector<double>;

TEST(Logits, Msp) {
  EXPECT_DOUBLE_EQ(msp(V{0, 0}), 0.5);
  EXPECT_EQ(msp(V{1000, 0}), 1.0);
  EXPECT_DOUBLE_EQ(msp(V{1, 1, 1, 1}), 0.25);
  EXPECT_EQ(error_code_of([] { msp(V{}); }), Errc::empty_input);
}

TEST(Logits, MaxLogit) {
  EXPECT_EQ(max_logit(V{3, 1, 2}), 3.0);
  EXPECT_EQ(max_logit(V{0, 0}), 0.0);
  EXPECT_EQ(max_logit(V{8, 6, 7}), 8.0);
}

TEST(Logits, Energy) {
  EXPECT_NEAR(energy(V{1, 1}), 1.693147, 1e-6);
  EXPECT_EQ(energy(V{4.5}), 4.5);
  EXPECT_NEAR(energy(V{1000, 0}), 1000.0, 1e-9);
}

TEST(Logits, ConstantShift) {
  synth::Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    auto l = testing::random_vector(rng, 7, 3.0);
    const double c = 10.0 * rng.normal();
    auto s = l;
    for (double& v : s) v += c;
    EXPECT_NEAR(msp(s), msp(l), 1e-12);
    EXPECT_NEAR(energy(s), energy(l) + c, 1e-9);
    EXPECT_NEAR(max_logit(s), max_logit(l) + c, 1e-12);
  }
}

TEST(Fdbd, HandExampleAndLawOfSines) {
  const auto head = LinearHead::affine(Matrix(2, 2, V{1, 0, 0, 1}));
  const V z{2, 1}, mu{0, 0};
  EXPECT_NEAR(fdbd_score(z, head, mu), 0.316228, 1e-6);
  const auto p = project_to_boundary(z, head, 0, 1);
  const auto r = relative_angle(z, p.z_db, mu);
  EXPECT_NEAR(fdbd_score(z, head, mu), std::sin(r.theta) / r.alpha_sine, 1e-12);
}

TEST(Fdbd, ScaleInvariantWithZeroBias) {
  synth::Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const auto head = testing::random_head(rng, 5, 6, false);
    const auto z = testing::random_vector(rng, 6);
    const auto mu = testing::random_vector(rng, 6, 0.1);
    auto kz = z, kmu = mu;
    for (double& v : kz) v *= 7.3;
    for (double& v : kmu) v *= 7.3;
    EXPECT_NEAR(fdbd_score(kz, head, kmu), fdbd_score(z, head, mu), 1e-9);
  }
}

TEST(Fdbd, MeanOfPairRatios) {
  synth::Rng rng(3);
  const auto head = testing::random_head(rng, 4, 5);
  const auto z = testing::random_vector(rng, 5);
  const auto mu = testing::random_vector(rng, 5, 0.1);
  const std::size_t y = predict(z, head);
  double sum = 0.0;
  for (std::size_t o = 0; o < 4; ++o) {
    if (o != y) sum += distance(z, project_to_boundary(z, head, y, o).z_db) / distance(z, mu);
  }
  EXPECT_NEAR(fdbd_score(z, head, mu), sum / 3.0, 1e-12);
}

TEST(Knn, HandExamples) {
  const Matrix bank(2, 2, V{1, 0, 0, 1});
  EXPECT_EQ(knn_score(V{1, 0}, KnnIndex(bank, 1)), 0.0);
  EXPECT_NEAR(knn_score(V{1, 0}, KnnIndex(bank, 2)), -std::sqrt(2.0), 1e-15);
  EXPECT_EQ(knn_score(V{5, 0}, KnnIndex(bank, 2)), knn_score(V{1, 0}, KnnIndex(bank, 2)));
}

TEST(Knn, Errors) {
  const Matrix bank(2, 2, V{1, 0, 0, 1});
  EXPECT_EQ(error_code_of([&] { KnnIndex(bank, 0); }), Errc::invalid_argument);
  EXPECT_EQ(error_code_of([&] { KnnIndex(bank, 3); }), Errc::invalid_argument);
  EXPECT_EQ(error_code_of([] { KnnIndex(Matrix(), 1); }), Errc::empty_input);
  EXPECT_EQ(error_code_of([] { KnnIndex(Matrix(1, 2, 0.0), 1); }), Errc::degenerate_centering);
  EXPECT_EQ(error_code_of([] { KnnIndex::from_normalized(Matrix(1, 2, 1.0), 1); }),
            Errc::invalid_argument);
  EXPECT_EQ(error_code_of([&] { knn_score(V{0, 0}, KnnIndex(bank, 1)); }), Errc::invalid_argument);
}

TEST(Knn, MatchesFullSortOracle) {
  synth::Rng rng(4);
  const auto raw = testing::random_matrix(rng, 10000, 8);
  for (std::size_t k : {1u, 7u, 50u, 10000u}) {
    const KnnIndex index(raw, k);
    for (int q = 0; q < 5; ++q) {
      const auto z = testing::random_vector(rng, 8);
      const double zn = norm(z);
      std::vector<double> d;
      for (std::size_t i = 0; i < raw.rows(); ++i) {
        const double rn = norm(raw.row(i));
        double s = 0.0;
        for (std::size_t j = 0; j < 8; ++j) {
          const double diff = z[j] / zn - raw(i, j) / rn;
          s += diff * diff;
        }
        d.push_back(std::sqrt(s));
      }
      std::sort(d.begin(), d.end());
      EXPECT_NEAR(knn_score(z, index), -d[k - 1], 1e-12);
    }
  }
}

TEST(Batch, SerialEqualsParallelAndDuplicatesAgree) {
  synth::Rng rng(5);
  const auto head = testing::random_head(rng, 6, 8);
  auto m = testing::random_matrix(rng, 300, 8);
  std::copy(m.row(0).begin(), m.row(0).end(), m.row(299).begin());
  const auto x = testing::features(m);
  const auto mu = testing::random_vector(rng, 8, 0.1);
  const KnnIndex index(testing::random_matrix(rng, 200, 8), 10);

  for (auto method : {Method::msp, Method::maxlogit, Method::energy}) {
    const auto a = logit_scores(x, head, method, Exec::serial);
    const auto b = logit_scores(x, head, method, Exec::parallel);
    EXPECT_EQ(a.scores, b.scores);
    EXPECT_EQ(a.scores[0], a.scores[299]);
  }
  const auto f1 = fdbd_scores(x, head, mu, Exec::serial);
  const auto f2 = fdbd_scores(x, head, mu, Exec::parallel);
  EXPECT_EQ(f1.scores, f2.scores);
  EXPECT_EQ(f1.scores[0], f1.scores[299]);
  const auto k1 = knn_scores(x, index, Exec::serial);
  const auto k2 = knn_scores(x, index, Exec::parallel);
  EXPECT_EQ(k1.scores, k2.scores);
  EXPECT_EQ(k1.scores[0], k1.scores[299]);
  for (std::size_t i = 0; i < 300; ++i) EXPECT_EQ(k1.scores[i], knn_score(x.data.row(i), index));
}

TEST(Methods, Names) {
  for (auto m : {Method::ora, Method::fdbd, Method::msp, Method::maxlogit, Method::energy,
                 Method::knn}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_EQ(error_code_of([] { parse_method("odin"); }), Errc::usage);
}

}  // namespace
}  // namespace ora
