#pragma once

// Deterministic Gaussian ID/OOD worlds with a closed-form nearest-class-mean
// head, plus an independent ORA implementation used as a differential oracle.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ora/feature_store.hpp"
#include "ora/matrix.hpp"

namespace ora::synth {

struct WorldSpec {
  std::size_t dim = 64;
  std::size_t classes = 10;
  double radius = 10.0;      // norm of every class mean
  double sigma_id = 1.0;     // per-coordinate standard deviation
  double delta = 6.0;        // OOD shift magnitude
  std::size_t n_train = 2000;
  std::size_t n_test = 2000;
  std::size_t n_ood = 2000;
  std::uint64_t seed = 7;
};

/// D=64, C=10, r=10, sigma=1, delta=6, seed=7.
WorldSpec canonical_spec();

void validate(const WorldSpec& spec);

nlohmann::json to_json(const WorldSpec& spec);
WorldSpec spec_from_json(const nlohmann::json& j);

struct World {
  WorldSpec spec;
  Matrix class_means;  // C x D
  FeatureMatrix id_train;
  FeatureMatrix id_test;
  FeatureMatrix ood;
  std::vector<std::size_t> train_labels;
  std::vector<std::size_t> test_labels;
  LinearHead head;  // w_c = mean_c, b_c = -||mean_c||^2 / 2
};

/// mt19937_64 bit stream with fixed uniform and Box-Muller normal transforms,
/// so a seed reproduces the same world on any conforming standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  double normal() noexcept;
  std::size_t index(std::size_t n) noexcept;

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Class means at `radius` along orthonormalized Gaussian directions (C <= D).
/// ID rows are mean_y + sigma * N(0, I) with y = i mod C. OOD rows pick a
/// class uniformly and sit at mean_c + delta * u + sigma * N(0, I) with u a
/// uniformly random unit vector.
World generate_world(const WorldSpec& spec);

/// Straightforward ORA with max aggregation, written independently of the
/// geometry module: explicit z_db vectors, explicit centered differences.
/// Throws all_degenerate / degenerate_centering like the main path.
double brute_force_ora(std::span<const double> z, const LinearHead& head,
                       std::span<const double> mu);

}  // namespace ora::synth
