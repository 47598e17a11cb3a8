#pragma once

// Binary tensor container (".oraf") shared by the extractor and the scoring
// core.
//
// Layout, all integers little-endian:
//   [0..4)            magic "ORAF"
//   [4..8)            version, u32 (currently 1)
//   [8]               dtype, u8 (0 = float32, 1 = float64)
//   [9]               ndim, u8 (1 or 2)
//   [10..10+8*ndim)   dims, u64 each
//   then              row-major payload, product(dims) values

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ora/matrix.hpp"

namespace ora {

inline constexpr char kTensorMagic[4] = {'O', 'R', 'A', 'F'};
inline constexpr std::uint32_t kTensorVersion = 1;

enum class DType : std::uint8_t { float32 = 0, float64 = 1 };

std::size_t dtype_size(DType t) noexcept;

/// In-memory form of one container. Values are held as float64; float32
/// payloads widen exactly, so writing back reproduces the original bytes.
struct TensorFile {
  DType dtype = DType::float64;
  std::vector<std::uint64_t> dims;
  std::vector<double> values;

  std::uint64_t element_count() const noexcept;
  bool operator==(const TensorFile&) const = default;
};

/// Throws Error(invalid_header | length_mismatch | non_finite_values).
void validate(const TensorFile& t);

std::vector<std::byte> encode_tensor(const TensorFile& t);
TensorFile decode_tensor(std::span<const std::byte> bytes);

TensorFile read_tensor(const std::filesystem::path& path);
void write_tensor(const TensorFile& t, const std::filesystem::path& path);

TensorFile make_tensor(const Matrix& m, DType dtype = DType::float64);
TensorFile make_tensor(std::span<const double> v, DType dtype = DType::float64);

/// Interprets a 2-D tensor as a matrix; a 1-D tensor is rejected.
Matrix to_matrix(const TensorFile& t);
/// Interprets a 1-D tensor as a vector; a 2-D tensor is rejected.
std::vector<double> to_vector(const TensorFile& t);

struct FeatureMatrix {
  Matrix data;
  std::vector<std::string> sample_ids;  // empty or one per row

  std::size_t size() const noexcept { return data.rows(); }
  std::size_t dim() const noexcept { return data.cols(); }
};

/// N >= 1, D >= 2, all entries finite, sample_ids empty or N long.
void validate(const FeatureMatrix& x);

enum class HeadMode { affine, similarity };

/// Final linear layer g(z) = W z + b, or a similarity head whose rows are
/// class embeddings compared by inner product.
class LinearHead {
 public:
  LinearHead() = default;

  static LinearHead affine(Matrix weights, std::vector<double> bias);
  static LinearHead affine(Matrix weights);
  /// Rows are L2-normalized; bias is zero.
  static LinearHead similarity(Matrix embeddings);

  std::size_t classes() const noexcept { return weights_.rows(); }
  std::size_t dim() const noexcept { return weights_.cols(); }
  HeadMode mode() const noexcept { return mode_; }

  const Matrix& weights() const noexcept { return weights_; }
  std::span<const double> bias() const noexcept { return bias_; }
  std::span<const double> row(std::size_t c) const noexcept { return weights_.row(c); }
  double row_norm(std::size_t c) const noexcept { return row_norms_[c]; }

  double logit(std::size_t c, std::span<const double> z) const noexcept {
    return dot(weights_.row(c), z) + bias_[c];
  }
  void logits(std::span<const double> z, std::span<double> out) const noexcept;

 private:
  LinearHead(Matrix weights, std::vector<double> bias, HeadMode mode);

  Matrix weights_;
  std::vector<double> bias_;
  std::vector<double> row_norms_;
  HeadMode mode_ = HeadMode::affine;
};

FeatureMatrix load_features(const std::filesystem::path& path);

/// Absent bias path gives a zero bias. In similarity mode a bias file with
/// any nonzero entry is rejected.
LinearHead load_head(const std::filesystem::path& weights_path,
                     const std::optional<std::filesystem::path>& bias_path,
                     HeadMode mode);

/// 1-D tensor of non-negative integral values.
std::vector<std::size_t> load_labels(const std::filesystem::path& path);

/// Sidecar metadata stored next to a tensor as "<stem>.meta.json".
struct SidecarMeta {
  std::vector<std::string> sample_ids;
  std::optional<std::string> source;
  std::vector<std::string> class_names;
};

std::filesystem::path sidecar_path(const std::filesystem::path& tensor_path);
std::optional<SidecarMeta> read_sidecar(const std::filesystem::path& tensor_path);
void write_sidecar(const SidecarMeta& meta, const std::filesystem::path& tensor_path);

}  // namespace ora
