#include "ora/feature_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ora/error.hpp"

namespace ora {
namespace {

constexpr std::size_t kFixedHeader = 10;

template <class UInt>
void put_le(std::vector<std::byte>& out, UInt v) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
  }
}

template <class UInt>
UInt get_le(std::span<const std::byte> in, std::size_t offset) {
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    v |= static_cast<UInt>(std::to_integer<unsigned>(in[offset + i])) << (8 * i);
  }
  return v;
}

std::string at(std::size_t offset) { return " at byte offset " + std::to_string(offset); }

std::string dims_string(const std::vector<std::uint64_t>& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
  os << ']';
  return os.str();
}

void check_shape(const std::vector<std::uint64_t>& dims) {
  if (dims.size() != 1 && dims.size() != 2) {
    throw Error(Errc::invalid_header, "ndim must be 1 or 2, got " + std::to_string(dims.size()));
  }
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] == 0) {
      throw Error(Errc::invalid_header, "dimension " + std::to_string(i) + " of " +
                                            dims_string(dims) + " is zero");
    }
  }
}

std::uint64_t checked_count(const std::vector<std::uint64_t>& dims, std::size_t elem) {
  std::uint64_t n = 1;
  for (auto d : dims) {
    if (n > std::numeric_limits<std::uint64_t>::max() / d) {
      throw Error(Errc::invalid_header, "dims " + dims_string(dims) + " overflow");
    }
    n *= d;
  }
  if (n > std::numeric_limits<std::uint64_t>::max() / elem) {
    throw Error(Errc::invalid_header, "dims " + dims_string(dims) + " overflow");
  }
  return n;
}

}  // namespace

std::size_t dtype_size(DType t) noexcept { return t == DType::float32 ? 4 : 8; }

std::uint64_t TensorFile::element_count() const noexcept {
  std::uint64_t n = dims.empty() ? 0 : 1;
  for (auto d : dims) n *= d;
  return n;
}

void validate(const TensorFile& t) {
  if (t.dtype != DType::float32 && t.dtype != DType::float64) {
    throw Error(Errc::invalid_header, "unknown dtype tag");
  }
  check_shape(t.dims);
  if (t.element_count() != t.values.size()) {
    throw Error(Errc::shape_mismatch, "dims " + dims_string(t.dims) + " need " +
                                          std::to_string(t.element_count()) + " values, have " +
                                          std::to_string(t.values.size()));
  }
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    const double v = t.values[i];
    const bool finite = t.dtype == DType::float32 ? std::isfinite(static_cast<float>(v))
                                                  : std::isfinite(v);
    if (!finite) {
      throw Error(Errc::non_finite_values, "non-finite value at index " + std::to_string(i));
    }
  }
}

std::vector<std::byte> encode_tensor(const TensorFile& t) {
  validate(t);
  std::vector<std::byte> out;
  out.reserve(kFixedHeader + 8 * t.dims.size() + t.values.size() * dtype_size(t.dtype));
  for (char c : kTensorMagic) out.push_back(static_cast<std::byte>(c));
  put_le<std::uint32_t>(out, kTensorVersion);
  out.push_back(static_cast<std::byte>(t.dtype));
  out.push_back(static_cast<std::byte>(t.dims.size()));
  for (auto d : t.dims) put_le<std::uint64_t>(out, d);
  if (t.dtype == DType::float32) {
    for (double v : t.values) put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  } else {
    for (double v : t.values) put_le(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

TensorFile decode_tensor(std::span<const std::byte> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kTensorMagic, 4) != 0) {
    throw Error(Errc::bad_magic, "missing ORAF magic" + at(0));
  }
  if (bytes.size() < kFixedHeader) {
    throw Error(Errc::truncated_payload, "header ends" + at(bytes.size()));
  }
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kTensorVersion) {
    throw Error(Errc::unsupported_version,
                "version " + std::to_string(version) + " not supported" + at(4));
  }
  const auto tag = std::to_integer<unsigned>(bytes[8]);
  if (tag > 1) {
    throw Error(Errc::invalid_header, "dtype tag " + std::to_string(tag) + at(8));
  }
  TensorFile t;
  t.dtype = static_cast<DType>(tag);
  const auto ndim = std::to_integer<unsigned>(bytes[9]);
  if (ndim != 1 && ndim != 2) {
    throw Error(Errc::invalid_header, "ndim " + std::to_string(ndim) + at(9));
  }
  const std::size_t payload_offset = kFixedHeader + 8 * ndim;
  if (bytes.size() < payload_offset) {
    throw Error(Errc::truncated_payload, "dims end" + at(bytes.size()));
  }
  for (unsigned i = 0; i < ndim; ++i) {
    const std::size_t off = kFixedHeader + 8 * i;
    const auto d = get_le<std::uint64_t>(bytes, off);
    if (d == 0) throw Error(Errc::invalid_header, "zero dimension" + at(off));
    t.dims.push_back(d);
  }
  const std::size_t elem = dtype_size(t.dtype);
  const std::uint64_t count = checked_count(t.dims, elem);
  const std::uint64_t expected = count * elem;
  const std::uint64_t available = bytes.size() - payload_offset;
  if (available < expected) {
    throw Error(Errc::truncated_payload, "payload needs " + std::to_string(expected) +
                                             " bytes, file ends" + at(bytes.size()));
  }
  if (available > expected) {
    throw Error(Errc::trailing_data,
                "unexpected bytes after payload" + at(payload_offset + expected));
  }
  t.values.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t off = payload_offset + i * elem;
    double v;
    if (t.dtype == DType::float32) {
      v = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(bytes, off)));
    } else {
      v = std::bit_cast<double>(get_le<std::uint64_t>(bytes, off));
    }
    if (!std::isfinite(v)) {
      throw Error(Errc::non_finite_values,
                  "non-finite value at index " + std::to_string(i) + at(off));
    }
    t.values[i] = v;
  }
  return t;
}

TensorFile read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::io_failure, "read failed: " + path.string());
  try {
    return decode_tensor(std::as_bytes(std::span<const char>(raw)));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_tensor(const TensorFile& t, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_failure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io_failure, "write failed: " + path.string());
}

TensorFile make_tensor(const Matrix& m, DType dtype) {
  TensorFile t;
  t.dtype = dtype;
  t.dims = {m.rows(), m.cols()};
  t.values.assign(m.values().begin(), m.values().end());
  return t;
}

TensorFile make_tensor(std::span<const double> v, DType dtype) {
  TensorFile t;
  t.dtype = dtype;
  t.dims = {v.size()};
  t.values.assign(v.begin(), v.end());
  return t;
}

Matrix to_matrix(const TensorFile& t) {
  if (t.dims.size() != 2) {
    throw Error(Errc::shape_mismatch, "expected a 2-D tensor, got " + dims_string(t.dims));
  }
  return Matrix(t.dims[0], t.dims[1], t.values);
}

std::vector<double> to_vector(const TensorFile& t) {
  if (t.dims.size() != 1) {
    throw Error(Errc::shape_mismatch, "expected a 1-D tensor, got " + dims_string(t.dims));
  }
  return t.values;
}

void validate(const FeatureMatrix& x) {
  if (x.data.rows() < 1) throw Error(Errc::empty_input, "feature matrix has no rows");
  if (x.data.cols() < 2) {
    throw Error(Errc::shape_mismatch,
                "feature dimension must be >= 2, got " + std::to_string(x.data.cols()));
  }
  const auto v = x.data.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw Error(Errc::non_finite_values, "non-finite feature at row " +
                                               std::to_string(i / x.data.cols()) + ", column " +
                                               std::to_string(i % x.data.cols()));
    }
  }
  if (!x.sample_ids.empty() && x.sample_ids.size() != x.data.rows()) {
    throw Error(Errc::length_mismatch, "sample_ids has " + std::to_string(x.sample_ids.size()) +
                                           " entries for " + std::to_string(x.data.rows()) +
                                           " rows");
  }
}

LinearHead::LinearHead(Matrix weights, std::vector<double> bias, HeadMode mode)
    : weights_(std::move(weights)), bias_(std::move(bias)), mode_(mode) {
  if (weights_.rows() < 2) {
    throw Error(Errc::shape_mismatch,
                "head needs at least 2 classes, got " + std::to_string(weights_.rows()));
  }
  if (weights_.cols() < 1) throw Error(Errc::shape_mismatch, "head has zero feature dimension");
  if (bias_.size() != weights_.rows()) {
    throw Error(Errc::shape_mismatch, "bias length " + std::to_string(bias_.size()) +
                                          " does not match " + std::to_string(weights_.rows()) +
                                          " classes");
  }
  for (double v : weights_.values()) {
    if (!std::isfinite(v)) throw Error(Errc::non_finite_values, "non-finite head weight");
  }
  for (double v : bias_) {
    if (!std::isfinite(v)) throw Error(Errc::non_finite_values, "non-finite head bias");
  }
  row_norms_.resize(weights_.rows());
  for (std::size_t c = 0; c < weights_.rows(); ++c) row_norms_[c] = norm(weights_.row(c));
}

LinearHead LinearHead::affine(Matrix weights, std::vector<double> bias) {
  return LinearHead(std::move(weights), std::move(bias), HeadMode::affine);
}

LinearHead LinearHead::affine(Matrix weights) {
  std::vector<double> bias(weights.rows(), 0.0);
  return LinearHead(std::move(weights), std::move(bias), HeadMode::affine);
}

LinearHead LinearHead::similarity(Matrix embeddings) {
  for (std::size_t c = 0; c < embeddings.rows(); ++c) {
    auto row = embeddings.row(c);
    const double n = norm(row);
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw Error(Errc::degenerate_boundary,
                  "class embedding " + std::to_string(c) + " has zero or non-finite norm");
    }
    for (double& v : row) v /= n;
  }
  std::vector<double> bias(embeddings.rows(), 0.0);
  return LinearHead(std::move(embeddings), std::move(bias), HeadMode::similarity);
}

void LinearHead::logits(std::span<const double> z, std::span<double> out) const noexcept {
  for (std::size_t c = 0; c < classes(); ++c) out[c] = logit(c, z);
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  FeatureMatrix x;
  x.data = to_matrix(read_tensor(path));
  if (auto meta = read_sidecar(path)) x.sample_ids = std::move(meta->sample_ids);
  validate(x);
  return x;
}

LinearHead load_head(const std::filesystem::path& weights_path,
                     const std::optional<std::filesystem::path>& bias_path, HeadMode mode) {
  Matrix w = to_matrix(read_tensor(weights_path));
  std::vector<double> b(w.rows(), 0.0);
  if (bias_path) {
    b = to_vector(read_tensor(*bias_path));
    if (b.size() != w.rows()) {
      throw Error(Errc::shape_mismatch, "bias length " + std::to_string(b.size()) +
                                            " does not match " + std::to_string(w.rows()) +
                                            " weight rows");
    }
  }
  if (mode == HeadMode::similarity) {
    for (std::size_t c = 0; c < b.size(); ++c) {
      if (b[c] != 0.0) {
        throw Error(Errc::shape_mismatch,
                    "similarity head given nonzero bias at class " + std::to_string(c));
      }
    }
    return LinearHead::similarity(std::move(w));
  }
  return LinearHead::affine(std::move(w), std::move(b));
}

std::vector<std::size_t> load_labels(const std::filesystem::path& path) {
  const auto v = to_vector(read_tensor(path));
  std::vector<std::size_t> labels(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < 0.0 || v[i] != std::floor(v[i]) || v[i] > 9.0e15) {
      throw Error(Errc::invalid_argument,
                  "label at index " + std::to_string(i) + " is not a non-negative integer");
    }
    labels[i] = static_cast<std::size_t>(v[i]);
  }
  return labels;
}

std::filesystem::path sidecar_path(const std::filesystem::path& tensor_path) {
  auto p = tensor_path;
  p.replace_extension(".meta.json");
  return p;
}

std::optional<SidecarMeta> read_sidecar(const std::filesystem::path& tensor_path) {
  const auto p = sidecar_path(tensor_path);
  std::ifstream in(p);
  if (!in) return std::nullopt;
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_header, p.string() + ": " + e.what());
  }
  SidecarMeta meta;
  try {
    if (j.contains("sample_ids")) meta.sample_ids = j.at("sample_ids").get<std::vector<std::string>>();
    if (j.contains("source")) meta.source = j.at("source").get<std::string>();
    if (j.contains("class_names")) {
      meta.class_names = j.at("class_names").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_header, p.string() + ": " + e.what());
  }
  return meta;
}

void write_sidecar(const SidecarMeta& meta, const std::filesystem::path& tensor_path) {
  nlohmann::json j = nlohmann::json::object();
  if (!meta.sample_ids.empty()) j["sample_ids"] = meta.sample_ids;
  if (meta.source) j["source"] = *meta.source;
  if (!meta.class_names.empty()) j["class_names"] = meta.class_names;
  const auto p = sidecar_path(tensor_path);
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw Error(Errc::io_failure, "cannot open " + p.string() + " for writing");
  out << j.dump(2) << '\n';
}

}  // namespace ora
