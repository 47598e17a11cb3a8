#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ora::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

/// Runs one `ora` invocation; args excludes the program name. Errors are
/// written to `err` as a single JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Git blob id of a file's contents: sha1("blob <size>\0" + bytes), hex.
std::string git_blob_hash(const std::filesystem::path& path);
std::string sha1_hex(std::string_view data);

/// Two histograms over a shared uniform binning of the pooled min..max.
struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> id_counts;
  std::vector<std::size_t> ood_counts;
};

Histogram shared_histogram(std::span<const double> id, std::span<const double> ood,
                           std::size_t bins = 64);

std::string histogram_csv(const Histogram& h);

}  // namespace ora::cli
