#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <limits>
#include <sstream>

#include <openssl/evp.h>

#include "ora/cli.hpp"
#include "ora/error.hpp"

namespace ora::cli {

std::string sha1_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
    throw Error(Errc::io_failure, "sha1 digest failed");
  }
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(digest[i]);
  return os.str();
}

std::string git_blob_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::string blob = "blob " + std::to_string(body.size());
  blob.push_back('\0');
  blob += body;
  return sha1_hex(blob);
}

Histogram shared_histogram(std::span<const double> id, std::span<const double> ood,
                           std::size_t bins) {
  if (bins == 0) throw Error(Errc::invalid_argument, "histogram needs at least one bin");
  Histogram h;
  h.id_counts.assign(bins, 0);
  h.ood_counts.assign(bins, 0);
  h.lo = std::numeric_limits<double>::infinity();
  h.hi = -std::numeric_limits<double>::infinity();
  for (auto s : {id, ood}) {
    for (double v : s) {
      if (std::isnan(v)) continue;
      h.lo = std::min(h.lo, v);
      h.hi = std::max(h.hi, v);
    }
  }
  if (h.lo > h.hi) throw Error(Errc::empty_input, "no finite values to histogram");
  const double width = (h.hi - h.lo) / static_cast<double>(bins);
  const auto bin_of = [&](double v) -> std::size_t {
    if (!(width > 0.0)) return 0;
    const auto b = static_cast<std::size_t>((v - h.lo) / width);
    return std::min(b, bins - 1);
  };
  for (double v : id) {
    if (!std::isnan(v)) ++h.id_counts[bin_of(v)];
  }
  for (double v : ood) {
    if (!std::isnan(v)) ++h.ood_counts[bin_of(v)];
  }
  return h;
}

std::string histogram_csv(const Histogram& h) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "bin,lo,hi,id,ood\n";
  const std::size_t bins = h.id_counts.size();
  const double width = (h.hi - h.lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const double lo = h.lo + width * static_cast<double>(b);
    const double hi = b + 1 == bins ? h.hi : h.lo + width * static_cast<double>(b + 1);
    os << b << ',' << lo << ',' << hi << ',' << h.id_counts[b] << ',' << h.ood_counts[b] << '\n';
  }
  return os.str();
}

}  // namespace ora::cli
