#pragma once

// Row-parallel driver shared by every batch kernel. Each row is computed by
// the same function in both modes and written to its own slot, so the
// serial and OpenMP paths agree bitwise.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "ora/error.hpp"
#include "ora/geometry.hpp"

namespace ora::kernels {

struct RowValue {
  double value = 0.0;
  bool ok = false;
  Errc code = Errc::invalid_argument;

  static RowValue success(double v) noexcept { return {v, true, Errc::invalid_argument}; }
  static RowValue failure(Errc c) noexcept {
    return {std::numeric_limits<double>::quiet_NaN(), false, c};
  }
};

/// Fills out[i] = fn(i) for i in [0, n).
template <class Fn>
void run_rows(std::size_t n, Exec exec, std::vector<RowValue>& out, Fn&& fn) {
  out.resize(n);
  const auto count = static_cast<long long>(n);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < count; ++i) {
      const auto r = static_cast<std::size_t>(i);
      try {
        out[r] = fn(r);
      } catch (const Error& e) {
        out[r] = RowValue::failure(e.code());
      } catch (...) {
        out[r] = RowValue::failure(Errc::invalid_argument);
      }
    }
  } else {
    for (std::size_t r = 0; r < n; ++r) {
      try {
        out[r] = fn(r);
      } catch (const Error& e) {
        out[r] = RowValue::failure(e.code());
      }
    }
  }
}

/// Packs row values into BatchScores; throws when every row failed.
inline BatchScores collect(const std::vector<RowValue>& rows, const char* what) {
  BatchScores b;
  b.scores.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    b.scores[i] = rows[i].value;
    if (!rows[i].ok) b.errors.push_back({i, rows[i].code});
  }
  if (!rows.empty() && b.errors.size() == rows.size()) {
    throw Error(b.errors.front().code, std::string(what) + ": every row failed (row 0: " +
                                           std::string(to_string(b.errors.front().code)) + ")");
  }
  return b;
}

}  // namespace ora::kernels
