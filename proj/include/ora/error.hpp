#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ora {

enum class Errc {
  bad_magic,
  truncated_payload,
  trailing_data,
  unsupported_version,
  invalid_header,
  non_finite_values,
  io_failure,
  shape_mismatch,
  dimension_mismatch,
  degenerate_boundary,
  degenerate_centering,
  all_degenerate,
  missing_labels,
  empty_class,
  empty_input,
  invalid_argument,
  all_nonpositive,
  numeric_overflow,
  length_mismatch,
  model_set_mismatch,
  invalid_spec,
  usage,
};

/// Stable kebab-case name, used in CLI error JSON.
std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace ora
