#include "ora/error.hpp"

namespace ora {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::bad_magic: return "bad-magic";
    case Errc::truncated_payload: return "truncated-payload";
    case Errc::trailing_data: return "trailing-data";
    case Errc::unsupported_version: return "unsupported-version";
    case Errc::invalid_header: return "invalid-header";
    case Errc::non_finite_values: return "non-finite-values";
    case Errc::io_failure: return "io-failure";
    case Errc::shape_mismatch: return "shape-mismatch";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::degenerate_boundary: return "degenerate-boundary";
    case Errc::degenerate_centering: return "degenerate-centering";
    case Errc::all_degenerate: return "all-degenerate";
    case Errc::missing_labels: return "missing-labels";
    case Errc::empty_class: return "empty-class";
    case Errc::empty_input: return "empty-input";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::all_nonpositive: return "all-nonpositive";
    case Errc::numeric_overflow: return "numeric-overflow";
    case Errc::length_mismatch: return "length-mismatch";
    case Errc::model_set_mismatch: return "model-set-mismatch";
    case Errc::invalid_spec: return "invalid-spec";
    case Errc::usage: return "usage";
  }
  return "unknown";
}

}  // namespace ora
