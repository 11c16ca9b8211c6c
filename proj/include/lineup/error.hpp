#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lineup {

// Every failure the library reports carries one of these codes. The string
// form (to_string) is the machine-readable code used by the HTTP service.
enum class Errc {
  // data table
  ragged_row,
  missing_value,
  duplicate_header,
  parse_error,
  column_not_found,
  type_mismatch,
  // models
  degenerate_design,
  too_few_rows,
  separation,
  kind_mismatch,
  // null generation
  degenerate_groups,
  degenerate_fit,
  invalid_fit,
  degenerate_column,
  // diagnostics
  too_many_bins,
  bad_group_count,
  domain_error,
  // lineup
  invalid_spec,
  incompatible_spec,
  null_generation_failed,
  bad_counts,
  key_tampered,
  key_mismatch,
  no_data_panel,
  // sessions
  session_not_found,
  duplicate_observer,
  already_revealed,
  panel_out_of_range,
  forbidden,
  io_error,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::ragged_row: return "ragged_row";
    case Errc::missing_value: return "missing_value";
    case Errc::duplicate_header: return "duplicate_header";
    case Errc::parse_error: return "parse_error";
    case Errc::column_not_found: return "column_not_found";
    case Errc::type_mismatch: return "type_mismatch";
    case Errc::degenerate_design: return "degenerate_design";
    case Errc::too_few_rows: return "too_few_rows";
    case Errc::separation: return "separation";
    case Errc::kind_mismatch: return "kind_mismatch";
    case Errc::degenerate_groups: return "degenerate_groups";
    case Errc::degenerate_fit: return "degenerate_fit";
    case Errc::invalid_fit: return "invalid_fit";
    case Errc::degenerate_column: return "degenerate_column";
    case Errc::too_many_bins: return "too_many_bins";
    case Errc::bad_group_count: return "bad_group_count";
    case Errc::domain_error: return "domain_error";
    case Errc::invalid_spec: return "invalid_spec";
    case Errc::incompatible_spec: return "incompatible_spec";
    case Errc::null_generation_failed: return "null_generation_failed";
    case Errc::bad_counts: return "bad_counts";
    case Errc::key_tampered: return "key_tampered";
    case Errc::key_mismatch: return "key_mismatch";
    case Errc::no_data_panel: return "no_data_panel";
    case Errc::session_not_found: return "session_not_found";
    case Errc::duplicate_observer: return "duplicate_observer";
    case Errc::already_revealed: return "already_revealed";
    case Errc::panel_out_of_range: return "panel_out_of_range";
    case Errc::forbidden: return "forbidden";
    case Errc::io_error: return "io_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message,
        std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(message), code_(code), index_(index) {}

  Errc code() const noexcept { return code_; }

  // Row index for table errors, panel number for generation failures.
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  Errc code_;
  std::optional<std::size_t> index_;
};

}  // namespace lineup
