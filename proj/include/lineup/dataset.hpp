#pragma once

// Column-oriented, immutable tables. Every simulated null dataset is a copy
// of the observed table with exactly one column replaced.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "lineup/error.hpp"

namespace lineup {

enum class ColumnKind { numeric, categorical, binary };

constexpr std::string_view to_string(ColumnKind kind) noexcept {
  switch (kind) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::binary: return "binary";
  }
  return "unknown";
}

class Column {
 public:
  static Column numeric(std::string name, std::vector<double> values) {
    for (double v : values) {
      if (!std::isfinite(v)) {
        throw Error(Errc::type_mismatch,
                    "column '" + name + "' holds a non-finite value");
      }
    }
    return Column(std::move(name), ColumnKind::numeric, std::move(values), {});
  }

  static Column binary(std::string name, std::vector<double> values) {
    for (double v : values) {
      if (v != 0.0 && v != 1.0) {
        throw Error(Errc::type_mismatch,
                    "binary column '" + name + "' holds a value other than 0/1");
      }
    }
    return Column(std::move(name), ColumnKind::binary, std::move(values), {});
  }

  static Column categorical(std::string name, std::vector<std::string> labels) {
    return Column(std::move(name), ColumnKind::categorical, {},
                  std::move(labels));
  }

  const std::string& name() const noexcept { return name_; }
  ColumnKind kind() const noexcept { return kind_; }
  bool is_numeric_valued() const noexcept {
    return kind_ != ColumnKind::categorical;
  }
  std::size_t size() const noexcept {
    return kind_ == ColumnKind::categorical ? labels_.size() : numbers_.size();
  }

  std::span<const double> numbers() const {
    if (!is_numeric_valued()) {
      throw Error(Errc::type_mismatch,
                  "column '" + name_ + "' is categorical, not numeric");
    }
    return numbers_;
  }

  std::span<const std::string> labels() const {
    if (kind_ != ColumnKind::categorical) {
      throw Error(Errc::type_mismatch,
                  "column '" + name_ + "' is not categorical");
    }
    return labels_;
  }

  // Distinct levels in lexicographic order.
  std::vector<std::string> levels() const {
    std::set<std::string> distinct(labels().begin(), labels().end());
    return {distinct.begin(), distinct.end()};
  }

  // Same name and kind, new values. Kind constraints are re-validated.
  Column with_numbers(std::vector<double> values) const {
    return kind_ == ColumnKind::binary ? binary(name_, std::move(values))
                                       : numeric(name_, std::move(values));
  }
  Column with_labels(std::vector<std::string> labels) const {
    return categorical(name_, std::move(labels));
  }

  friend bool operator==(const Column&, const Column&) = default;

 private:
  Column(std::string name, ColumnKind kind, std::vector<double> numbers,
         std::vector<std::string> labels)
      : name_(std::move(name)),
        kind_(kind),
        numbers_(std::move(numbers)),
        labels_(std::move(labels)) {}

  std::string name_;
  ColumnKind kind_;
  std::vector<double> numbers_;
  std::vector<std::string> labels_;
};

class Dataset {
 public:
  Dataset(std::string name, std::vector<Column> columns)
      : name_(std::move(name)), columns_(std::move(columns)) {
    if (columns_.empty()) {
      throw Error(Errc::parse_error, "dataset has no columns");
    }
    n_rows_ = columns_.front().size();
    std::set<std::string_view> seen;
    for (const auto& c : columns_) {
      if (c.name().empty()) {
        throw Error(Errc::duplicate_header, "empty column name");
      }
      if (!seen.insert(c.name()).second) {
        throw Error(Errc::duplicate_header,
                    "duplicate column name '" + c.name() + "'");
      }
      if (c.size() != n_rows_) {
        throw Error(Errc::ragged_row,
                    "column '" + c.name() + "' has " +
                        std::to_string(c.size()) + " values, expected " +
                        std::to_string(n_rows_));
      }
    }
  }

  const std::string& name() const noexcept { return name_; }
  std::size_t n_rows() const noexcept { return n_rows_; }
  std::span<const Column> columns() const noexcept { return columns_; }

  bool has_column(std::string_view col) const noexcept {
    return std::any_of(columns_.begin(), columns_.end(),
                       [&](const Column& c) { return c.name() == col; });
  }

  const Column& column(std::string_view col) const {
    for (const auto& c : columns_) {
      if (c.name() == col) return c;
    }
    throw Error(Errc::column_not_found,
                "no column named '" + std::string(col) + "'");
  }

  // Column that must be numeric or binary.
  const Column& numeric_column(std::string_view col) const {
    const auto& c = column(col);
    if (!c.is_numeric_valued()) {
      throw Error(Errc::type_mismatch,
                  "column '" + c.name() + "' must be numeric");
    }
    return c;
  }

  const Column& categorical_column(std::string_view col) const {
    const auto& c = column(col);
    if (c.kind() != ColumnKind::categorical) {
      throw Error(Errc::type_mismatch,
                  "column '" + c.name() + "' must be categorical");
    }
    return c;
  }

  const Column& binary_column(std::string_view col) const {
    const auto& c = column(col);
    if (c.kind() != ColumnKind::binary) {
      throw Error(Errc::type_mismatch,
                  "column '" + c.name() + "' must be binary (0/1)");
    }
    return c;
  }

  // Copy of this table with the same-named column replaced.
  Dataset with_column(Column replacement) const {
    std::vector<Column> cols = columns_;
    for (auto& c : cols) {
      if (c.name() == replacement.name()) {
        c = std::move(replacement);
        return Dataset(name_, std::move(cols));
      }
    }
    throw Error(Errc::column_not_found,
                "no column named '" + replacement.name() + "'");
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::string name_;
  std::vector<Column> columns_;
  std::size_t n_rows_ = 0;
};

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

// Linear interpolation between order statistics at position (n-1)p
// (0-based), i.e. the "type 7" quantile. `sorted` must be ascending.
inline double quantile_type7(std::span<const double> sorted, double p) {
  if (sorted.empty()) {
    throw Error(Errc::domain_error, "quantile of an empty sample");
  }
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

// Sample (n-1) standard deviation; 0 for a single value.
inline double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

struct NumericSummary {
  double min = 0;
  double max = 0;
  double mean = 0;
  double sd = 0;
  double q1 = 0;
  double median = 0;
  double q3 = 0;
};

inline NumericSummary summarize(std::span<const double> values) {
  if (values.empty()) {
    throw Error(Errc::too_few_rows, "summary of an empty column");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  NumericSummary s;
  s.min = sorted.front();
  s.max = sorted.back();
  // Mean and sd from the sorted copy so row order cannot change rounding.
  s.mean = mean_of(sorted);
  s.sd = sample_sd(sorted);
  s.q1 = quantile_type7(sorted, 0.25);
  s.median = quantile_type7(sorted, 0.5);
  s.q3 = quantile_type7(sorted, 0.75);
  return s;
}

inline NumericSummary numeric_summary(const Dataset& ds, std::string_view col) {
  return summarize(ds.numeric_column(col).numbers());
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

struct CsvField {
  std::string text;
  bool quoted = false;
};

// RFC 4180 style tokenizer: comma separated, double-quote escaping,
// LF or CRLF record separators, quoted fields may span lines.
inline std::vector<std::vector<CsvField>> tokenize_csv(std::string_view text) {
  std::vector<std::vector<CsvField>> records;
  std::vector<CsvField> record;
  CsvField field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field = {};
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.text.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.text.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.quoted) {
          throw Error(Errc::parse_error,
                      "stray quote inside unquoted field on line " +
                          std::to_string(line));
        }
        if (field.quoted) {
          throw Error(Errc::parse_error,
                      "text after closing quote on line " +
                          std::to_string(line));
        }
        in_quotes = true;
        field.quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        end_record();
        ++line;
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        if (field.quoted) {
          throw Error(Errc::parse_error,
                      "text after closing quote on line " +
                          std::to_string(line));
        }
        field.text.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) {
    throw Error(Errc::parse_error, "unterminated quoted field");
  }
  // A final record without trailing newline.
  if (field_started || field.quoted || !record.empty()) end_record();
  return records;
}

inline bool looks_numeric(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t digits = 0;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++digits;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++digits;
  }
  if (digits == 0) return false;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    std::size_t exp_digits = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++exp_digits;
    if (exp_digits == 0) return false;
  }
  return i == s.size();
}

}  // namespace detail

// Parses a decimal literal (optional sign, fraction, exponent). No locale,
// no inf/nan, no hex.
inline std::optional<double> parse_number(std::string_view s) {
  if (!detail::looks_numeric(s)) return std::nullopt;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

// Shortest representation that parses back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline Dataset parse_csv(std::string_view text, std::string name = "data") {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") {
    text.remove_prefix(3);
  }
  auto records = detail::tokenize_csv(text);
  // Trailing blank lines.
  while (!records.empty() && records.back().size() == 1 &&
         records.back().front().text.empty() &&
         !records.back().front().quoted) {
    records.pop_back();
  }
  if (records.empty()) {
    throw Error(Errc::parse_error, "missing header row");
  }
  const auto& header = records.front();
  const std::size_t n_cols = header.size();
  const std::size_t n_rows = records.size() - 1;
  if (n_rows == 0) {
    throw Error(Errc::parse_error, "no data rows below the header");
  }
  {
    std::set<std::string_view> seen;
    for (const auto& h : header) {
      if (h.text.empty()) {
        throw Error(Errc::duplicate_header, "empty column name in header");
      }
      if (!seen.insert(h.text).second) {
        throw Error(Errc::duplicate_header,
                    "duplicate column name '" + h.text + "'");
      }
    }
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != n_cols) {
      throw Error(Errc::ragged_row,
                  "row " + std::to_string(r) + " has " +
                      std::to_string(records[r].size()) + " fields, expected " +
                      std::to_string(n_cols),
                  r);
    }
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (records[r][c].text.empty()) {
        throw Error(Errc::missing_value,
                    "row " + std::to_string(r) + ", column '" +
                        header[c].text + "' is empty",
                    r);
      }
    }
  }

  std::vector<Column> columns;
  columns.reserve(n_cols);
  for (std::size_t c = 0; c < n_cols; ++c) {
    std::vector<double> numbers;
    numbers.reserve(n_rows);
    bool all_numeric = true;
    bool all_binary = true;
    for (std::size_t r = 1; r < records.size(); ++r) {
      const auto v = parse_number(records[r][c].text);
      if (!v) {
        all_numeric = false;
        break;
      }
      if (*v != 0.0 && *v != 1.0) all_binary = false;
      numbers.push_back(*v);
    }
    if (all_numeric && all_binary) {
      columns.push_back(Column::binary(header[c].text, std::move(numbers)));
    } else if (all_numeric) {
      columns.push_back(Column::numeric(header[c].text, std::move(numbers)));
    } else {
      std::vector<std::string> labels;
      labels.reserve(n_rows);
      for (std::size_t r = 1; r < records.size(); ++r) {
        labels.push_back(std::move(records[r][c].text));
      }
      columns.push_back(Column::categorical(header[c].text, std::move(labels)));
    }
  }
  return Dataset(std::move(name), std::move(columns));
}

namespace detail {
inline std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(s);
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}
}  // namespace detail

inline std::string to_csv(const Dataset& ds) {
  std::string out;
  const auto cols = ds.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c) out.push_back(',');
    out += detail::csv_escape(cols[c].name());
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) out.push_back(',');
      if (cols[c].kind() == ColumnKind::categorical) {
        out += detail::csv_escape(cols[c].labels()[r]);
      } else {
        out += format_number(cols[c].numbers()[r]);
      }
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace lineup
