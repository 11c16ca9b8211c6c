#pragma once

// Plot-ready statistics for each panel type: Tukey boxplots, residual
// scatters, binned residuals, empirical logits and normal Q-Q pairs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lineup/dataset.hpp"
#include "lineup/error.hpp"
#include "lineup/models.hpp"
#include "lineup/normal.hpp"

namespace lineup {

// ---------------------------------------------------------------------------
// Boxplots
// ---------------------------------------------------------------------------

struct BoxplotGroup {
  std::string level;
  double q1 = 0;
  double median = 0;
  double q3 = 0;
  double whisker_lo = 0;
  double whisker_hi = 0;
  std::vector<double> outliers;  // ascending
  double mean = 0;
  friend bool operator==(const BoxplotGroup&, const BoxplotGroup&) = default;
};

struct BoxplotStats {
  std::vector<BoxplotGroup> groups;  // levels in lexicographic order
  friend bool operator==(const BoxplotStats&, const BoxplotStats&) = default;
};

// Tukey box for one sample: whiskers extend to the most extreme values
// within 1.5 IQR of the quartiles.
inline BoxplotGroup tukey_box(std::string level, std::span<const double> values) {
  if (values.empty()) {
    throw Error(Errc::too_few_rows, "boxplot of an empty group");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  BoxplotGroup box;
  box.level = std::move(level);
  box.q1 = quantile_type7(sorted, 0.25);
  box.median = quantile_type7(sorted, 0.5);
  box.q3 = quantile_type7(sorted, 0.75);
  box.mean = mean_of(sorted);
  const double iqr = box.q3 - box.q1;
  const double lo_fence = box.q1 - 1.5 * iqr;
  const double hi_fence = box.q3 + 1.5 * iqr;

  box.whisker_lo = *std::find_if(sorted.begin(), sorted.end(),
                                 [&](double v) { return v >= lo_fence; });
  box.whisker_hi = *std::find_if(sorted.rbegin(), sorted.rend(),
                                 [&](double v) { return v <= hi_fence; });
  for (double v : sorted) {
    if (v < box.whisker_lo || v > box.whisker_hi) box.outliers.push_back(v);
  }
  return box;
}

inline BoxplotStats boxplot_stats(const Dataset& ds, std::string_view response,
                                  std::string_view group) {
  const auto y = ds.numeric_column(response).numbers();
  const auto g = ds.categorical_column(group).labels();
  std::map<std::string, std::vector<double>> by_level;
  for (std::size_t i = 0; i < y.size(); ++i) by_level[g[i]].push_back(y[i]);

  BoxplotStats stats;
  for (auto& [level, values] : by_level) {
    stats.groups.push_back(tukey_box(level, values));
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Residual scatter
// ---------------------------------------------------------------------------

struct Point {
  double x = 0;
  double y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct ScatterPoints {
  std::vector<Point> points;  // (fitted value, raw residual)
  friend bool operator==(const ScatterPoints&, const ScatterPoints&) = default;
};

inline ScatterPoints residual_scatter(const LinearFit& fit) {
  ScatterPoints s;
  s.points.reserve(fit.n);
  for (std::size_t i = 0; i < fit.n; ++i) {
    s.points.push_back({fit.fitted[i], fit.residuals_raw[i]});
  }
  return s;
}

// ---------------------------------------------------------------------------
// Equal-count binning
// ---------------------------------------------------------------------------

// Bin sizes for n sorted items in k contiguous bins; sizes differ by at
// most one and the larger bins come first.
inline std::vector<std::size_t> equal_count_sizes(std::size_t n, std::size_t k) {
  std::vector<std::size_t> sizes(k, n / k);
  for (std::size_t i = 0; i < n % k; ++i) ++sizes[i];
  return sizes;
}

// Row indices per bin after a stable sort on `key`.
inline std::vector<std::vector<std::size_t>> equal_count_partition(
    std::span<const double> key, std::size_t k) {
  std::vector<std::size_t> order(key.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  std::vector<std::vector<std::size_t>> bins;
  bins.reserve(k);
  std::size_t start = 0;
  for (std::size_t size : equal_count_sizes(key.size(), k)) {
    bins.emplace_back(order.begin() + static_cast<long>(start),
                      order.begin() + static_cast<long>(start + size));
    start += size;
  }
  return bins;
}

inline std::size_t floor_sqrt(std::size_t n) {
  auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

// ---------------------------------------------------------------------------
// Binned residuals
// ---------------------------------------------------------------------------

enum class BinAxis { fitted, predictor };

constexpr std::string_view to_string(BinAxis axis) noexcept {
  return axis == BinAxis::fitted ? "fitted" : "predictor";
}

struct BinnedPoint {
  double bin_center = 0;  // mean axis value in the bin
  double mean_residual = 0;
  std::size_t bin_count = 0;
  friend bool operator==(const BinnedPoint&, const BinnedPoint&) = default;
};

struct BinnedResidualPoints {
  std::vector<BinnedPoint> points;
  std::size_t n_bins = 0;
  friend bool operator==(const BinnedResidualPoints&,
                         const BinnedResidualPoints&) = default;
};

// Averages `residual` over equal-count bins of `axis`. Default bin count is
// floor(sqrt(n)).
inline BinnedResidualPoints binned_means(std::span<const double> axis,
                                         std::span<const double> residual,
                                         std::optional<std::size_t> n_bins = {}) {
  const std::size_t n = axis.size();
  if (residual.size() != n) {
    throw Error(Errc::ragged_row, "axis and residual lengths differ");
  }
  const std::size_t k = n_bins.value_or(floor_sqrt(n));
  if (n_bins && *n_bins < 2) {
    throw Error(Errc::invalid_spec, "at least 2 bins are required");
  }
  if (k > n) {
    throw Error(Errc::too_many_bins,
                std::to_string(k) + " bins requested for " + std::to_string(n) +
                    " rows");
  }
  if (k == 0) {
    throw Error(Errc::too_few_rows, "no rows to bin");
  }
  BinnedResidualPoints out;
  out.n_bins = k;
  for (const auto& bin : equal_count_partition(axis, k)) {
    double sa = 0, sr = 0;
    for (std::size_t i : bin) {
      sa += axis[i];
      sr += residual[i];
    }
    const double c = static_cast<double>(bin.size());
    out.points.push_back({sa / c, sr / c, bin.size()});
  }
  return out;
}

// Mean deviance residual per equal-count bin of fitted probability (or the
// predictor).
inline BinnedResidualPoints binned_residuals(
    const LogisticFit& fit, BinAxis axis = BinAxis::fitted,
    std::optional<std::size_t> n_bins = {}) {
  if (!fit.converged) {
    throw Error(Errc::invalid_fit, "logistic fit did not converge");
  }
  const auto r = residuals(fit, ResidualKind::deviance);
  const auto& a = axis == BinAxis::fitted ? fit.fitted_probs : fit.predictor;
  return binned_means(a, r, n_bins);
}

// ---------------------------------------------------------------------------
// Empirical logits
// ---------------------------------------------------------------------------

// log(p / (1 - p)) with p = (successes + 0.5) / (cases + 1).
inline double adjusted_logit(std::size_t successes, std::size_t cases) {
  const double p = (static_cast<double>(successes) + 0.5) /
                   (static_cast<double>(cases) + 1.0);
  return std::log(p / (1.0 - p));
}

struct LogitPoint {
  double mean_x = 0;
  double adj_logit = 0;
  std::size_t successes = 0;
  std::size_t cases = 0;
  friend bool operator==(const LogitPoint&, const LogitPoint&) = default;
};

struct EmpiricalLogitPoints {
  std::vector<LogitPoint> points;
  std::size_t g = 0;
  friend bool operator==(const EmpiricalLogitPoints&,
                         const EmpiricalLogitPoints&) = default;
};

inline EmpiricalLogitPoints empirical_logit(std::span<const double> x,
                                            std::span<const double> y,
                                            std::size_t g) {
  const std::size_t n = x.size();
  if (g < 2 || g > n) {
    throw Error(Errc::bad_group_count,
                "group count must be in [2, n]; got " + std::to_string(g) +
                    " for n = " + std::to_string(n));
  }
  EmpiricalLogitPoints out;
  out.g = g;
  for (const auto& bin : equal_count_partition(x, g)) {
    double sx = 0;
    std::size_t s = 0;
    for (std::size_t i : bin) {
      sx += x[i];
      if (y[i] == 1.0) ++s;
    }
    out.points.push_back({sx / static_cast<double>(bin.size()),
                          adjusted_logit(s, bin.size()), s, bin.size()});
  }
  return out;
}

inline EmpiricalLogitPoints empirical_logit(const Dataset& ds,
                                            std::string_view response,
                                            std::string_view predictor,
                                            std::size_t g) {
  const auto& y = ds.binary_column(response);
  const auto& x = ds.numeric_column(predictor);
  return empirical_logit(x.numbers(), y.numbers(), g);
}

// ---------------------------------------------------------------------------
// Normal Q-Q
// ---------------------------------------------------------------------------

struct QQPair {
  double theoretical = 0;
  double sample = 0;
  friend bool operator==(const QQPair&, const QQPair&) = default;
};

struct QQPoints {
  std::vector<QQPair> pairs;  // sample ascending
  friend bool operator==(const QQPoints&, const QQPoints&) = default;
};

// Plotting positions (i - 0.5) / n.
inline QQPoints qq_points(std::span<const double> values) {
  if (values.empty()) {
    throw Error(Errc::too_few_rows, "Q-Q plot of an empty sample");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  QQPoints out;
  out.pairs.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double p = (static_cast<double>(i) + 0.5) / n;
    out.pairs.push_back({inverse_normal_cdf(p), sorted[i]});
  }
  return out;
}

}  // namespace lineup
