#pragma once

// Simple linear regression (closed form) and single-predictor logistic
// regression fitted by iteratively reweighted least squares.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lineup/dataset.hpp"
#include "lineup/error.hpp"
#include "lineup/random.hpp"

namespace lineup {

struct LinearFit {
  double intercept = 0;
  double slope = 0;
  std::vector<double> fitted;
  std::vector<double> residuals_raw;
  double sigma_hat = 0;  // sqrt(RSS / (n - 2))
  std::vector<double> leverages;
  std::size_t n = 0;
};

// True when the residual standard error is zero up to rounding noise, i.e.
// the response lies exactly on a line.
inline bool has_degenerate_sigma(const LinearFit& fit) {
  double scale = 1.0;
  for (double f : fit.fitted) scale = std::max(scale, std::abs(f));
  return fit.sigma_hat <= 1e-12 * scale;
}

inline LinearFit fit_ols(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (y.size() != n) {
    throw Error(Errc::ragged_row, "predictor and response lengths differ");
  }
  if (n < 3) {
    throw Error(Errc::too_few_rows,
                "linear fit needs at least 3 rows, got " + std::to_string(n));
  }
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) {
    throw Error(Errc::degenerate_design, "predictor is constant");
  }

  // Accumulate over pairs in sorted order so the fit is bitwise invariant
  // to row order.
  std::vector<std::pair<double, double>> pairs(n);
  for (std::size_t i = 0; i < n; ++i) pairs[i] = {x[i], y[i]};
  std::sort(pairs.begin(), pairs.end());

  const double nd = static_cast<double>(n);
  double sx = 0, sy = 0;
  for (const auto& [xi, yi] : pairs) {
    sx += xi;
    sy += yi;
  }
  const double x_bar = sx / nd;
  const double y_bar = sy / nd;
  double sxx = 0, sxy = 0;
  for (const auto& [xi, yi] : pairs) {
    sxx += (xi - x_bar) * (xi - x_bar);
    sxy += (xi - x_bar) * (yi - y_bar);
  }

  LinearFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = y_bar - fit.slope * x_bar;
  fit.fitted.resize(n);
  fit.residuals_raw.resize(n);
  fit.leverages.resize(n);
  double rss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    fit.fitted[i] = fit.intercept + fit.slope * x[i];
    fit.residuals_raw[i] = y[i] - fit.fitted[i];
    fit.leverages[i] = 1.0 / nd + (x[i] - x_bar) * (x[i] - x_bar) / sxx;
  }
  for (const auto& [xi, yi] : pairs) {
    const double e = yi - (fit.intercept + fit.slope * xi);
    rss += e * e;
  }
  fit.sigma_hat = std::sqrt(rss / (nd - 2.0));
  return fit;
}

inline LinearFit fit_ols(const Dataset& ds, std::string_view response,
                         std::string_view predictor) {
  const auto& y = ds.numeric_column(response);
  const auto& x = ds.numeric_column(predictor);
  return fit_ols(x.numbers(), y.numbers());
}

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

struct LogisticFit {
  std::vector<double> coefficients;  // intercept, x, (x - center)^2
  std::vector<double> fitted_probs;
  double deviance = 0;
  bool converged = false;
  int iterations = 0;
  int design_degree = 1;
  double predictor_center = 0;  // mean of x, used by the quadratic column
  std::vector<double> predictor;
  std::vector<double> response;
  std::vector<double> deviance_trace;  // deviance after each accepted step
};

struct IrlsOptions {
  int max_iterations = 50;
  double tolerance = 1e-8;        // max absolute coefficient change
  int max_step_halvings = 10;
  double separation_bound = 30.0;  // |coefficient| beyond this => separation
};

inline double inv_logit(double eta) {
  // Clamped so probabilities stay strictly inside (0, 1).
  constexpr double eps = 1e-12;
  double p = eta >= 0 ? 1.0 / (1.0 + std::exp(-eta))
                      : std::exp(eta) / (1.0 + std::exp(eta));
  return std::clamp(p, eps, 1.0 - eps);
}

inline double bernoulli_deviance(std::span<const double> y,
                                 std::span<const double> p) {
  double dev = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    dev += y[i] * std::log(p[i]) + (1.0 - y[i]) * std::log1p(-p[i]);
  }
  return -2.0 * dev;
}

namespace detail {

// Solves the symmetric positive definite system A b = r (row-major, k x k,
// k <= 3) by Cholesky. Returns false when A is not numerically SPD.
inline bool solve_spd(std::array<double, 9> a, std::array<double, 3> r,
                      std::size_t k, std::array<double, 3>& out) {
  std::array<double, 9> l{};
  for (std::size_t j = 0; j < k; ++j) {
    double d = a[j * k + j];
    for (std::size_t m = 0; m < j; ++m) d -= l[j * k + m] * l[j * k + m];
    if (!(d > 1e-13 * std::max(1.0, std::abs(a[j * k + j])))) return false;
    l[j * k + j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < k; ++i) {
      double s = a[i * k + j];
      for (std::size_t m = 0; m < j; ++m) s -= l[i * k + m] * l[j * k + m];
      l[i * k + j] = s / l[j * k + j];
    }
  }
  std::array<double, 3> z{};
  for (std::size_t i = 0; i < k; ++i) {
    double s = r[i];
    for (std::size_t m = 0; m < i; ++m) s -= l[i * k + m] * z[m];
    z[i] = s / l[i * k + i];
  }
  for (std::size_t ii = k; ii-- > 0;) {
    double s = z[ii];
    for (std::size_t m = ii + 1; m < k; ++m) s -= l[m * k + ii] * out[m];
    out[ii] = s / l[ii * k + ii];
  }
  return true;
}

inline std::array<double, 3> design_row(double x, double center, int degree) {
  return {1.0, x, degree == 2 ? (x - center) * (x - center) : 0.0};
}

}  // namespace detail

inline LogisticFit fit_logistic(std::span<const double> x,
                                std::span<const double> y, int degree,
                                const IrlsOptions& opt = {}) {
  const std::size_t n = x.size();
  if (degree != 1 && degree != 2) {
    throw Error(Errc::invalid_spec, "logistic degree must be 1 or 2");
  }
  if (y.size() != n) {
    throw Error(Errc::ragged_row, "predictor and response lengths differ");
  }
  if (n < 10) {
    throw Error(Errc::too_few_rows,
                "logistic fit needs at least 10 rows, got " + std::to_string(n));
  }
  for (double v : y) {
    if (v != 0.0 && v != 1.0) {
      throw Error(Errc::type_mismatch, "logistic response must be 0/1");
    }
  }
  {
    std::vector<double> distinct(x.begin(), x.end());
    std::sort(distinct.begin(), distinct.end());
    const auto count = static_cast<int>(
        std::unique(distinct.begin(), distinct.end()) - distinct.begin());
    if (count < degree + 1) {
      throw Error(Errc::degenerate_design,
                  count == 1 ? "predictor is constant"
                             : "too few distinct predictor values for degree");
    }
  }

  const auto k = static_cast<std::size_t>(degree + 1);
  double center = 0;
  for (double v : x) center += v;
  center /= static_cast<double>(n);

  std::array<double, 3> beta{};
  std::vector<double> eta(n), p(n);

  auto probabilities = [&](const std::array<double, 3>& b) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = detail::design_row(x[i], center, degree);
      double e = 0;
      for (std::size_t j = 0; j < k; ++j) e += row[j] * b[j];
      eta[i] = e;
      p[i] = inv_logit(e);
    }
    return bernoulli_deviance(y, p);
  };

  LogisticFit fit;
  fit.design_degree = degree;
  fit.predictor_center = center;
  double deviance = probabilities(beta);

  for (int iter = 1; iter <= opt.max_iterations; ++iter) {
    std::array<double, 9> xtwx{};
    std::array<double, 3> xtwz{};
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = detail::design_row(x[i], center, degree);
      const double w = p[i] * (1.0 - p[i]);
      const double z = eta[i] + (y[i] - p[i]) / w;
      for (std::size_t a = 0; a < k; ++a) {
        xtwz[a] += row[a] * w * z;
        for (std::size_t b = 0; b < k; ++b) xtwx[a * k + b] += row[a] * w * row[b];
      }
    }
    std::array<double, 3> next{};
    if (!detail::solve_spd(xtwx, xtwz, k, next)) {
      throw Error(Errc::separation,
                  "weighted normal equations became singular at iteration " +
                      std::to_string(iter));
    }

    double next_deviance = probabilities(next);
    const double slack = 1e-10 * (1.0 + std::abs(deviance));
    int halvings = 0;
    while (!(next_deviance <= deviance + slack)) {
      if (halvings == opt.max_step_halvings) {
        throw Error(Errc::separation,
                    "deviance failed to decrease after step halving");
      }
      for (std::size_t j = 0; j < k; ++j) next[j] = 0.5 * (next[j] + beta[j]);
      next_deviance = probabilities(next);
      ++halvings;
    }

    double change = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (std::abs(next[j]) > opt.separation_bound) {
        throw Error(Errc::separation,
                    "coefficient diverged past " +
                        std::to_string(opt.separation_bound) +
                        " (complete or quasi-complete separation)");
      }
      change = std::max(change, std::abs(next[j] - beta[j]));
    }
    beta = next;
    deviance = next_deviance;
    fit.deviance_trace.push_back(deviance);
    fit.iterations = iter;
    if (change < opt.tolerance) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) {
    throw Error(Errc::separation,
                "IRLS did not converge in " +
                    std::to_string(opt.max_iterations) + " iterations");
  }

  fit.coefficients.assign(beta.begin(), beta.begin() + static_cast<long>(k));
  fit.fitted_probs = p;
  fit.deviance = deviance;
  fit.predictor.assign(x.begin(), x.end());
  fit.response.assign(y.begin(), y.end());
  return fit;
}

inline LogisticFit fit_logistic(const Dataset& ds, std::string_view response,
                                std::string_view predictor, int degree,
                                const IrlsOptions& opt = {}) {
  const auto& y = ds.binary_column(response);
  const auto& x = ds.numeric_column(predictor);
  return fit_logistic(x.numbers(), y.numbers(), degree, opt);
}

// ---------------------------------------------------------------------------
// Residuals
// ---------------------------------------------------------------------------

enum class ResidualKind { raw, standardized, pearson, deviance };

constexpr std::string_view to_string(ResidualKind kind) noexcept {
  switch (kind) {
    case ResidualKind::raw: return "raw";
    case ResidualKind::standardized: return "standardized";
    case ResidualKind::pearson: return "pearson";
    case ResidualKind::deviance: return "deviance";
  }
  return "unknown";
}

inline std::vector<double> residuals(const LinearFit& fit, ResidualKind kind) {
  switch (kind) {
    case ResidualKind::raw:
      return fit.residuals_raw;
    case ResidualKind::standardized: {
      std::vector<double> out(fit.n, 0.0);
      if (has_degenerate_sigma(fit)) return out;
      for (std::size_t i = 0; i < fit.n; ++i) {
        const double room = 1.0 - fit.leverages[i];
        out[i] = room > 0 ? fit.residuals_raw[i] / (fit.sigma_hat * std::sqrt(room))
                          : 0.0;
      }
      return out;
    }
    default:
      throw Error(Errc::kind_mismatch,
                  std::string(to_string(kind)) +
                      " residuals are not defined for a linear fit");
  }
}

inline double pearson_residual(double y, double p) {
  return (y - p) / std::sqrt(p * (1.0 - p));
}

inline double deviance_residual(double y, double p) {
  const double contribution = y * std::log(p) + (1.0 - y) * std::log1p(-p);
  const double mag = std::sqrt(std::max(0.0, -2.0 * contribution));
  return y > p ? mag : -mag;
}

inline std::vector<double> residuals(const LogisticFit& fit, ResidualKind kind) {
  const std::size_t n = fit.fitted_probs.size();
  std::vector<double> out(n);
  switch (kind) {
    case ResidualKind::pearson:
      for (std::size_t i = 0; i < n; ++i) {
        out[i] = pearson_residual(fit.response[i], fit.fitted_probs[i]);
      }
      return out;
    case ResidualKind::deviance:
      for (std::size_t i = 0; i < n; ++i) {
        out[i] = deviance_residual(fit.response[i], fit.fitted_probs[i]);
      }
      return out;
    default:
      throw Error(Errc::kind_mismatch,
                  std::string(to_string(kind)) +
                      " residuals are not defined for a logistic fit");
  }
}

// ---------------------------------------------------------------------------
// Demo data
// ---------------------------------------------------------------------------

struct QuadraticLogitCoefficients {
  double b0 = 0;
  double b1 = 0;
  double b2 = 0;
};

// x ~ Uniform[lo, hi], y ~ Bernoulli(inv_logit(b0 + b1 x + b2 x^2)).
// Columns "x" (numeric) and "y" (binary).
inline Dataset simulate_demo_logistic(std::size_t n,
                                      QuadraticLogitCoefficients beta,
                                      std::pair<double, double> x_range,
                                      std::uint64_t seed) {
  const auto [lo, hi] = x_range;
  if (n < 20) {
    throw Error(Errc::too_few_rows, "demo data needs n >= 20");
  }
  if (!(lo < hi)) {
    throw Error(Errc::invalid_spec, "demo data needs lo < hi");
  }
  RandomStream rng(seed);
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * rng.uniform01();
    const double eta = beta.b0 + beta.b1 * x + beta.b2 * x * x;
    xs[i] = x;
    ys[i] = rng.bernoulli(inv_logit(eta)) ? 1.0 : 0.0;
  }
  std::vector<Column> cols;
  cols.push_back(Column::numeric("x", std::move(xs)));
  cols.push_back(Column::binary("y", std::move(ys)));
  return Dataset("demo_logistic", std::move(cols));
}

}  // namespace lineup
