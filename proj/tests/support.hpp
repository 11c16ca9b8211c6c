#pragma once

// Shared test helpers and independent oracles. Oracles here deliberately
// share no code with the library: they use Eigen, Boost.Math or plain
// enumeration so a bug in the library cannot hide in both places.

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "lineup/all.hpp"

namespace testing_support {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "lineup-test-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// Dense Newton-Raphson for logistic regression, written against Eigen.
// Same design as the library: (1, x) or (1, x, (x - mean)^2).
struct NewtonResult {
  Eigen::VectorXd beta;
  bool converged = false;
};

inline NewtonResult newton_logistic(const std::vector<double>& x,
                                    const std::vector<double>& y, int degree) {
  const auto n = static_cast<Eigen::Index>(x.size());
  const Eigen::Index k = degree + 1;
  double xbar = 0;
  for (double v : x) xbar += v;
  xbar /= static_cast<double>(x.size());

  Eigen::MatrixXd X(n, k);
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = x[static_cast<std::size_t>(i)];
    if (degree == 2) {
      const double c = x[static_cast<std::size_t>(i)] - xbar;
      X(i, 2) = c * c;
    }
    Y(i) = y[static_cast<std::size_t>(i)];
  }
  NewtonResult r;
  r.beta = Eigen::VectorXd::Zero(k);
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd eta = X * r.beta;
    Eigen::VectorXd p(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = 1.0 / (1.0 + std::exp(-eta(i)));
      w(i) = p(i) * (1.0 - p(i));
    }
    const Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X;
    const Eigen::VectorXd g = X.transpose() * (Y - p);
    const Eigen::VectorXd step = H.ldlt().solve(g);
    r.beta += step;
    if (step.cwiseAbs().maxCoeff() < 1e-13) {
      r.converged = true;
      break;
    }
  }
  return r;
}

// P(X >= x) for X ~ Binomial(K, 1/m) by summing over all 2^K outcome
// sequences.
inline double enumerated_upper_tail(unsigned x, unsigned K, unsigned m) {
  const long double q = 1.0L / m;
  long double tail = 0;
  for (std::uint32_t mask = 0; mask < (1u << K); ++mask) {
    const auto hits = static_cast<unsigned>(__builtin_popcount(mask));
    if (hits < x) continue;
    tail += std::pow(q, static_cast<long double>(hits)) *
            std::pow(1.0L - q, static_cast<long double>(K - hits));
  }
  return static_cast<double>(tail);
}

inline double boost_normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

inline double boost_chi2_quantile(double df, double p) {
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(df), p);
}

// Scores for the deficiency harness: mean absolute binned residual.
// Largest r with r * r <= n, by counting up.
inline std::size_t floor_sqrt_oracle(std::size_t n) {
  std::size_t r = 0;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

inline double mean_abs_bin_residual(const lineup::PanelData& p) {
  const auto& b = std::get<lineup::BinnedResidualPoints>(p.payload);
  double s = 0;
  for (const auto& pt : b.points) s += std::abs(pt.mean_residual);
  return s / static_cast<double>(b.points.size());
}

inline lineup::Dataset two_group_data() {
  return lineup::parse_csv(
      "score,motivation\n"
      "12.0,extrinsic\n15.5,extrinsic\n17.1,extrinsic\n11.3,extrinsic\n"
      "14.8,extrinsic\n16.0,extrinsic\n19.2,intrinsic\n21.4,intrinsic\n"
      "18.9,intrinsic\n22.7,intrinsic\n20.3,intrinsic\n17.8,intrinsic\n",
      "cw");
}

inline lineup::Dataset linear_data(std::size_t n, std::uint64_t seed) {
  lineup::RandomStream rng(seed);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = 10.0 * rng.uniform01();
    y[i] = 1.5 + 0.7 * x[i] + rng.normal(0.0, 1.0);
  }
  std::vector<lineup::Column> cols;
  cols.push_back(lineup::Column::numeric("x", std::move(x)));
  cols.push_back(lineup::Column::numeric("y", std::move(y)));
  return lineup::Dataset("linear", std::move(cols));
}

inline lineup::Dataset normal_data(std::size_t n, std::uint64_t seed) {
  lineup::RandomStream rng(seed);
  std::vector<double> v(n);
  for (auto& e : v) e = rng.normal(50.0, 8.0);
  std::vector<lineup::Column> cols;
  cols.push_back(lineup::Column::numeric("height", std::move(v)));
  return lineup::Dataset("heights", std::move(cols));
}

}  // namespace testing_support
