#pragma once

// Null dataset generators. Each returns a copy of the input table in which
// only the response column differs.

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lineup/dataset.hpp"
#include "lineup/error.hpp"
#include "lineup/models.hpp"
#include "lineup/random.hpp"

namespace lineup {

struct PermuteGroups {
  std::string response;
  std::string group;
  friend bool operator==(const PermuteGroups&, const PermuteGroups&) = default;
};

struct ParametricBootstrapLM {
  std::string response;
  std::string predictor;
  friend bool operator==(const ParametricBootstrapLM&,
                         const ParametricBootstrapLM&) = default;
};

struct SimulateLogistic {
  std::string response;
  std::string predictor;
  int degree = 1;
  friend bool operator==(const SimulateLogistic&,
                         const SimulateLogistic&) = default;
};

struct SimulateNormal {
  std::string column;
  friend bool operator==(const SimulateNormal&, const SimulateNormal&) = default;
};

using NullMethod =
    std::variant<PermuteGroups, ParametricBootstrapLM, SimulateLogistic,
                 SimulateNormal>;

// Shuffles the response against fixed group labels (Fisher-Yates).
inline Dataset permute_groups(const Dataset& ds, std::string_view response,
                              std::string_view group, RandomStream& rng) {
  const auto& y = ds.numeric_column(response);
  const auto& g = ds.categorical_column(group);
  if (g.levels().size() < 2) {
    throw Error(Errc::degenerate_groups,
                "group column '" + g.name() + "' has a single level");
  }
  std::vector<double> shuffled(y.numbers().begin(), y.numbers().end());
  rng.shuffle(std::span<double>(shuffled));
  return ds.with_column(y.with_numbers(std::move(shuffled)));
}

inline Dataset parametric_bootstrap_lm(const LinearFit& fit, const Dataset& ds,
                                       std::string_view response,
                                       RandomStream& rng) {
  const auto& y = ds.numeric_column(response);
  if (fit.n != ds.n_rows() || fit.fitted.size() != ds.n_rows()) {
    throw Error(Errc::invalid_fit, "fit does not match the dataset");
  }
  if (has_degenerate_sigma(fit)) {
    throw Error(Errc::degenerate_fit,
                "residual standard error is zero; bootstrap nulls would be "
                "identical to the data");
  }
  std::vector<double> simulated(fit.n);
  for (std::size_t i = 0; i < fit.n; ++i) {
    simulated[i] = rng.normal(fit.fitted[i], fit.sigma_hat);
  }
  return ds.with_column(Column::numeric(y.name(), std::move(simulated)));
}

inline Dataset simulate_logistic_null(const LogisticFit& fit, const Dataset& ds,
                                      std::string_view response,
                                      RandomStream& rng) {
  const auto& y = ds.numeric_column(response);
  if (!fit.converged) {
    throw Error(Errc::invalid_fit, "logistic fit did not converge");
  }
  if (fit.fitted_probs.size() != ds.n_rows()) {
    throw Error(Errc::invalid_fit, "fit does not match the dataset");
  }
  std::vector<double> simulated(ds.n_rows());
  for (std::size_t i = 0; i < simulated.size(); ++i) {
    simulated[i] = rng.bernoulli(fit.fitted_probs[i]) ? 1.0 : 0.0;
  }
  return ds.with_column(Column::binary(y.name(), std::move(simulated)));
}

inline Dataset simulate_normal_null(const Dataset& ds, std::string_view column,
                                    RandomStream& rng) {
  const auto& c = ds.numeric_column(column);
  if (ds.n_rows() < 3) {
    throw Error(Errc::too_few_rows, "normal null needs at least 3 rows");
  }
  const double mean = mean_of(c.numbers());
  const double sd = sample_sd(c.numbers());
  if (!(sd > 0)) {
    throw Error(Errc::degenerate_column,
                "column '" + c.name() + "' has zero standard deviation");
  }
  std::vector<double> simulated(ds.n_rows());
  for (auto& v : simulated) v = rng.normal(mean, sd);
  return ds.with_column(Column::numeric(c.name(), std::move(simulated)));
}

}  // namespace lineup
