#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "support.hpp"

using namespace lineup;
namespace ts = testing_support;

namespace {

Dataset five_rows() {
  return parse_csv("y,g,id\n1,a,p\n2,a,q\n3,a,r\n4,b,s\n5,b,t\n");
}

std::vector<double> as_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

// --- permute_groups --------------------------------------------------------

TEST(PermuteGroups, PreservesSizesAndMultiset) {
  const auto ds = five_rows();
  RandomStream rng(1);
  const auto out = permute_groups(ds, "y", "g", rng);
  const auto g = out.column("g").labels();
  EXPECT_EQ(std::count(g.begin(), g.end(), "a"), 3);
  EXPECT_EQ(std::count(g.begin(), g.end(), "b"), 2);
  auto y = as_vec(out.column("y").numbers());
  std::sort(y.begin(), y.end());
  EXPECT_EQ(y, (std::vector<double>{1, 2, 3, 4, 5}));
  EXPECT_EQ(out.column("id"), ds.column("id"));
  EXPECT_EQ(out.column("g"), ds.column("g"));
}

TEST(PermuteGroups, Deterministic) {
  const auto ds = five_rows();
  RandomStream a(42), b(42);
  EXPECT_EQ(permute_groups(ds, "y", "g", a), permute_groups(ds, "y", "g", b));
}

TEST(PermuteGroups, AssignmentsAreUniform) {
  // Which three values land in group "a": C(5,3) = 10 equally likely sets.
  const auto ds = five_rows();
  std::map<std::vector<double>, int> freq;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    RandomStream rng(seed);
    const auto out = permute_groups(ds, "y", "g", rng);
    auto y = as_vec(out.column("y").numbers());
    std::vector<double> a(y.begin(), y.begin() + 3);
    std::sort(a.begin(), a.end());
    ++freq[a];
  }
  ASSERT_EQ(freq.size(), 10u);
  for (const auto& [set, count] : freq) {
    EXPECT_NEAR(count / 2000.0, 0.1, 0.03);
  }
}

TEST(PermuteGroups, SingleLevelIsDegenerate) {
  const auto ds = parse_csv("y,g\n1,a\n2,a\n3,a\n");
  RandomStream rng(1);
  try {
    permute_groups(ds, "y", "g", rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_groups);
  }
}

TEST(PermuteGroups, GroupMeanDifferenceCenteredAtZero) {
  const auto ds = parse_csv(lineup::io::read_file(LINEUP_SOURCE_DIR "/data/creative_writing.csv"));
  const auto g = ds.column("motivation").labels();
  std::vector<double> diffs;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    RandomStream rng(seed);
    const auto out = permute_groups(ds, "score", "motivation", rng);
    const auto y = out.column("score").numbers();
    double sa = 0, sb = 0;
    int na = 0, nb = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (g[i] == "intrinsic") {
        sa += y[i];
        ++na;
      } else {
        sb += y[i];
        ++nb;
      }
    }
    diffs.push_back(sa / na - sb / nb);
  }
  const double m = mean_of(diffs);
  const double se = sample_sd(diffs) / std::sqrt(static_cast<double>(diffs.size()));
  EXPECT_LT(std::abs(m), 4 * se);
}

// --- parametric_bootstrap_lm ------------------------------------------------

TEST(ParametricBootstrap, UnbiasedAroundFitted) {
  const auto ds = ts::linear_data(20, 9);
  const auto fit = fit_ols(ds, "y", "x");
  std::vector<double> sums(fit.n, 0.0);
  for (std::uint64_t r = 0; r < 1000; ++r) {
    RandomStream rng = RandomStream::substream(5, r);
    const auto out = parametric_bootstrap_lm(fit, ds, "y", rng);
    const auto y = out.column("y").numbers();
    for (std::size_t i = 0; i < fit.n; ++i) sums[i] += y[i];
    if (r == 0) {
      EXPECT_EQ(out.column("x"), ds.column("x"));
    }
  }
  for (std::size_t i = 0; i < fit.n; ++i) {
    EXPECT_NEAR(sums[i] / 1000.0, fit.fitted[i], 4 * fit.sigma_hat / std::sqrt(1000.0));
  }
}

TEST(ParametricBootstrap, NoiseScaleMatchesSigma) {
  const auto ds = ts::linear_data(200, 10);
  const auto fit = fit_ols(ds, "y", "x");
  RandomStream rng(77);
  const auto out = parametric_bootstrap_lm(fit, ds, "y", rng);
  const auto y = out.column("y").numbers();
  std::vector<double> e(fit.n);
  for (std::size_t i = 0; i < fit.n; ++i) e[i] = y[i] - fit.fitted[i];
  EXPECT_NEAR(sample_sd(e), fit.sigma_hat, 0.15 * fit.sigma_hat);
}

TEST(ParametricBootstrap, DeterministicAndDegenerate) {
  const auto ds = ts::linear_data(30, 1);
  const auto fit = fit_ols(ds, "y", "x");
  RandomStream a(3), b(3);
  EXPECT_EQ(parametric_bootstrap_lm(fit, ds, "y", a), parametric_bootstrap_lm(fit, ds, "y", b));

  const auto exact = parse_csv("x,y\n1,3\n2,5\n3,7\n4,9\n");
  const auto f0 = fit_ols(exact, "y", "x");
  try {
    parametric_bootstrap_lm(f0, exact, "y", a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_fit);
  }
}

// --- simulate_logistic_null -------------------------------------------------

TEST(SimulateLogisticNull, SaturatedProbabilitiesGiveAllOnes) {
  const auto ds = simulate_demo_logistic(60, {0, 1, 0}, {-2, 2}, 3);
  auto fit = fit_logistic(ds, "y", "x", 1);
  // Intercept-30 scenario: p-hat = inv_logit(30) for every row.
  std::fill(fit.fitted_probs.begin(), fit.fitted_probs.end(), inv_logit(30.0));
  RandomStream rng(5);
  const auto out = simulate_logistic_null(fit, ds, "y", rng);
  for (double v : out.column("y").numbers()) EXPECT_EQ(v, 1.0);
}

TEST(SimulateLogisticNull, MeanMatchesFittedProbabilities) {
  const auto ds = simulate_demo_logistic(80, {0.3, 1.2, 0}, {-2, 2}, 6);
  const auto fit = fit_logistic(ds, "y", "x", 1);
  const double n = 80;
  double total = 0;
  for (std::uint64_t r = 0; r < 500; ++r) {
    RandomStream rng = RandomStream::substream(17, r);
    total += mean_of(simulate_logistic_null(fit, ds, "y", rng).column("y").numbers());
  }
  EXPECT_NEAR(total / 500.0, mean_of(fit.fitted_probs), 4 * std::sqrt(0.25 / (500 * n)));
}

TEST(SimulateLogisticNull, DeterministicAndRequiresConvergence) {
  const auto ds = simulate_demo_logistic(40, {0, 1, 0}, {-2, 2}, 8);
  auto fit = fit_logistic(ds, "y", "x", 1);
  RandomStream a(9), b(9);
  const auto out = simulate_logistic_null(fit, ds, "y", a);
  EXPECT_EQ(out, simulate_logistic_null(fit, ds, "y", b));
  EXPECT_EQ(out.column("x"), ds.column("x"));
  EXPECT_EQ(out.column("y").kind(), ColumnKind::binary);
  fit.converged = false;
  try {
    simulate_logistic_null(fit, ds, "y", a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_fit);
  }
}

// --- simulate_normal_null ---------------------------------------------------

TEST(SimulateNormalNull, ShapeAndMean) {
  auto ds = ts::normal_data(30, 4);
  ds = Dataset("h", {ds.column("height"), Column::categorical("tag", std::vector<std::string>(30, "k"))});
  const auto v = ds.column("height").numbers();
  const double mean = mean_of(v), sd = sample_sd(v);
  double total = 0;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    RandomStream rng = RandomStream::substream(2, r);
    const auto out = simulate_normal_null(ds, "height", rng);
    ASSERT_EQ(out.n_rows(), 30u);
    if (r == 0) {
      EXPECT_EQ(out.column("tag"), ds.column("tag"));
    }
    total += mean_of(out.column("height").numbers());
  }
  EXPECT_NEAR(total / 1000.0, mean, 4 * sd / std::sqrt(1000.0 * 30));
}

TEST(SimulateNormalNull, DeterministicAndDegenerate) {
  const auto ds = ts::normal_data(12, 3);
  RandomStream a(1), b(1);
  EXPECT_EQ(simulate_normal_null(ds, "height", a), simulate_normal_null(ds, "height", b));
  const auto flat = parse_csv("v\n2\n2\n2\n");
  try {
    simulate_normal_null(flat, "v", a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_column);
  }
}

TEST(Substreams, DistinctPanelsNeverCoincide) {
  const auto ds = ts::normal_data(25, 12);
  for (std::uint64_t master : {0ull, 1ull, 42ull, 0xFFFFFFFFFFFFFFFFull, 0x123456789ABCDEFull}) {
    std::vector<Dataset> outs;
    for (std::uint64_t panel = 1; panel <= 20; ++panel) {
      RandomStream rng = RandomStream::substream(master, panel);
      outs.push_back(simulate_normal_null(ds, "height", rng));
    }
    for (std::size_t i = 0; i < outs.size(); ++i) {
      for (std::size_t j = i + 1; j < outs.size(); ++j) EXPECT_NE(outs[i], outs[j]);
    }
  }
}
