#pragma once

// Lineup assembly: one observed panel hidden at a seeded random position
// among null panels, an answer key sealed with a digest, and the binomial
// visual p-value used to score observer picks.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <variant>
#include <vector>

#include "json.hpp"
#include "lineup/dataset.hpp"
#include "lineup/diagnostics.hpp"
#include "lineup/error.hpp"
#include "lineup/models.hpp"
#include "lineup/nulls.hpp"
#include "lineup/panel.hpp"
#include "lineup/random.hpp"
#include "lineup/sha256.hpp"

namespace lineup {

inline constexpr std::size_t kDefaultPanels = 20;
inline constexpr std::size_t kMinPanels = 2;
inline constexpr std::size_t kMaxPanels = 100;
inline constexpr int kNullRetries = 10;

struct ModelParams {
  std::optional<std::size_t> n_bins;  // binned_residual; default floor(sqrt(n))
  std::size_t groups = 5;             // empirical_logit bin count
  BinAxis axis = BinAxis::fitted;     // binned_residual x-axis
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct LineupSpec {
  PlotKind plot_kind = PlotKind::boxplot;
  NullMethod null_method;
  std::size_t m = kDefaultPanels;
  std::uint64_t seed = 0;
  bool rorschach = false;
  ModelParams params;
  std::string claim;  // free-text hypothesis statement, carried verbatim
  friend bool operator==(const LineupSpec&, const LineupSpec&) = default;
};

struct AnswerKey {
  std::optional<std::size_t> data_panel;  // absent for Rorschach lineups
  std::uint64_t seed = 0;
  std::string digest;  // hex SHA-256 of seed (8 bytes BE) || panel (4 bytes BE)
  friend bool operator==(const AnswerKey&, const AnswerKey&) = default;
};

struct LineupBundle {
  LineupSpec spec;
  std::vector<PanelData> panels;
  AnswerKey key;
  std::optional<std::string> created;  // RFC 3339, stamped by the caller
  friend bool operator==(const LineupBundle&, const LineupBundle&) = default;
};

// ---------------------------------------------------------------------------
// Spec validation
// ---------------------------------------------------------------------------

// Compatibility table between plot kinds and null mechanisms.
inline bool compatible(PlotKind kind, const NullMethod& method) {
  switch (kind) {
    case PlotKind::boxplot:
      return std::holds_alternative<PermuteGroups>(method);
    case PlotKind::scatter_residual:
      return std::holds_alternative<ParametricBootstrapLM>(method);
    case PlotKind::binned_residual:
    case PlotKind::empirical_logit:
      return std::holds_alternative<SimulateLogistic>(method);
    case PlotKind::qq:
      return std::holds_alternative<SimulateNormal>(method);
  }
  return false;
}

// The null method a plot kind pairs with, built from column names.
inline NullMethod default_null_method(PlotKind kind, const std::string& response,
                                      const std::string& predictor,
                                      const std::string& group, int degree) {
  switch (kind) {
    case PlotKind::boxplot: return PermuteGroups{response, group};
    case PlotKind::scatter_residual: return ParametricBootstrapLM{response, predictor};
    case PlotKind::binned_residual:
    case PlotKind::empirical_logit:
      return SimulateLogistic{response, predictor, degree};
    case PlotKind::qq: return SimulateNormal{response};
  }
  throw Error(Errc::invalid_spec, "unknown plot kind");
}

inline void validate(const LineupSpec& spec) {
  if (spec.m < kMinPanels || spec.m > kMaxPanels) {
    throw Error(Errc::invalid_spec, "panel count m must be in [2, 100], got " +
                                        std::to_string(spec.m));
  }
  if (!compatible(spec.plot_kind, spec.null_method)) {
    throw Error(Errc::incompatible_spec,
                "plot kind '" + std::string(to_string(spec.plot_kind)) +
                    "' cannot be paired with this null method");
  }
  if (const auto* s = std::get_if<SimulateLogistic>(&spec.null_method)) {
    if (s->degree != 1 && s->degree != 2) {
      throw Error(Errc::invalid_spec, "logistic degree must be 1 or 2");
    }
  }
  if (spec.params.n_bins && *spec.params.n_bins < 2) {
    throw Error(Errc::invalid_spec, "n_bins must be at least 2");
  }
  if (spec.params.groups < 2) {
    throw Error(Errc::invalid_spec, "groups must be at least 2");
  }
}

inline void validate(const LineupSpec& spec, const Dataset& ds) {
  validate(spec);
  std::visit(
      [&](const auto& method) {
        using M = std::decay_t<decltype(method)>;
        if constexpr (std::is_same_v<M, PermuteGroups>) {
          ds.numeric_column(method.response);
          ds.categorical_column(method.group);
        } else if constexpr (std::is_same_v<M, ParametricBootstrapLM>) {
          ds.numeric_column(method.response);
          ds.numeric_column(method.predictor);
        } else if constexpr (std::is_same_v<M, SimulateLogistic>) {
          ds.binary_column(method.response);
          ds.numeric_column(method.predictor);
        } else {
          ds.numeric_column(method.column);
        }
      },
      spec.null_method);
}

// ---------------------------------------------------------------------------
// Answer keys
// ---------------------------------------------------------------------------

inline std::string key_digest(std::uint64_t seed,
                              std::optional<std::size_t> data_panel) {
  std::array<std::uint8_t, 12> msg{};
  for (int i = 0; i < 8; ++i) {
    msg[static_cast<std::size_t>(i)] =
        static_cast<std::uint8_t>(seed >> (56 - 8 * i));
  }
  const auto panel = static_cast<std::uint32_t>(data_panel.value_or(0));
  for (int i = 0; i < 4; ++i) {
    msg[static_cast<std::size_t>(8 + i)] =
        static_cast<std::uint8_t>(panel >> (24 - 8 * i));
  }
  return sha256_hex(msg);
}

inline AnswerKey make_key(std::uint64_t seed,
                          std::optional<std::size_t> data_panel) {
  return {data_panel, seed, key_digest(seed, data_panel)};
}

inline bool verify(const AnswerKey& key) {
  return key.digest == key_digest(key.seed, key.data_panel);
}

inline std::size_t reveal(const LineupBundle& bundle, const AnswerKey& key) {
  if (bundle.spec.rorschach) {
    throw Error(Errc::no_data_panel,
                "Rorschach lineup: every panel is a null plot");
  }
  if (!verify(key)) {
    throw Error(Errc::key_tampered, "answer key digest does not verify");
  }
  if (key.seed != bundle.spec.seed) {
    throw Error(Errc::key_mismatch, "answer key belongs to a different lineup");
  }
  if (!key.data_panel) {
    throw Error(Errc::no_data_panel, "answer key has no data panel");
  }
  return *key.data_panel;
}

// ---------------------------------------------------------------------------
// Building
// ---------------------------------------------------------------------------

// Data panel position, uniform on 1..m, drawn from the lineup-level stream.
inline std::size_t draw_data_panel(std::uint64_t seed, std::size_t m) {
  auto rng = RandomStream::substream(seed, 0);
  return static_cast<std::size_t>(rng.uniform_index(m)) + 1;
}

namespace detail {

struct PanelRecipe {
  PanelPayload observed;
  std::function<PanelPayload(RandomStream&)> null_panel;
};

inline PanelRecipe make_recipe(const Dataset& ds, const LineupSpec& spec) {
  const auto& params = spec.params;
  switch (spec.plot_kind) {
    case PlotKind::boxplot: {
      const auto method = std::get<PermuteGroups>(spec.null_method);
      return {boxplot_stats(ds, method.response, method.group),
              [&ds, method](RandomStream& rng) -> PanelPayload {
                return boxplot_stats(
                    permute_groups(ds, method.response, method.group, rng),
                    method.response, method.group);
              }};
    }
    case PlotKind::scatter_residual: {
      const auto method = std::get<ParametricBootstrapLM>(spec.null_method);
      auto fit = fit_ols(ds, method.response, method.predictor);
      auto observed = residual_scatter(fit);
      return {std::move(observed),
              [&ds, method, fit = std::move(fit)](RandomStream& rng) -> PanelPayload {
                const auto null_ds =
                    parametric_bootstrap_lm(fit, ds, method.response, rng);
                return residual_scatter(
                    fit_ols(null_ds, method.response, method.predictor));
              }};
    }
    case PlotKind::binned_residual: {
      const auto method = std::get<SimulateLogistic>(spec.null_method);
      auto fit = fit_logistic(ds, method.response, method.predictor, method.degree);
      auto observed = binned_residuals(fit, params.axis, params.n_bins);
      return {std::move(observed),
              [&ds, method, params, fit = std::move(fit)](RandomStream& rng)
                  -> PanelPayload {
                const auto null_ds =
                    simulate_logistic_null(fit, ds, method.response, rng);
                const auto refit = fit_logistic(null_ds, method.response,
                                                method.predictor, method.degree);
                return binned_residuals(refit, params.axis, params.n_bins);
              }};
    }
    case PlotKind::empirical_logit: {
      const auto method = std::get<SimulateLogistic>(spec.null_method);
      auto fit = fit_logistic(ds, method.response, method.predictor, method.degree);
      auto observed =
          empirical_logit(ds, method.response, method.predictor, params.groups);
      return {std::move(observed),
              [&ds, method, params, fit = std::move(fit)](RandomStream& rng)
                  -> PanelPayload {
                const auto null_ds =
                    simulate_logistic_null(fit, ds, method.response, rng);
                return empirical_logit(null_ds, method.response, method.predictor,
                                       params.groups);
              }};
    }
    case PlotKind::qq: {
      const auto method = std::get<SimulateNormal>(spec.null_method);
      return {qq_points(ds.numeric_column(method.column).numbers()),
              [&ds, method](RandomStream& rng) -> PanelPayload {
                const auto null_ds = simulate_normal_null(ds, method.column, rng);
                return qq_points(null_ds.numeric_column(method.column).numbers());
              }};
    }
  }
  throw Error(Errc::invalid_spec, "unknown plot kind");
}

}  // namespace detail

// One null panel drawn from the stream of display position `panel`. A draw
// whose refit fails is retried from the same stream up to kNullRetries times.
inline PanelPayload generate_null_panel(
    const std::function<PanelPayload(RandomStream&)>& null_panel,
    std::uint64_t seed, std::size_t panel) {
  auto rng = RandomStream::substream(seed, panel);
  std::string last_error;
  for (int attempt = 0; attempt <= kNullRetries; ++attempt) {
    try {
      return null_panel(rng);
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  throw Error(Errc::null_generation_failed,
              "null panel " + std::to_string(panel) + " failed after " +
                  std::to_string(kNullRetries) + " retries: " + last_error,
              panel);
}

inline LineupBundle build_lineup(const Dataset& ds, const LineupSpec& spec,
                                 std::optional<std::string> created = {}) {
  validate(spec, ds);
  auto recipe = detail::make_recipe(ds, spec);

  std::optional<std::size_t> data_panel;
  if (!spec.rorschach) data_panel = draw_data_panel(spec.seed, spec.m);

  LineupBundle bundle;
  bundle.spec = spec;
  bundle.created = std::move(created);
  bundle.panels.reserve(spec.m);
  for (std::size_t i = 1; i <= spec.m; ++i) {
    if (data_panel == i) {
      bundle.panels.push_back({i, recipe.observed});
    } else {
      bundle.panels.push_back(
          {i, generate_null_panel(recipe.null_panel, spec.seed, i)});
    }
  }
  bundle.key = make_key(spec.seed, data_panel);
  return bundle;
}

// ---------------------------------------------------------------------------
// Visual p-value
// ---------------------------------------------------------------------------

struct VisualPValue {
  std::size_t observers = 0;  // K
  std::size_t correct = 0;    // x
  std::size_t m = 0;
  double p = 1.0;
};

// P(X = k) for X ~ Binomial(trials, prob).
inline double binomial_pmf(std::size_t k, std::size_t trials, double prob) {
  if (trials <= 1000) {
    double coef = 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
      coef = coef * static_cast<double>(trials - k + i) / static_cast<double>(i);
    }
    return coef * std::pow(prob, static_cast<double>(k)) *
           std::pow(1.0 - prob, static_cast<double>(trials - k));
  }
  const double kk = static_cast<double>(k);
  const double nn = static_cast<double>(trials);
  return std::exp(std::lgamma(nn + 1) - std::lgamma(kk + 1) -
                  std::lgamma(nn - kk + 1) + kk * std::log(prob) +
                  (nn - kk) * std::log1p(-prob));
}

// P(X >= correct) for X ~ Binomial(observers, 1/m), by direct summation of
// the pmf from the far tail inward.
inline VisualPValue visual_p_value(std::size_t correct, std::size_t observers,
                                   std::size_t m) {
  if (observers < 1 || m < 2 || correct > observers) {
    throw Error(Errc::bad_counts,
                "need 0 <= x <= K, K >= 1, m >= 2 (x=" + std::to_string(correct) +
                    ", K=" + std::to_string(observers) +
                    ", m=" + std::to_string(m) + ")");
  }
  VisualPValue v{observers, correct, m, 1.0};
  if (correct == 0) return v;
  const double prob = 1.0 / static_cast<double>(m);
  double tail = 0.0;
  for (std::size_t k = observers + 1; k-- > correct;) {
    tail += binomial_pmf(k, observers, prob);
  }
  v.p = std::min(tail, 1.0);
  return v;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline Json to_json(const NullMethod& method) {
  return std::visit(
      [](const auto& m) -> Json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, PermuteGroups>) {
          return {{"type", "permute_groups"},
                  {"response", m.response},
                  {"group", m.group}};
        } else if constexpr (std::is_same_v<M, ParametricBootstrapLM>) {
          return {{"type", "parametric_bootstrap_lm"},
                  {"response", m.response},
                  {"predictor", m.predictor}};
        } else if constexpr (std::is_same_v<M, SimulateLogistic>) {
          return {{"type", "simulate_logistic"},
                  {"response", m.response},
                  {"predictor", m.predictor},
                  {"degree", m.degree}};
        } else {
          return {{"type", "simulate_normal"}, {"column", m.column}};
        }
      },
      method);
}

inline Json to_json(const LineupSpec& spec) {
  Json params = {{"n_bins", spec.params.n_bins ? Json(*spec.params.n_bins) : Json()},
                 {"groups", spec.params.groups},
                 {"axis", std::string(to_string(spec.params.axis))}};
  return {{"plot_kind", std::string(to_string(spec.plot_kind))},
          {"null_method", to_json(spec.null_method)},
          {"m", spec.m},
          {"seed", spec.seed},
          {"rorschach", spec.rorschach},
          {"params", std::move(params)},
          {"claim", spec.claim}};
}

namespace detail {

inline std::string json_string(const Json& j, const char* field,
                               const std::string& fallback = {}) {
  if (!j.contains(field) || j.at(field).is_null()) return fallback;
  if (!j.at(field).is_string()) {
    throw Error(Errc::invalid_spec, std::string(field) + " must be a string");
  }
  return j.at(field).get<std::string>();
}

inline std::uint64_t json_u64(const Json& j, const char* field,
                              std::uint64_t fallback) {
  if (!j.contains(field) || j.at(field).is_null()) return fallback;
  const auto& v = j.at(field);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc{} && ptr == s.data() + s.size() && !s.empty()) return out;
  }
  throw Error(Errc::invalid_spec,
              std::string(field) + " must be a non-negative integer");
}

}  // namespace detail

// Accepts the document produced by to_json(LineupSpec). When "null_method"
// is absent it is inferred from the plot kind and top-level "response",
// "predictor", "group" and "degree" fields.
inline LineupSpec spec_from_json(const Json& j) {
  if (!j.is_object()) throw Error(Errc::invalid_spec, "spec must be a JSON object");
  LineupSpec spec;
  const auto kind_name = detail::json_string(j, "plot_kind");
  const auto kind = plot_kind_from_string(kind_name);
  if (!kind) throw Error(Errc::invalid_spec, "unknown plot_kind '" + kind_name + "'");
  spec.plot_kind = *kind;

  if (j.contains("null_method") && !j.at("null_method").is_null()) {
    const auto& nm = j.at("null_method");
    if (!nm.is_object()) throw Error(Errc::invalid_spec, "null_method must be an object");
    const auto type = detail::json_string(nm, "type");
    const auto degree = static_cast<int>(detail::json_u64(nm, "degree", 1));
    if (type == "permute_groups") {
      spec.null_method = PermuteGroups{detail::json_string(nm, "response"),
                                       detail::json_string(nm, "group")};
    } else if (type == "parametric_bootstrap_lm") {
      spec.null_method = ParametricBootstrapLM{detail::json_string(nm, "response"),
                                               detail::json_string(nm, "predictor")};
    } else if (type == "simulate_logistic") {
      spec.null_method = SimulateLogistic{detail::json_string(nm, "response"),
                                          detail::json_string(nm, "predictor"),
                                          degree};
    } else if (type == "simulate_normal") {
      spec.null_method = SimulateNormal{detail::json_string(nm, "column")};
    } else {
      throw Error(Errc::invalid_spec, "unknown null_method type '" + type + "'");
    }
  } else {
    spec.null_method = default_null_method(
        spec.plot_kind, detail::json_string(j, "response"),
        detail::json_string(j, "predictor"), detail::json_string(j, "group"),
        static_cast<int>(detail::json_u64(j, "degree", 1)));
  }

  spec.m = detail::json_u64(j, "m", kDefaultPanels);
  spec.seed = detail::json_u64(j, "seed", 0);
  if (j.contains("rorschach") && !j.at("rorschach").is_null()) {
    if (!j.at("rorschach").is_boolean()) {
      throw Error(Errc::invalid_spec, "rorschach must be a boolean");
    }
    spec.rorschach = j.at("rorschach").get<bool>();
  }
  if (j.contains("params") && j.at("params").is_object()) {
    const auto& p = j.at("params");
    if (p.contains("n_bins") && !p.at("n_bins").is_null()) {
      spec.params.n_bins = detail::json_u64(p, "n_bins", 0);
    }
    spec.params.groups = detail::json_u64(p, "groups", 5);
    const auto axis = detail::json_string(p, "axis", "fitted");
    if (axis == "fitted") {
      spec.params.axis = BinAxis::fitted;
    } else if (axis == "predictor") {
      spec.params.axis = BinAxis::predictor;
    } else {
      throw Error(Errc::invalid_spec, "axis must be 'fitted' or 'predictor'");
    }
  }
  spec.claim = detail::json_string(j, "claim");
  validate(spec);
  return spec;
}

inline Json to_json(const AnswerKey& key) {
  Json j = {{"format", "lineup-key/1"}, {"seed", key.seed}};
  if (key.data_panel) j["data_panel"] = *key.data_panel;
  j["digest"] = key.digest;
  return j;
}

inline AnswerKey key_from_json(const Json& j) {
  try {
    AnswerKey key;
    key.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("data_panel") && !j.at("data_panel").is_null()) {
      key.data_panel = j.at("data_panel").get<std::size_t>();
    }
    key.digest = j.at("digest").get<std::string>();
    return key;
  } catch (const Json::exception& e) {
    throw Error(Errc::key_tampered, std::string("malformed answer key: ") + e.what());
  }
}

// Bundle document: spec and panels. The answer key is a separate document.
inline Json to_json(const LineupBundle& bundle) {
  Json panels = Json::array();
  for (const auto& p : bundle.panels) panels.push_back(to_json(p));
  Json j = {{"format", "lineup-bundle/1"},
            {"spec", to_json(bundle.spec)},
            {"panels", std::move(panels)}};
  if (bundle.created) j["created"] = *bundle.created;
  return j;
}

inline LineupBundle bundle_from_json(const Json& bundle_doc, const Json& key_doc) {
  LineupBundle b;
  try {
    b.spec = spec_from_json(bundle_doc.at("spec"));
    for (const auto& p : bundle_doc.at("panels")) b.panels.push_back(panel_from_json(p));
    if (bundle_doc.contains("created")) b.created = bundle_doc.at("created").get<std::string>();
  } catch (const Json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed bundle: ") + e.what());
  }
  b.key = key_from_json(key_doc);
  return b;
}

}  // namespace lineup
