#pragma once

// One lineup panel: its display number and the plot-ready statistics for
// its plot kind, plus the JSON encoding used in bundle documents.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "json.hpp"
#include "lineup/diagnostics.hpp"
#include "lineup/error.hpp"

namespace lineup {

using Json = nlohmann::ordered_json;

enum class PlotKind { boxplot, scatter_residual, binned_residual, empirical_logit, qq };

constexpr std::string_view to_string(PlotKind kind) noexcept {
  switch (kind) {
    case PlotKind::boxplot: return "boxplot";
    case PlotKind::scatter_residual: return "scatter_residual";
    case PlotKind::binned_residual: return "binned_residual";
    case PlotKind::empirical_logit: return "empirical_logit";
    case PlotKind::qq: return "qq";
  }
  return "unknown";
}

inline std::optional<PlotKind> plot_kind_from_string(std::string_view s) {
  for (auto k : {PlotKind::boxplot, PlotKind::scatter_residual,
                 PlotKind::binned_residual, PlotKind::empirical_logit,
                 PlotKind::qq}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

// Alternative order matches PlotKind.
using PanelPayload = std::variant<BoxplotStats, ScatterPoints,
                                  BinnedResidualPoints, EmpiricalLogitPoints,
                                  QQPoints>;

struct PanelData {
  std::size_t panel_number = 0;  // 1..m, display order
  PanelPayload payload;

  PlotKind kind() const noexcept { return static_cast<PlotKind>(payload.index()); }
  friend bool operator==(const PanelData&, const PanelData&) = default;
};

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

inline Json payload_json(const BoxplotStats& s) {
  Json groups = Json::array();
  for (const auto& g : s.groups) {
    groups.push_back({{"level", g.level},
                      {"q1", g.q1},
                      {"median", g.median},
                      {"q3", g.q3},
                      {"whisker_lo", g.whisker_lo},
                      {"whisker_hi", g.whisker_hi},
                      {"outliers", g.outliers},
                      {"mean", g.mean}});
  }
  return {{"groups", std::move(groups)}};
}

inline Json payload_json(const ScatterPoints& s) {
  Json pts = Json::array();
  for (const auto& p : s.points) pts.push_back(Json::array({p.x, p.y}));
  return {{"points", std::move(pts)}};
}

inline Json payload_json(const BinnedResidualPoints& s) {
  Json pts = Json::array();
  for (const auto& p : s.points) {
    pts.push_back({{"bin_center", p.bin_center},
                   {"mean_residual", p.mean_residual},
                   {"bin_count", p.bin_count}});
  }
  return {{"n_bins", s.n_bins}, {"points", std::move(pts)}};
}

inline Json payload_json(const EmpiricalLogitPoints& s) {
  Json pts = Json::array();
  for (const auto& p : s.points) {
    pts.push_back({{"mean_x", p.mean_x},
                   {"adj_logit", p.adj_logit},
                   {"successes", p.successes},
                   {"cases", p.cases}});
  }
  return {{"g", s.g}, {"points", std::move(pts)}};
}

inline Json payload_json(const QQPoints& s) {
  Json pts = Json::array();
  for (const auto& p : s.pairs) pts.push_back(Json::array({p.theoretical, p.sample}));
  return {{"pairs", std::move(pts)}};
}

}  // namespace detail

inline Json to_json(const PanelData& panel) {
  Json j = {{"panel", panel.panel_number},
            {"kind", std::string(to_string(panel.kind()))}};
  Json body = std::visit([](const auto& p) { return detail::payload_json(p); },
                         panel.payload);
  for (auto& [k, v] : body.items()) j[k] = v;
  return j;
}

inline PanelData panel_from_json(const Json& j) {
  try {
    PanelData panel;
    panel.panel_number = j.at("panel").get<std::size_t>();
    const auto kind = plot_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) throw Error(Errc::invalid_spec, "unknown panel kind");
    switch (*kind) {
      case PlotKind::boxplot: {
        BoxplotStats s;
        for (const auto& g : j.at("groups")) {
          s.groups.push_back({g.at("level").get<std::string>(),
                              g.at("q1").get<double>(),
                              g.at("median").get<double>(),
                              g.at("q3").get<double>(),
                              g.at("whisker_lo").get<double>(),
                              g.at("whisker_hi").get<double>(),
                              g.at("outliers").get<std::vector<double>>(),
                              g.at("mean").get<double>()});
        }
        panel.payload = std::move(s);
        break;
      }
      case PlotKind::scatter_residual: {
        ScatterPoints s;
        for (const auto& p : j.at("points")) {
          s.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        }
        panel.payload = std::move(s);
        break;
      }
      case PlotKind::binned_residual: {
        BinnedResidualPoints s;
        s.n_bins = j.at("n_bins").get<std::size_t>();
        for (const auto& p : j.at("points")) {
          s.points.push_back({p.at("bin_center").get<double>(),
                              p.at("mean_residual").get<double>(),
                              p.at("bin_count").get<std::size_t>()});
        }
        panel.payload = std::move(s);
        break;
      }
      case PlotKind::empirical_logit: {
        EmpiricalLogitPoints s;
        s.g = j.at("g").get<std::size_t>();
        for (const auto& p : j.at("points")) {
          s.points.push_back({p.at("mean_x").get<double>(),
                              p.at("adj_logit").get<double>(),
                              p.at("successes").get<std::size_t>(),
                              p.at("cases").get<std::size_t>()});
        }
        panel.payload = std::move(s);
        break;
      }
      case PlotKind::qq: {
        QQPoints s;
        for (const auto& p : j.at("pairs")) {
          s.pairs.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        }
        panel.payload = std::move(s);
        break;
      }
    }
    return panel;
  } catch (const Json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed panel JSON: ") + e.what());
  }
}

}  // namespace lineup
