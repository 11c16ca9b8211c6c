#pragma once

// Deterministic SVG rendering of lineups: every panel shares one pair of
// scales, coordinates are written with exactly two decimals, and nothing in
// the output depends on which panel holds the observed data.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lineup/error.hpp"
#include "lineup/lineup.hpp"
#include "lineup/panel.hpp"

namespace lineup::svg {

struct Range {
  double lo = 0;
  double hi = 0;
  friend bool operator==(const Range&, const Range&) = default;
};

struct Scales {
  Range x;
  Range y;
  double padding = 0.05;
  friend bool operator==(const Scales&, const Scales&) = default;
};

// Raw data extents of one panel, before padding.
struct Extents {
  Range x{std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity()};
  Range y{std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity()};

  void add_x(double v) {
    x.lo = std::min(x.lo, v);
    x.hi = std::max(x.hi, v);
  }
  void add_y(double v) {
    y.lo = std::min(y.lo, v);
    y.hi = std::max(y.hi, v);
  }
  void merge(const Extents& o) {
    add_x(o.x.lo);
    add_x(o.x.hi);
    add_y(o.y.lo);
    add_y(o.y.hi);
  }
};

// Half-width of a box in category units; groups sit at x = 1..G.
inline constexpr double kBoxHalfWidth = 0.3;

inline Extents data_extents(const PanelData& panel) {
  Extents e;
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, BoxplotStats>) {
          e.add_x(0.5);
          e.add_x(static_cast<double>(p.groups.size()) + 0.5);
          for (const auto& g : p.groups) {
            e.add_y(g.whisker_lo);
            e.add_y(g.whisker_hi);
            e.add_y(g.mean);
            for (double o : g.outliers) e.add_y(o);
          }
        } else if constexpr (std::is_same_v<P, ScatterPoints>) {
          e.add_y(0.0);  // zero reference line
          for (const auto& pt : p.points) {
            e.add_x(pt.x);
            e.add_y(pt.y);
          }
        } else if constexpr (std::is_same_v<P, BinnedResidualPoints>) {
          e.add_y(0.0);
          for (const auto& pt : p.points) {
            e.add_x(pt.bin_center);
            e.add_y(pt.mean_residual);
          }
        } else if constexpr (std::is_same_v<P, EmpiricalLogitPoints>) {
          for (const auto& pt : p.points) {
            e.add_x(pt.mean_x);
            e.add_y(pt.adj_logit);
          }
        } else {
          for (const auto& pt : p.pairs) {
            e.add_x(pt.theoretical);
            e.add_y(pt.sample);
          }
        }
      },
      panel.payload);
  return e;
}

namespace detail {
inline Range pad(Range r, double padding) {
  if (!(r.hi > r.lo)) return {r.lo - 1.0, r.lo + 1.0};
  const double extra = padding * (r.hi - r.lo);
  return {r.lo - extra, r.hi + extra};
}
}  // namespace detail

// Union of all panels' extents, widened by `padding` of the span on each
// side. A zero-width axis becomes (v - 1, v + 1).
inline Scales common_scales(std::span<const PanelData> panels,
                            double padding = 0.05) {
  if (panels.empty()) {
    throw Error(Errc::invalid_spec, "no panels to scale");
  }
  const auto kind = panels.front().kind();
  Extents all;
  for (const auto& p : panels) {
    if (p.kind() != kind) {
      throw Error(Errc::invalid_spec, "panels mix plot kinds");
    }
    all.merge(data_extents(p));
  }
  return {detail::pad(all.x, padding), detail::pad(all.y, padding), padding};
}

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

// Fixed two-decimal formatting; "-0.00" is normalized to "0.00".
inline std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
  std::string s(buf, ptr);
  if (s == "-0.00") s = "0.00";
  return s;
}

inline std::string escape_xml(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Panels
// ---------------------------------------------------------------------------

struct PanelGeometry {
  double x = 0;  // top-left corner of the panel cell
  double y = 0;
  double width = 200;
  double height = 170;
};

inline constexpr double kTitleHeight = 20;
inline constexpr double kSideMargin = 10;
inline constexpr double kBottomMargin = 20;

// Data-to-pixel map for the plot area of one panel cell.
struct Viewport {
  double left = 0;
  double top = 0;
  double width = 0;
  double height = 0;
  Scales scales;

  Viewport(const PanelGeometry& g, const Scales& s)
      : left(g.x + kSideMargin),
        top(g.y + kTitleHeight),
        width(g.width - 2 * kSideMargin),
        height(g.height - kTitleHeight - kBottomMargin),
        scales(s) {}

  double px(double v) const {
    return left + (v - scales.x.lo) / (scales.x.hi - scales.x.lo) * width;
  }
  double py(double v) const {
    return top + (scales.y.hi - v) / (scales.y.hi - scales.y.lo) * height;
  }
};

namespace detail {

inline void line(std::string& out, const char* cls, double x1, double y1,
                 double x2, double y2) {
  out += "<line class=\"";
  out += cls;
  out += "\" x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) +
         "\" y2=\"" + fmt(y2) + "\"/>\n";
}

inline void circle(std::string& out, const char* cls, double cx, double cy,
                   double r) {
  out += "<circle class=\"";
  out += cls;
  out += "\" cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) + "\" r=\"" + fmt(r) +
         "\"/>\n";
}

inline void marks(std::string& out, const Viewport& vp, const BoxplotStats& s) {
  for (std::size_t j = 0; j < s.groups.size(); ++j) {
    const auto& g = s.groups[j];
    const double c = static_cast<double>(j + 1);
    const double x0 = vp.px(c - kBoxHalfWidth);
    const double x1 = vp.px(c + kBoxHalfWidth);
    const double xc = vp.px(c);
    line(out, "whisker", xc, vp.py(g.q3), xc, vp.py(g.whisker_hi));
    line(out, "whisker", xc, vp.py(g.q1), xc, vp.py(g.whisker_lo));
    line(out, "whisker", vp.px(c - kBoxHalfWidth / 2), vp.py(g.whisker_hi),
         vp.px(c + kBoxHalfWidth / 2), vp.py(g.whisker_hi));
    line(out, "whisker", vp.px(c - kBoxHalfWidth / 2), vp.py(g.whisker_lo),
         vp.px(c + kBoxHalfWidth / 2), vp.py(g.whisker_lo));
    out += "<rect class=\"box\" x=\"" + fmt(x0) + "\" y=\"" + fmt(vp.py(g.q3)) +
           "\" width=\"" + fmt(x1 - x0) + "\" height=\"" +
           fmt(vp.py(g.q1) - vp.py(g.q3)) + "\"/>\n";
    line(out, "median", x0, vp.py(g.median), x1, vp.py(g.median));
    for (double o : g.outliers) circle(out, "outlier", xc, vp.py(o), 2.0);
    circle(out, "mean", xc, vp.py(g.mean), 3.0);
    out += "<text class=\"label\" x=\"" + fmt(xc) + "\" y=\"" +
           fmt(vp.top + vp.height + 14) + "\">" + escape_xml(g.level) +
           "</text>\n";
  }
}

inline void zero_line(std::string& out, const Viewport& vp) {
  line(out, "ref", vp.left, vp.py(0.0), vp.left + vp.width, vp.py(0.0));
}

inline void marks(std::string& out, const Viewport& vp, const ScatterPoints& s) {
  zero_line(out, vp);
  for (const auto& p : s.points) circle(out, "pt", vp.px(p.x), vp.py(p.y), 1.8);
}

inline void marks(std::string& out, const Viewport& vp,
                  const BinnedResidualPoints& s) {
  zero_line(out, vp);
  for (const auto& p : s.points) {
    circle(out, "pt", vp.px(p.bin_center), vp.py(p.mean_residual), 2.2);
  }
}

inline void marks(std::string& out, const Viewport& vp,
                  const EmpiricalLogitPoints& s) {
  if (s.points.size() > 1) {
    out += "<polyline class=\"path\" points=\"";
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      if (i) out.push_back(' ');
      out += fmt(vp.px(s.points[i].mean_x)) + "," +
             fmt(vp.py(s.points[i].adj_logit));
    }
    out += "\"/>\n";
  }
  for (const auto& p : s.points) {
    circle(out, "pt", vp.px(p.mean_x), vp.py(p.adj_logit), 2.5);
  }
}

inline void marks(std::string& out, const Viewport& vp, const QQPoints& s) {
  // Identity line clipped to the square where both ranges overlap.
  const double lo = std::max(vp.scales.x.lo, vp.scales.y.lo);
  const double hi = std::min(vp.scales.x.hi, vp.scales.y.hi);
  if (lo < hi) line(out, "ref", vp.px(lo), vp.py(lo), vp.px(hi), vp.py(hi));
  for (const auto& p : s.pairs) {
    circle(out, "pt", vp.px(p.theoretical), vp.py(p.sample), 1.8);
  }
}

}  // namespace detail

// One panel group: cell frame, title with the panel number, and the marks
// for its plot kind.
inline std::string render_panel(const PanelData& panel, const Scales& scales,
                                const PanelGeometry& geom) {
  const Viewport vp(geom, scales);
  std::string out;
  out += "<g class=\"panel\" id=\"panel-" + std::to_string(panel.panel_number) +
         "\">\n";
  out += "<rect class=\"frame\" x=\"" + fmt(vp.left) + "\" y=\"" + fmt(vp.top) +
         "\" width=\"" + fmt(vp.width) + "\" height=\"" + fmt(vp.height) +
         "\"/>\n";
  out += "<text class=\"title\" x=\"" + fmt(geom.x + geom.width / 2) +
         "\" y=\"" + fmt(geom.y + 15) + "\">" +
         std::to_string(panel.panel_number) + "</text>\n";
  std::visit([&](const auto& p) { detail::marks(out, vp, p); }, panel.payload);
  out += "</g>\n";
  return out;
}

struct LayoutOptions {
  std::size_t cols = 5;
  double panel_width = 200;
  double panel_height = 170;
  double gap = 6;
};

inline constexpr std::string_view kStyle =
    "<style type=\"text/css\"><![CDATA[\n"
    "text{font-family:Helvetica,Arial,sans-serif;fill:#333333}\n"
    ".title{font-size:12px;text-anchor:middle}\n"
    ".label{font-size:9px;text-anchor:middle}\n"
    ".frame{fill:#ebebeb;stroke:none}\n"
    ".box{fill:#ffffff;stroke:#333333;stroke-width:1}\n"
    ".median{stroke:#333333;stroke-width:2}\n"
    ".whisker{stroke:#333333;stroke-width:1}\n"
    ".outlier{fill:none;stroke:#333333;stroke-width:1}\n"
    ".mean{fill:#d55e00;stroke:none}\n"
    ".pt{fill:#333333;stroke:none}\n"
    ".path{fill:none;stroke:#333333;stroke-width:1}\n"
    ".ref{stroke:#888888;stroke-width:1;stroke-dasharray:4,3}\n"
    "]]></style>\n";

// Standalone SVG 1.1 document with the panels in row-major order.
inline std::string render_lineup(std::span<const PanelData> panels,
                                 const LayoutOptions& layout = {}) {
  if (layout.cols == 0) {
    throw Error(Errc::invalid_spec, "layout needs at least one column");
  }
  const auto scales = common_scales(panels);
  const std::size_t cols = std::min(layout.cols, panels.size());
  const std::size_t rows = (panels.size() + cols - 1) / cols;
  const double width = static_cast<double>(cols) * layout.panel_width +
                       static_cast<double>(cols + 1) * layout.gap;
  const double height = static_cast<double>(rows) * layout.panel_height +
                        static_cast<double>(rows + 1) * layout.gap;

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" "
         "viewBox=\"0 0 " + fmt(width) + " " + fmt(height) + "\" width=\"" +
         fmt(width) + "\" height=\"" + fmt(height) + "\">\n";
  out += kStyle;
  out += "<rect x=\"0.00\" y=\"0.00\" width=\"" + fmt(width) + "\" height=\"" +
         fmt(height) + "\" fill=\"#ffffff\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const std::size_t row = i / cols;
    const std::size_t col = i % cols;
    PanelGeometry g;
    g.width = layout.panel_width;
    g.height = layout.panel_height;
    g.x = layout.gap + static_cast<double>(col) * (layout.panel_width + layout.gap);
    g.y = layout.gap + static_cast<double>(row) * (layout.panel_height + layout.gap);
    out += render_panel(panels[i], scales, g);
  }
  out += "</svg>\n";
  return out;
}

inline std::string render_lineup(const LineupBundle& bundle,
                                 const LayoutOptions& layout = {}) {
  return render_lineup(std::span<const PanelData>(bundle.panels), layout);
}

}  // namespace lineup::svg
