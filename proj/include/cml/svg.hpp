#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "cml/common.hpp"
#include "cml/diagnostics.hpp"
#include "cml/table.hpp"

namespace cml {

struct SeriesSpec {
    std::string x_col;
    std::string y_col;
    enum Kind { line, scatter } kind = line;
    std::string color = "#1f6fb2";
    // Split rendering at the plot threshold (the distance-figure convention:
    // values above and below the threshold get different colors).
    bool split_at_threshold = false;
    std::string color_above = "#c23b22";
};

struct PlotSpec {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    std::vector<SeriesSpec> series;
    std::optional<double> threshold;  // horizontal marker line
    std::optional<LinearFit> fit;     // overlaid straight line
    bool log_y = false;
    int width = 880;
    int height = 540;
};

namespace detail {

inline std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

struct Scale {
    double lo = 0.0, hi = 1.0;
    double p0 = 0.0, p1 = 1.0;  // pixel range
    bool log = false;

    double operator()(double v) const {
        const double a = log ? std::log10(v) : v;
        const double l = log ? std::log10(lo) : lo;
        const double h = log ? std::log10(hi) : hi;
        return p0 + (a - l) / (h - l) * (p1 - p0);
    }
};

}  // namespace detail

/// Renders a standalone SVG document (inline styles, no external assets).
inline std::string render_plot(const DataTable& table, const PlotSpec& spec) {
    if (table.row_count() == 0) throw usage_error("render_plot: empty table");
    if (spec.series.empty()) throw usage_error("render_plot: no series");

    const double ml = 72, mr = 24, mt = spec.title.empty() ? 20 : 44, mb = 56;
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    std::vector<std::pair<std::vector<double>, std::vector<double>>> data;
    for (const auto& s : spec.series) {
        auto xs = table.numeric_column(s.x_col);
        auto ys = table.numeric_column(s.y_col);
        for (double v : xs) {
            xlo = std::min(xlo, v);
            xhi = std::max(xhi, v);
        }
        for (double v : ys) {
            if (spec.log_y && v <= 0.0) continue;
            ylo = std::min(ylo, v);
            yhi = std::max(yhi, v);
        }
        data.emplace_back(std::move(xs), std::move(ys));
    }
    if (spec.threshold) {
        ylo = std::min(ylo, *spec.threshold);
        yhi = std::max(yhi, *spec.threshold);
    }
    if (xlo == xhi) {
        xlo -= 0.5;
        xhi += 0.5;
    }
    if (ylo == yhi) {
        ylo = ylo - 0.5;
        yhi = yhi + 0.5;
    }
    if (!spec.log_y) {
        const double pad = 0.04 * (yhi - ylo);
        ylo -= pad;
        yhi += pad;
    } else {
        ylo /= 1.5;
        yhi *= 1.5;
    }
    const double padx = 0.04 * (xhi - xlo);
    detail::Scale sx{xlo - padx, xhi + padx, ml, spec.width - mr, false};
    detail::Scale sy{ylo, yhi, spec.height - mb, mt, spec.log_y};

    std::string out;
    char buf[512];
    auto emit = [&](const char* fmt, auto... args) {
        std::snprintf(buf, sizeof buf, fmt, args...);
        out += buf;
    };
    emit("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
         "viewBox=\"0 0 %d %d\">\n",
         spec.width, spec.height, spec.width, spec.height);
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!spec.title.empty())
        emit("<text x=\"%d\" y=\"26\" font-family=\"sans-serif\" font-size=\"16\" "
             "text-anchor=\"middle\">%s</text>\n",
             spec.width / 2, spec.title.c_str());

    // axes
    emit("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", ml,
         spec.height - mb, static_cast<double>(spec.width - mr), spec.height - mb);
    emit("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", ml, mt, ml,
         spec.height - mb);
    for (int i = 0; i <= 5; ++i) {
        const double fx = sx.lo + (sx.hi - sx.lo) * i / 5.0;
        emit("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", sx(fx),
             spec.height - mb, sx(fx), spec.height - mb + 5.0);
        emit("<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\" "
             "text-anchor=\"middle\">%s</text>\n",
             sx(fx), spec.height - mb + 18.0, detail::fmt_tick(fx).c_str());
        const double fy = spec.log_y ? std::pow(10.0, std::log10(sy.lo) + (std::log10(sy.hi) - std::log10(sy.lo)) * i / 5.0)
                                     : sy.lo + (sy.hi - sy.lo) * i / 5.0;
        emit("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", ml - 5.0,
             sy(fy), ml, sy(fy));
        emit("<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\" "
             "text-anchor=\"end\">%s</text>\n",
             ml - 8.0, sy(fy) + 4.0, detail::fmt_tick(fy).c_str());
    }
    if (!spec.xlabel.empty())
        emit("<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"13\" "
             "text-anchor=\"middle\">%s</text>\n",
             (spec.width + static_cast<int>(ml) - static_cast<int>(mr)) / 2, spec.height - 14,
             spec.xlabel.c_str());
    if (!spec.ylabel.empty())
        emit("<text x=\"18\" y=\"%d\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
             "transform=\"rotate(-90 18 %d)\">%s</text>\n",
             spec.height / 2, spec.height / 2, spec.ylabel.c_str());

    if (spec.threshold)
        emit("<line x1=\"%.1f\" y1=\"%.2f\" x2=\"%.1f\" y2=\"%.2f\" stroke=\"#777777\" "
             "stroke-dasharray=\"6 4\"/>\n",
             ml, sy(*spec.threshold), static_cast<double>(spec.width - mr), sy(*spec.threshold));

    for (std::size_t si = 0; si < spec.series.size(); ++si) {
        const SeriesSpec& s = spec.series[si];
        const auto& xs = data[si].first;
        const auto& ys = data[si].second;
        auto color_for = [&](double y) {
            return (s.split_at_threshold && spec.threshold && y >= *spec.threshold) ? s.color_above
                                                                                    : s.color;
        };
        if (s.kind == SeriesSpec::line && !s.split_at_threshold) {
            out += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.2\" points=\"";
            for (std::size_t i = 0; i < xs.size(); ++i) {
                if (spec.log_y && ys[i] <= 0.0) continue;
                emit("%.2f,%.2f ", sx(xs[i]), sy(ys[i]));
            }
            out += "\"/>\n";
        } else if (s.kind == SeriesSpec::line) {
            for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
                if (spec.log_y && (ys[i] <= 0.0 || ys[i + 1] <= 0.0)) continue;
                emit("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"%s\" "
                     "stroke-width=\"1.2\"/>\n",
                     sx(xs[i]), sy(ys[i]), sx(xs[i + 1]), sy(ys[i + 1]),
                     color_for(std::max(ys[i], ys[i + 1])).c_str());
            }
        } else {
            for (std::size_t i = 0; i < xs.size(); ++i) {
                if (spec.log_y && ys[i] <= 0.0) continue;
                emit("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.6\" fill=\"%s\"/>\n", sx(xs[i]), sy(ys[i]),
                     color_for(ys[i]).c_str());
            }
        }
    }

    if (spec.fit) {
        const double y0 = spec.fit->intercept + spec.fit->slope * sx.lo;
        const double y1 = spec.fit->intercept + spec.fit->slope * sx.hi;
        emit("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#2e8540\" "
             "stroke-width=\"1.4\" stroke-dasharray=\"2 3\"/>\n",
             sx(sx.lo), sy(std::clamp(y0, sy.lo, sy.hi)), sx(sx.hi), sy(std::clamp(y1, sy.lo, sy.hi)));
    }

    out += "</svg>\n";
    return out;
}

/// Density heatmap of a 2-D occupation histogram (linear gray-to-blue ramp).
inline std::string render_heatmap(const DensityHistogram& h, const std::string& title) {
    if (h.total <= 0) throw usage_error("render_heatmap: empty histogram");
    const int cell = std::max(2, 512 / h.bins_per_axis);
    const int side = cell * h.bins_per_axis;
    const int mt = title.empty() ? 12 : 40;
    std::string out;
    char buf[256];
    auto emit = [&](const char* fmt, auto... args) {
        std::snprintf(buf, sizeof buf, fmt, args...);
        out += buf;
    };
    emit("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\">\n", side + 24,
         side + mt + 12);
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty())
        emit("<text x=\"%d\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" "
             "text-anchor=\"middle\">%s</text>\n",
             (side + 24) / 2, title.c_str());
    double peak = 0.0;
    for (long long v : h.counts) peak = std::max(peak, static_cast<double>(v));
    if (peak == 0.0) peak = 1.0;
    for (int iy = 0; iy < h.bins_per_axis; ++iy)
        for (int ix = 0; ix < h.bins_per_axis; ++ix) {
            const double t = static_cast<double>(h.at(ix, iy)) / peak;
            if (t == 0.0) continue;
            const int shade = static_cast<int>(255.0 * (1.0 - t));
            // y axis points up: row 0 at the bottom
            emit("<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"rgb(%d,%d,255)\"/>\n",
                 12 + ix * cell, mt + (h.bins_per_axis - 1 - iy) * cell, cell, cell, shade, shade);
        }
    emit("<rect x=\"12\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"none\" stroke=\"black\"/>\n", mt,
         side, side);
    out += "</svg>\n";
    return out;
}

}  // namespace cml
