#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "octotrap/common.hpp"

namespace octotrap {

// Minimal static SVG scatter/line plots. CSV files are the authoritative
// artifacts; these give a quick visual check.
class SvgPlot {
  public:
    enum class Marker { Circle, Cross, Square, None };

    struct Series {
        std::vector<Vec2> points;
        std::vector<double> yerr;  // optional, same length
        std::string color = "#000000";
        Marker marker = Marker::Circle;
        bool line = false;
        std::string label;
    };

    SvgPlot(std::string title, std::string xlabel, std::string ylabel)
        : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

    Series& add_series(const std::string& label, const std::string& color,
                       Marker marker = Marker::Circle, bool line = false) {
        series_.emplace_back();
        series_.back().label = label;
        series_.back().color = color;
        series_.back().marker = marker;
        series_.back().line = line;
        return series_.back();
    }

    void equal_axes(bool on) { equal_axes_ = on; }

    void write(const std::filesystem::path& path) const {
        double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
        bool first = true;
        for (const auto& s : series_) {
            for (std::size_t i = 0; i < s.points.size(); ++i) {
                const auto& p = s.points[i];
                const double ye = i < s.yerr.size() ? s.yerr[i] : 0.0;
                if (first) {
                    xmin = xmax = p.x;
                    ymin = p.y - ye;
                    ymax = p.y + ye;
                    first = false;
                }
                xmin = std::min(xmin, p.x);
                xmax = std::max(xmax, p.x);
                ymin = std::min(ymin, p.y - ye);
                ymax = std::max(ymax, p.y + ye);
            }
        }
        pad_range(xmin, xmax);
        pad_range(ymin, ymax);
        if (equal_axes_) {
            const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
            const double half = 0.5 * std::max(xmax - xmin, ymax - ymin);
            xmin = cx - half; xmax = cx + half;
            ymin = cy - half; ymax = cy + half;
        }

        const int w = 640, h = 480;
        const int ml = 72, mr = 24, mt = 40, mb = 56;
        auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
        auto sy = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };

        std::ostringstream os;
        os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
           << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
           << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << (w - ml - mr)
           << "\" height=\"" << (h - mt - mb)
           << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
        os << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" "
              "font-family=\"sans-serif\">" << escape(title_) << "</text>\n";
        os << "<text x=\"" << w / 2 << "\" y=\"" << h - 14
           << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">"
           << escape(xlabel_) << "</text>\n";
        os << "<text x=\"18\" y=\"" << h / 2
           << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
              "transform=\"rotate(-90 18 " << h / 2 << ")\">" << escape(ylabel_) << "</text>\n";

        for (double t : ticks(xmin, xmax)) {
            const double x = sx(t);
            os << "<line x1=\"" << x << "\" y1=\"" << h - mb << "\" x2=\"" << x << "\" y2=\""
               << h - mb + 5 << "\" stroke=\"#444\"/>\n";
            os << "<text x=\"" << x << "\" y=\"" << h - mb + 20
               << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
               << tick_label(t) << "</text>\n";
        }
        for (double t : ticks(ymin, ymax)) {
            const double y = sy(t);
            os << "<line x1=\"" << ml - 5 << "\" y1=\"" << y << "\" x2=\"" << ml << "\" y2=\"" << y
               << "\" stroke=\"#444\"/>\n";
            os << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
               << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
               << tick_label(t) << "</text>\n";
        }

        int legend_y = mt + 16;
        for (const auto& s : series_) {
            if (s.line && s.points.size() > 1) {
                os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
                for (const auto& p : s.points) os << sx(p.x) << "," << sy(p.y) << " ";
                os << "\"/>\n";
            }
            for (std::size_t i = 0; i < s.points.size(); ++i) {
                const double x = sx(s.points[i].x), y = sy(s.points[i].y);
                if (i < s.yerr.size() && s.yerr[i] > 0.0) {
                    os << "<line x1=\"" << x << "\" y1=\"" << sy(s.points[i].y - s.yerr[i])
                       << "\" x2=\"" << x << "\" y2=\"" << sy(s.points[i].y + s.yerr[i])
                       << "\" stroke=\"" << s.color << "\" stroke-width=\"1\"/>\n";
                }
                draw_marker(os, s.marker, x, y, s.color);
            }
            if (!s.label.empty()) {
                draw_marker(os, s.marker, ml + 12, legend_y - 4, s.color);
                os << "<text x=\"" << ml + 22 << "\" y=\"" << legend_y
                   << "\" font-size=\"12\" font-family=\"sans-serif\">" << escape(s.label)
                   << "</text>\n";
                legend_y += 16;
            }
        }
        os << "</svg>\n";

        std::ofstream f(path);
        if (!f) throw ConfigError("cannot write " + path.string());
        f << os.str();
    }

  private:
    static void pad_range(double& lo, double& hi) {
        if (hi <= lo) {
            const double pad = std::max(std::abs(lo) * 0.1, 1e-12);
            lo -= pad;
            hi += pad;
        } else {
            const double pad = 0.06 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
    }
    static std::vector<double> ticks(double lo, double hi) {
        const double span = hi - lo;
        const double raw = span / 5.0;
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        double step = mag;
        if (raw / mag >= 5.0) step = 5.0 * mag;
        else if (raw / mag >= 2.0) step = 2.0 * mag;
        std::vector<double> out;
        for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step) {
            out.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
        }
        return out;
    }
    static std::string tick_label(double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4g", v);
        return buf;
    }
    static std::string escape(const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '<') out += "&lt;";
            else if (c == '>') out += "&gt;";
            else if (c == '&') out += "&amp;";
            else out += c;
        }
        return out;
    }
    static void draw_marker(std::ostringstream& os, Marker m, double x, double y,
                            const std::string& color) {
        switch (m) {
            case Marker::Circle:
                os << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"3\" fill=\"" << color
                   << "\"/>\n";
                break;
            case Marker::Cross:
                os << "<path d=\"M" << x - 3 << " " << y - 3 << " L" << x + 3 << " " << y + 3
                   << " M" << x - 3 << " " << y + 3 << " L" << x + 3 << " " << y - 3
                   << "\" stroke=\"" << color << "\" stroke-width=\"1.4\"/>\n";
                break;
            case Marker::Square:
                os << "<rect x=\"" << x - 2.6 << "\" y=\"" << y - 2.6
                   << "\" width=\"5.2\" height=\"5.2\" fill=\"" << color << "\"/>\n";
                break;
            case Marker::None:
                break;
        }
    }

    std::string title_, xlabel_, ylabel_;
    std::deque<Series> series_;  // stable references from add_series
    bool equal_axes_ = false;
};

}  // namespace octotrap
