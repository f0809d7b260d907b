#pragma once

#include <snncl/common.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace snncl {

// Minimal self-contained SVG line chart (no external assets).
struct LineChart {
    struct Series {
        std::string name;
        std::vector<double> x, y;
    };

    std::string title, x_label, y_label;
    std::vector<Series> series;
    int width = 640, height = 420;

    void add(const std::string& name, std::vector<double> x, std::vector<double> y) {
        series.push_back({name, std::move(x), std::move(y)});
    }

    void write(const std::string& path) const {
        double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
        for (const auto& s : series)
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                x_min = std::min(x_min, s.x[i]);
                x_max = std::max(x_max, s.x[i]);
                y_min = std::min(y_min, s.y[i]);
                y_max = std::max(y_max, s.y[i]);
            }
        if (x_min > x_max) { x_min = 0; x_max = 1; }
        if (y_min > y_max) { y_min = 0; y_max = 1; }
        if (x_max == x_min) x_max = x_min + 1;
        if (y_max == y_min) { y_max += 0.5; y_min -= 0.5; }
        const double pad_y = 0.05 * (y_max - y_min);
        y_min -= pad_y;
        y_max += pad_y;

        const double ml = 64, mr = 16, mt = 36, mb = 48;
        const double pw = width - ml - mr, ph = height - mt - mb;
        auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * pw; };
        auto py = [&](double y) { return mt + ph - (y - y_min) / (y_max - y_min) * ph; };

        static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                        "#9467bd", "#8c564b", "#17becf"};

        std::ofstream out(path);
        if (!out) throw InputError("cannot write SVG: " + path);
        out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='"
            << height << "' font-family='sans-serif' font-size='12'>\n";
        out << "<rect width='100%' height='100%' fill='white'/>\n";
        out << "<text x='" << width / 2 << "' y='20' text-anchor='middle' font-size='14'>"
            << title << "</text>\n";

        // axes with 5 ticks each
        out << "<line x1='" << ml << "' y1='" << mt + ph << "' x2='" << ml + pw << "' y2='"
            << mt + ph << "' stroke='black'/>\n";
        out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << mt + ph
            << "' stroke='black'/>\n";
        for (int i = 0; i <= 4; ++i) {
            const double xv = x_min + (x_max - x_min) * i / 4.0;
            const double yv = y_min + (y_max - y_min) * i / 4.0;
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3g", xv);
            out << "<text x='" << px(xv) << "' y='" << mt + ph + 16
                << "' text-anchor='middle'>" << buf << "</text>\n";
            std::snprintf(buf, sizeof buf, "%.3g", yv);
            out << "<text x='" << ml - 6 << "' y='" << py(yv) + 4
                << "' text-anchor='end'>" << buf << "</text>\n";
            out << "<line x1='" << ml << "' y1='" << py(yv) << "' x2='" << ml + pw << "' y2='"
                << py(yv) << "' stroke='#dddddd'/>\n";
        }
        out << "<text x='" << ml + pw / 2 << "' y='" << height - 8
            << "' text-anchor='middle'>" << x_label << "</text>\n";
        out << "<text x='14' y='" << mt + ph / 2
            << "' text-anchor='middle' transform='rotate(-90 14 " << mt + ph / 2 << ")'>"
            << y_label << "</text>\n";

        for (std::size_t s = 0; s < series.size(); ++s) {
            const char* color = palette[s % 7];
            out << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
            for (std::size_t i = 0; i < series[s].x.size(); ++i)
                out << px(series[s].x[i]) << "," << py(series[s].y[i]) << " ";
            out << "'/>\n";
            for (std::size_t i = 0; i < series[s].x.size(); ++i)
                out << "<circle cx='" << px(series[s].x[i]) << "' cy='" << py(series[s].y[i])
                    << "' r='3' fill='" << color << "'/>\n";
            out << "<rect x='" << ml + pw - 150 << "' y='" << mt + 6 + 18.0 * double(s)
                << "' width='12' height='12' fill='" << color << "'/>\n";
            out << "<text x='" << ml + pw - 132 << "' y='" << mt + 16 + 18.0 * double(s) << "'>"
                << series[s].name << "</text>\n";
        }
        out << "</svg>\n";
    }
};

}  // namespace snncl
