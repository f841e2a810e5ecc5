#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <limits>
#include <string>
#include <vector>

#include "volterra/errors.hpp"

namespace volterra {

/// Minimal self-contained SVG line plots: axes, ticks, polylines, legend.
/// No external plotting dependency; output is deterministic except for the
/// optional timestamp comment.
class SvgPlot {
public:
    SvgPlot(std::string title, std::string xlabel, std::string ylabel)
        : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

    void add_series(std::string name, std::vector<double> xs, std::vector<double> ys,
                    std::string color, bool dashed = false) {
        if (xs.size() != ys.size()) throw InvalidArgument("SvgPlot: series length mismatch");
        series_.push_back({std::move(name), std::move(xs), std::move(ys), std::move(color), dashed});
    }

    void write(const std::string& path, bool include_timestamp = false) const {
        double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
        double ymin = xmin, ymax = -xmin;
        for (const auto& s : series_)
            for (std::size_t i = 0; i < s.xs.size(); ++i) {
                xmin = std::min(xmin, s.xs[i]);
                xmax = std::max(xmax, s.xs[i]);
                ymin = std::min(ymin, s.ys[i]);
                ymax = std::max(ymax, s.ys[i]);
            }
        if (!(xmin <= xmax)) {
            xmin = 0;
            xmax = 1;
            ymin = 0;
            ymax = 1;
        }
        if (xmax == xmin) xmax = xmin + 1;
        if (ymax == ymin) {
            ymax = ymin + 0.5;
            ymin -= 0.5;
        }
        const double pad_x = 0.04 * (xmax - xmin), pad_y = 0.08 * (ymax - ymin);
        xmin -= pad_x;
        xmax += pad_x;
        ymin -= pad_y;
        ymax += pad_y;

        const double W = 640, H = 420, ml = 62, mr = 16, mt = 34, mb = 46;
        auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
        auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

        std::string out;
        auto add = [&](const std::string& s) { out += s; };
        char buf[256];
        add("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
            "viewBox=\"0 0 640 420\">\n");
        if (include_timestamp) {
            std::time_t now = std::time(nullptr);
            char ts[64];
            std::strftime(ts, sizeof(ts), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
            add(std::string("<!-- generated ") + ts + " -->\n");
        }
        add("<rect width=\"640\" height=\"420\" fill=\"white\"/>\n");
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%g\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" "
                      "text-anchor=\"middle\">%s</text>\n",
                      W / 2, title_.c_str());
        add(buf);

        // axes
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", ml,
                      H - mb, W - mr, H - mb);
        add(buf);
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", ml, mt,
                      ml, H - mb);
        add(buf);

        for (int i = 0; i <= 5; ++i) {
            const double x = xmin + (xmax - xmin) * i / 5.0;
            const double y = ymin + (ymax - ymin) * i / 5.0;
            std::snprintf(buf, sizeof(buf),
                          "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n",
                          px(x), H - mb, px(x), H - mb + 4);
            add(buf);
            std::snprintf(buf, sizeof(buf),
                          "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"10\" "
                          "text-anchor=\"middle\">%.3g</text>\n",
                          px(x), H - mb + 16, x);
            add(buf);
            std::snprintf(buf, sizeof(buf),
                          "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n",
                          ml - 4, py(y), ml, py(y));
            add(buf);
            std::snprintf(buf, sizeof(buf),
                          "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"10\" "
                          "text-anchor=\"end\">%.3g</text>\n",
                          ml - 7, py(y) + 3, y);
            add(buf);
        }
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\" "
                      "text-anchor=\"middle\">%s</text>\n",
                      (ml + W - mr) / 2, H - 10, xlabel_.c_str());
        add(buf);
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"16\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\" "
                      "text-anchor=\"middle\" transform=\"rotate(-90 16 %g)\">%s</text>\n",
                      (mt + H - mb) / 2, (mt + H - mb) / 2, ylabel_.c_str());
        add(buf);

        for (const auto& s : series_) {
            std::string pts;
            for (std::size_t i = 0; i < s.xs.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%.3f,%.3f ", px(s.xs[i]), py(s.ys[i]));
                pts += buf;
            }
            std::snprintf(buf, sizeof(buf),
                          "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\"%s points=\"",
                          s.color.c_str(), s.dashed ? " stroke-dasharray=\"6 3\"" : "");
            add(buf);
            add(pts);
            add("\"/>\n");
        }

        // legend
        double ly = mt + 8;
        for (const auto& s : series_) {
            std::snprintf(buf, sizeof(buf),
                          "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" "
                          "stroke-width=\"1.5\"%s/>\n",
                          W - mr - 150, ly, W - mr - 126, ly, s.color.c_str(),
                          s.dashed ? " stroke-dasharray=\"6 3\"" : "");
            add(buf);
            std::snprintf(buf, sizeof(buf),
                          "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" "
                          "font-size=\"11\">%s</text>\n",
                          W - mr - 120, ly + 3, s.name.c_str());
            add(buf);
            ly += 16;
        }
        add("</svg>\n");

        std::FILE* f = std::fopen(path.c_str(), "wb");
        if (!f) throw IoError("SvgPlot: cannot open " + path);
        if (std::fwrite(out.data(), 1, out.size(), f) != out.size()) {
            std::fclose(f);
            throw IoError("SvgPlot: short write to " + path);
        }
        if (std::fclose(f) != 0) throw IoError("SvgPlot: close failed for " + path);
    }

private:
    struct Series {
        std::string name;
        std::vector<double> xs, ys;
        std::string color;
        bool dashed;
    };
    std::string title_, xlabel_, ylabel_;
    std::vector<Series> series_;
};

} // namespace volterra
