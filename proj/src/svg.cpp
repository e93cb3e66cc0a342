#include "korp/svg.hpp"

#include "korp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace korp::svg {

namespace {

constexpr double kWidth = 720.0, kHeight = 420.0;
constexpr double kLeft = 64.0, kRight = 24.0, kTop = 40.0, kBottom = 48.0;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finish() {
        if (lo > hi) { // nothing finite
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12) {
            const double pad = std::max(1e-12, std::abs(hi) * 0.05 + 0.5);
            lo -= pad;
            hi += pad;
        }
    }
};

} // namespace

void write_plot(const std::filesystem::path& path, const std::string& title,
                const std::string& x_label, const std::string& y_label,
                const std::vector<Series>& series) {
    Range xr, yr;
    for (const Series& s : series) {
        if (s.x.size() != s.y.size()) {
            throw LengthMismatch("svg: series '" + s.name + "' x/y length differ");
        }
        for (double v : s.x) xr.add(v);
        for (double v : s.y) yr.add(v);
    }
    xr.finish();
    yr.finish();

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + (v - xr.lo) / (xr.hi - xr.lo) * plot_w; };
    auto py = [&](double v) { return kTop + (yr.hi - v) / (yr.hi - yr.lo) * plot_h; };

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth)
        << "\" height=\"" << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth) << " "
        << num(kHeight) << "\">\n"
        << "<rect width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
        << "\" fill=\"#ffffff\"/>\n"
        << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"15\">"
        << escape(title) << "</text>\n";

    // Frame and ticks (5 per axis).
    out << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\""
        << num(plot_w) << "\" height=\"" << num(plot_h)
        << "\" fill=\"none\" stroke=\"#444444\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
        const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
        out << "<line x1=\"" << num(px(fx)) << "\" y1=\"" << num(kTop + plot_h)
            << "\" x2=\"" << num(px(fx)) << "\" y2=\"" << num(kTop + plot_h + 5)
            << "\" stroke=\"#444444\"/>\n"
            << "<text x=\"" << num(px(fx)) << "\" y=\"" << num(kTop + plot_h + 18)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << num(fx) << "</text>\n"
            << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(py(fy))
            << "\" x2=\"" << num(kLeft) << "\" y2=\"" << num(py(fy))
            << "\" stroke=\"#444444\"/>\n"
            << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py(fy) + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << num(fy) << "</text>\n";
    }
    out << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(kHeight - 10)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << escape(x_label) << "</text>\n"
        << "<text x=\"16\" y=\"" << num(kTop + plot_h / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
           "transform=\"rotate(-90 16 "
        << num(kTop + plot_h / 2) << ")\">" << escape(y_label) << "</text>\n";

    for (const Series& s : series) {
        if (s.points) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                out << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\""
                    << num(py(s.y[i])) << "\" r=\"2.5\" fill=\"" << s.color
                    << "\" fill-opacity=\"0.6\"/>\n";
            }
            continue;
        }
        bool open = false;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const bool ok = std::isfinite(s.x[i]) && std::isfinite(s.y[i]);
            if (ok && !open) {
                out << "<polyline fill=\"none\" stroke=\"" << s.color
                    << "\" stroke-width=\"1.5\" points=\"";
                open = true;
            }
            if (ok) {
                out << num(px(s.x[i])) << "," << num(py(s.y[i])) << " ";
            } else if (open) {
                out << "\"/>\n";
                open = false;
            }
        }
        if (open) out << "\"/>\n";
    }

    // Legend, top-right inside the frame.
    double ly = kTop + 14.0;
    for (const Series& s : series) {
        out << "<line x1=\"" << num(kLeft + plot_w - 150) << "\" y1=\"" << num(ly - 4)
            << "\" x2=\"" << num(kLeft + plot_w - 130) << "\" y2=\"" << num(ly - 4)
            << "\" stroke=\"" << s.color << "\" stroke-width=\"3\"/>\n"
            << "<text x=\"" << num(kLeft + plot_w - 124) << "\" y=\"" << num(ly)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.name)
            << "</text>\n";
        ly += 16.0;
    }
    out << "</svg>\n";

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("svg: cannot write " + path.string());
    f << out.str();
}

} // namespace korp::svg
