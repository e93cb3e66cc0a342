#ifndef KORP_SVG_HPP
#define KORP_SVG_HPP

#include <filesystem>
#include <string>
#include <vector>

namespace korp::svg {

/// One plotted series. NaNs split a line into segments; with `points` set
/// the series renders as circles instead.
struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f6fb2";
    bool points = false;
};

/// Writes a self-contained line/scatter plot. Output is deterministic for
/// identical inputs (fixed layout, fixed number formatting).
void write_plot(const std::filesystem::path& path, const std::string& title,
                const std::string& x_label, const std::string& y_label,
                const std::vector<Series>& series);

} // namespace korp::svg

#endif
