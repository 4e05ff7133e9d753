#pragma once

#include <optional>
#include <string>
#include <vector>

namespace cfb {

/// Minimal line-chart writer for diagnostic plots. One polyline per series;
/// gaps (absent samples) split the polyline.
class SvgLineChart {
public:
    SvgLineChart(std::string title, std::string x_label, std::string y_label);

    void add_series(std::string name, std::vector<std::optional<double>> values);

    /// Renders with x = sample index (0-based).
    std::string render() const;

private:
    std::string title_, x_label_, y_label_;
    struct Series {
        std::string name;
        std::vector<std::optional<double>> values;
    };
    std::vector<Series> series_;
};

}  // namespace cfb
