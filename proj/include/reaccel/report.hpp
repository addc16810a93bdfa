#pragma once

#include <string>
#include <vector>

namespace reaccel {

/// Minimal deterministic SVG line-plot writer (fixed 800x500 viewBox).
/// Series are drawn in insertion order; point series are drawn as circles so
/// per-step optimizer values can sit on top of simulator traces.
class SvgPlot {
  public:
    SvgPlot(std::string title, std::string x_label, std::string y_label)
        : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

    void add_line(const std::string& name, const std::vector<double>& x,
                  const std::vector<double>& y, const std::string& color);
    void add_points(const std::string& name, const std::vector<double>& x,
                    const std::vector<double>& y, const std::string& color);
    void add_dashed(const std::string& name, const std::vector<double>& x,
                    const std::vector<double>& y, const std::string& color);

    std::string render() const;

  private:
    struct Series {
        std::string name, color;
        std::vector<double> x, y;
        enum Kind { Line, Points, Dashed } kind = Line;
    };
    std::string title_, x_label_, y_label_;
    std::vector<Series> series_;
};

}  // namespace reaccel
