#include "reaccel/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace reaccel {

void SvgPlot::add_line(const std::string& name, const std::vector<double>& x,
                       const std::vector<double>& y, const std::string& color) {
    series_.push_back({name, color, x, y, Series::Line});
}

void SvgPlot::add_points(const std::string& name, const std::vector<double>& x,
                         const std::vector<double>& y, const std::string& color) {
    series_.push_back({name, color, x, y, Series::Points});
}

void SvgPlot::add_dashed(const std::string& name, const std::vector<double>& x,
                         const std::vector<double>& y, const std::string& color) {
    series_.push_back({name, color, x, y, Series::Dashed});
}

namespace {
std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}
}  // namespace

std::string SvgPlot::render() const {
    const double W = 800.0, H = 500.0;
    const double ml = 70.0, mr = 20.0, mt = 40.0, mb = 55.0;

    double xmin = std::numeric_limits<double>::max(), xmax = std::numeric_limits<double>::lowest();
    double ymin = xmin, ymax = xmax;
    for (const Series& s : series_)
        for (size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!(xmax > xmin)) {
        xmin -= 1.0;
        xmax += 1.0;
    }
    if (!(ymax > ymin)) {
        ymin -= 1.0;
        ymax += 1.0;
    }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto py = [&](double v) { return H - mb - (v - ymin) / (ymax - ymin) * (H - mt - mb); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\">\n";
    os << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
    os << "<text x=\"400\" y=\"22\" text-anchor=\"middle\" font-size=\"16\" "
          "font-family=\"sans-serif\">" << title_ << "</text>\n";

    // frame and ticks
    os << "<rect x=\"" << num(ml) << "\" y=\"" << num(mt) << "\" width=\"" << num(W - ml - mr)
       << "\" height=\"" << num(H - mt - mb)
       << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 5.0;
        const double yv = ymin + (ymax - ymin) * i / 5.0;
        os << "<line x1=\"" << num(px(xv)) << "\" y1=\"" << num(H - mb) << "\" x2=\""
           << num(px(xv)) << "\" y2=\"" << num(H - mb + 5) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(H - mb + 20)
           << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << num(xv)
           << "</text>\n";
        os << "<line x1=\"" << num(ml - 5) << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << num(ml)
           << "\" y2=\"" << num(py(yv)) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(ml - 9) << "\" y=\"" << num(py(yv) + 4)
           << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << num(yv)
           << "</text>\n";
    }
    os << "<text x=\"" << num(ml + (W - ml - mr) / 2) << "\" y=\"" << num(H - 12)
       << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << x_label_
       << "</text>\n";
    os << "<text x=\"18\" y=\"" << num(mt + (H - mt - mb) / 2)
       << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
          "transform=\"rotate(-90 18 " << num(mt + (H - mt - mb) / 2) << ")\">" << y_label_
       << "</text>\n";

    double legend_y = mt + 14.0;
    for (const Series& s : series_) {
        if (s.kind == Series::Points) {
            for (size_t i = 0; i < s.x.size(); ++i)
                os << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i]))
                   << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
        } else {
            os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
            if (s.kind == Series::Dashed) os << " stroke-dasharray=\"6 4\"";
            os << " points=\"";
            for (size_t i = 0; i < s.x.size(); ++i)
                os << num(px(s.x[i])) << "," << num(py(s.y[i])) << " ";
            os << "\"/>\n";
        }
        os << "<text x=\"" << num(W - mr - 8) << "\" y=\"" << num(legend_y)
           << "\" text-anchor=\"end\" font-size=\"12\" font-family=\"sans-serif\" fill=\""
           << s.color << "\">" << s.name << "</text>\n";
        legend_y += 15.0;
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace reaccel
