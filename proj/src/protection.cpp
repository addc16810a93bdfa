#include "reaccel/protection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reaccel {

void ProtectionCurve::validate(const std::string& where) const {
    if (samples.size() < 2)
        throw std::runtime_error(where + ": protection curve needs at least 2 samples");
    for (size_t i = 1; i < samples.size(); ++i) {
        if (!(samples[i].first > samples[i - 1].first))
            throw std::runtime_error(where + ": curve sample times must be strictly increasing");
        const double dl = samples[i].second - samples[i - 1].second;
        if (kind == CurveKind::Undervoltage && dl < 0.0)
            throw std::runtime_error(where + ": undervoltage limits must be non-decreasing in t");
        if (kind == CurveKind::Overcurrent && dl > 0.0)
            throw std::runtime_error(where + ": overcurrent limits must be non-increasing in t");
    }
    for (const auto& [t, v] : samples) {
        if (t < 0.0) throw std::runtime_error(where + ": curve times must be >= 0");
        if (v < 0.0) throw std::runtime_error(where + ": curve limits must be >= 0");
    }
}

double limit_at(const ProtectionCurve& curve, double t) {
    const auto& s = curve.samples;
    if (t <= s.front().first) return s.front().second;
    if (t >= s.back().first) return s.back().second;
    auto it = std::upper_bound(s.begin(), s.end(), t,
                               [](double v, const auto& p) { return v < p.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double w = (t - lo.first) / (hi.first - lo.first);
    return lo.second + w * (hi.second - lo.second);
}

double PwlCurve::eval(double t) const {
    if (t <= breakpoints.front()) return values.front();
    if (t >= breakpoints.back()) return values.back();
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
    const size_t j = static_cast<size_t>(it - breakpoints.begin());
    const double w = (t - breakpoints[j - 1]) / (breakpoints[j] - breakpoints[j - 1]);
    return values[j - 1] + w * (values[j] - values[j - 1]);
}

PwlCurve approximate_curve(const ProtectionCurve& curve, int n, double t_lo, double t_hi) {
    if (n < 2) throw std::invalid_argument("approximate_curve: n must be >= 2");
    if (!(t_hi > t_lo)) throw std::invalid_argument("approximate_curve: empty time range");

    // Breakpoints: range ends, curve samples inside the range, uniform fill.
    std::vector<double> bp = {t_lo, t_hi};
    for (const auto& [t, v] : curve.samples)
        if (t > t_lo && t < t_hi) bp.push_back(t);
    int fill = n - static_cast<int>(bp.size());
    for (int i = 1; i <= fill; ++i)
        bp.push_back(t_lo + (t_hi - t_lo) * static_cast<double>(i) / (fill + 1));
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             bp.end());

    PwlCurve out;
    out.source_kind = curve.kind;
    out.breakpoints = bp;
    out.values.resize(bp.size());
    for (size_t j = 0; j < bp.size(); ++j) out.values[j] = limit_at(curve, bp[j]);

    // Shift endpoints to the safe side. A chord can cut into the curve only
    // between breakpoints, so probe each segment densely and push both of its
    // endpoints past the worst violation; lowering (or raising) both ends of
    // a segment moves its whole chord at least as far.
    const int probes = 512;
    std::vector<double> shift(bp.size(), 0.0);
    for (size_t j = 0; j + 1 < bp.size(); ++j) {
        double worst = 0.0;
        for (int i = 0; i <= probes; ++i) {
            const double t = bp[j] + (bp[j + 1] - bp[j]) * static_cast<double>(i) / probes;
            const double w = static_cast<double>(i) / probes;
            const double chord = out.values[j] + w * (out.values[j + 1] - out.values[j]);
            const double truth = limit_at(curve, t);
            const double viol = (curve.kind == CurveKind::Undervoltage) ? truth - chord
                                                                        : chord - truth;
            worst = std::max(worst, viol);
        }
        shift[j] = std::max(shift[j], worst);
        shift[j + 1] = std::max(shift[j + 1], worst);
    }
    const double sign = (curve.kind == CurveKind::Undervoltage) ? +1.0 : -1.0;
    for (size_t j = 0; j < bp.size(); ++j) out.values[j] += sign * shift[j];

    // Re-impose the source curve's monotone direction; both fixes move
    // further onto the safe side.
    if (curve.kind == CurveKind::Undervoltage) {
        for (size_t j = 1; j < bp.size(); ++j)
            out.values[j] = std::max(out.values[j], out.values[j - 1]);
    } else {
        for (size_t j = 1; j < bp.size(); ++j)
            out.values[j] = std::min(out.values[j], out.values[j - 1]);
    }
    return out;
}

}  // namespace reaccel
