#pragma once

#include <string>
#include <vector>

namespace reaccel {

enum class CurveKind { Undervoltage, Overcurrent };

/// Time-dependent trip boundary given as ordered (t, limit) samples.
/// Undervoltage limits are squared-voltage floors [p.u.^2] and must be
/// non-decreasing in t; overcurrent limits are multiples of the line's
/// squared ampacity and must be non-increasing in t.
struct ProtectionCurve {
    CurveKind kind = CurveKind::Undervoltage;
    std::vector<std::pair<double, double>> samples;

    void validate(const std::string& where) const;
};

/// Piecewise-linear stand-in for a ProtectionCurve, shifted where needed so
/// that its evaluation never lands on the unsafe side of the source curve.
struct PwlCurve {
    std::vector<double> breakpoints;
    std::vector<double> values;
    CurveKind source_kind = CurveKind::Undervoltage;

    double eval(double t) const;
};

/// Linear interpolation between curve samples, clamped to end values.
double limit_at(const ProtectionCurve& curve, double t);

/// Conservative n-breakpoint approximation over [t_lo, t_hi].
/// For undervoltage the result is >= the curve everywhere, for overcurrent
/// it is <= the curve everywhere, so a plan accepted against the
/// approximation is also accepted by the true curve.
PwlCurve approximate_curve(const ProtectionCurve& curve, int n, double t_lo, double t_hi);

}  // namespace reaccel
