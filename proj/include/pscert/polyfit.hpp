#pragma once

// Least-squares polynomial fit of a gain curve with a monotone inverse.

#include "pscert/core.hpp"

namespace pscert {

struct Polynomial {
    Vec coeffs;  // ascending powers

    double operator()(double x) const {
        double y = 0.0;
        for (Eigen::Index k = coeffs.size() - 1; k >= 0; --k) y = y * x + coeffs(k);
        return y;
    }

    double derivative(double x) const {
        double y = 0.0;
        for (Eigen::Index k = coeffs.size() - 1; k >= 1; --k) y = y * x + static_cast<double>(k) * coeffs(k);
        return y;
    }
};

struct GainFit {
    Polynomial poly;
    double lo = 0.0, hi = 0.0;  // fitted abscissa range
    bool increasing = false;    // derivative >= 0 on [lo, hi]
    double rms_residual = 0.0;

    /// x in [lo, hi] with poly(x) = y, by bisection. Empty when y is outside
    /// the fitted range of values.
    std::optional<double> inverse(double y, double tol = 1e-12) const {
        if (!increasing) throw PreconditionError("gain fit is not monotone on its range; inverse refused");
        double a = lo, b = hi;
        if (y < poly(a) || y > poly(b)) return std::nullopt;
        while (b - a > tol * std::max(1.0, std::abs(b))) {
            const double mid = 0.5 * (a + b);
            (poly(mid) < y ? a : b) = mid;
        }
        return 0.5 * (a + b);
    }
};

inline GainFit fit_gain_curve(const std::vector<double>& x, const std::vector<double>& y, int degree = 3,
                              std::size_t monotone_probes = 2001) {
    if (x.size() != y.size()) throw PreconditionError("fit_gain_curve: sample size mismatch");
    if (degree < 1) throw PreconditionError("fit_gain_curve: degree must be at least 1");
    if (x.size() < std::max<std::size_t>(5, static_cast<std::size_t>(degree) + 1))
        throw PreconditionError("fit_gain_curve: need at least 5 samples");
    const auto m = static_cast<Eigen::Index>(x.size());
    Mat V(m, degree + 1);
    Vec b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        double p = 1.0;
        for (int k = 0; k <= degree; ++k, p *= x[static_cast<std::size_t>(i)]) V(i, k) = p;
        b(i) = y[static_cast<std::size_t>(i)];
    }
    GainFit f;
    f.poly.coeffs = V.colPivHouseholderQr().solve(b);
    f.rms_residual = std::sqrt((V * f.poly.coeffs - b).squaredNorm() / static_cast<double>(m));
    f.lo = *std::min_element(x.begin(), x.end());
    f.hi = *std::max_element(x.begin(), x.end());
    if (!(f.hi > f.lo)) throw PreconditionError("fit_gain_curve: samples must span a range");
    f.increasing = true;
    for (std::size_t k = 0; k < monotone_probes; ++k) {
        const double t = f.lo + (f.hi - f.lo) * static_cast<double>(k) / static_cast<double>(monotone_probes - 1);
        if (f.poly.derivative(t) < 0.0) {
            f.increasing = false;
            break;
        }
    }
    return f;
}

}  // namespace pscert
