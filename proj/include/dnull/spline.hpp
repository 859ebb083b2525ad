#pragma once
#include <cmath>
#include <vector>

#include "dnull/error.hpp"

namespace dnull {

// Natural cubic spline through (x_i, y_i); used for radial profiles supplied as
// sampled tables. Second derivative is piecewise linear, adequate for the
// curvature formulas at table resolution.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
        const int n = static_cast<int>(x_.size());
        if (n < 3) throw Error(ErrorCode::ValidationError, "spline needs at least 3 samples");
        for (int i = 1; i < n; ++i)
            if (!(x_[i] > x_[i - 1]))
                throw Error(ErrorCode::ValidationError, "spline abscissae must strictly increase");
        m_.assign(n, 0.0);
        std::vector<double> a(n, 0.0), b(n, 1.0), c(n, 0.0), d(n, 0.0);
        for (int i = 1; i + 1 < n; ++i) {
            const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
            a[i] = h0 / 6.0;
            b[i] = (h0 + h1) / 3.0;
            c[i] = h1 / 6.0;
            d[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
        }
        std::vector<double> cp(n, 0.0), dp(n, 0.0);
        cp[0] = 0.0;
        dp[0] = 0.0;
        for (int i = 1; i < n; ++i) {
            const double den = b[i] - a[i] * cp[i - 1];
            cp[i] = c[i] / den;
            dp[i] = (d[i] - a[i] * dp[i - 1]) / den;
        }
        m_[n - 1] = dp[n - 1];
        for (int i = n - 2; i >= 0; --i) m_[i] = dp[i] - cp[i] * m_[i + 1];
    }

    double value(double x) const {
        const int i = segment(x);
        const double h = x_[i + 1] - x_[i];
        const double A = (x_[i + 1] - x) / h, B = (x - x_[i]) / h;
        return A * y_[i] + B * y_[i + 1] +
               ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
    }
    double deriv(double x) const {
        const int i = segment(x);
        const double h = x_[i + 1] - x_[i];
        const double A = (x_[i + 1] - x) / h, B = (x - x_[i]) / h;
        return (y_[i + 1] - y_[i]) / h + ((3.0 * B * B - 1.0) * m_[i + 1] - (3.0 * A * A - 1.0) * m_[i]) * h / 6.0;
    }
    double second(double x) const {
        const int i = segment(x);
        const double h = x_[i + 1] - x_[i];
        const double A = (x_[i + 1] - x) / h, B = (x - x_[i]) / h;
        return A * m_[i] + B * m_[i + 1];
    }
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }

private:
    int segment(double x) const {
        int lo = 0, hi = static_cast<int>(x_.size()) - 1;
        if (x <= x_.front()) return 0;
        if (x >= x_.back()) return hi - 1;
        while (hi - lo > 1) {
            const int mid = (lo + hi) / 2;
            if (x_[mid] <= x)
                lo = mid;
            else
                hi = mid;
        }
        return lo;
    }
    std::vector<double> x_, y_;
    std::vector<double> m_;  // second derivatives at nodes
};

}  // namespace dnull
