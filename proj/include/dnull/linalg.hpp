#pragma once
#include <array>
#include <cmath>
#include <cstdlib>

#include "dnull/error.hpp"

// Small runtime-dimension dense types for chart tensors (dim 2..4).

namespace dnull {

constexpr int kMaxDim = 4;

struct Vec {
    int n = 0;
    std::array<double, kMaxDim> a{};

    Vec() = default;
    explicit Vec(int dim) : n(dim) {}
    Vec(std::initializer_list<double> xs) : n(static_cast<int>(xs.size())) {
        int i = 0;
        for (double x : xs) a[i++] = x;
    }
    double& operator[](int i) { return a[i]; }
    double operator[](int i) const { return a[i]; }
};

struct Mat {
    int n = 0;
    std::array<double, kMaxDim * kMaxDim> a{};

    Mat() = default;
    explicit Mat(int dim) : n(dim) {}
    double& operator()(int i, int j) { return a[i * n + j]; }
    double operator()(int i, int j) const { return a[i * n + j]; }

    static Mat identity(int dim) {
        Mat m(dim);
        for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
        return m;
    }
};

// T(k,i,j): first index is the derivative slot for dg-like data.
struct Ten3 {
    int n = 0;
    std::array<double, kMaxDim * kMaxDim * kMaxDim> a{};

    Ten3() = default;
    explicit Ten3(int dim) : n(dim) {}
    double& operator()(int k, int i, int j) { return a[(k * n + i) * n + j]; }
    double operator()(int k, int i, int j) const { return a[(k * n + i) * n + j]; }
};

// T(l,k,i,j): second partials of a matrix-valued map.
struct Ten4 {
    int n = 0;
    std::array<double, kMaxDim * kMaxDim * kMaxDim * kMaxDim> a{};

    Ten4() = default;
    explicit Ten4(int dim) : n(dim) {}
    double& operator()(int l, int k, int i, int j) { return a[((l * n + k) * n + i) * n + j]; }
    double operator()(int l, int k, int i, int j) const { return a[((l * n + k) * n + i) * n + j]; }
};

inline Vec operator+(const Vec& x, const Vec& y) {
    Vec r(x.n);
    for (int i = 0; i < x.n; ++i) r[i] = x[i] + y[i];
    return r;
}
inline Vec operator-(const Vec& x, const Vec& y) {
    Vec r(x.n);
    for (int i = 0; i < x.n; ++i) r[i] = x[i] - y[i];
    return r;
}
inline Vec operator*(double c, const Vec& x) {
    Vec r(x.n);
    for (int i = 0; i < x.n; ++i) r[i] = c * x[i];
    return r;
}
inline Mat operator+(const Mat& x, const Mat& y) {
    Mat r(x.n);
    for (int i = 0; i < x.n * x.n; ++i) r.a[i] = x.a[i] + y.a[i];
    return r;
}
inline Mat operator-(const Mat& x, const Mat& y) {
    Mat r(x.n);
    for (int i = 0; i < x.n * x.n; ++i) r.a[i] = x.a[i] - y.a[i];
    return r;
}
inline Mat operator*(double c, const Mat& x) {
    Mat r(x.n);
    for (int i = 0; i < x.n * x.n; ++i) r.a[i] = c * x.a[i];
    return r;
}

inline Mat outer(const Vec& x, const Vec& y) {
    Mat r(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.n; ++j) r(i, j) = x[i] * y[j];
    return r;
}

inline Vec matvec(const Mat& m, const Vec& x) {
    Vec r(m.n);
    for (int i = 0; i < m.n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.n; ++j) s += m(i, j) * x[j];
        r[i] = s;
    }
    return r;
}

inline Mat matmul(const Mat& x, const Mat& y) {
    Mat r(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.n; ++j) {
            double s = 0.0;
            for (int k = 0; k < x.n; ++k) s += x(i, k) * y(k, j);
            r(i, j) = s;
        }
    return r;
}

inline double dot(const Vec& x, const Vec& y) {
    double s = 0.0;
    for (int i = 0; i < x.n; ++i) s += x[i] * y[i];
    return s;
}

inline double trace_with(const Mat& gi, const Mat& t) {
    double s = 0.0;
    for (int i = 0; i < gi.n; ++i)
        for (int j = 0; j < gi.n; ++j) s += gi(i, j) * t(i, j);
    return s;
}

inline double max_abs(const Mat& m) {
    double r = 0.0;
    for (int i = 0; i < m.n * m.n; ++i) r = std::fmax(r, std::fabs(m.a[i]));
    return r;
}

// LU with partial pivoting; returns false on (numerically) singular input.
inline bool invert(const Mat& m, Mat& out, double* det = nullptr) {
    const int n = m.n;
    double aug[kMaxDim][2 * kMaxDim];
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) aug[i][j] = m(i, j);
        for (int j = 0; j < n; ++j) aug[i][n + j] = (i == j) ? 1.0 : 0.0;
    }
    double d = 1.0;
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::fabs(aug[r][c]) > std::fabs(aug[piv][c])) piv = r;
        if (std::fabs(aug[piv][c]) < 1e-300) return false;
        if (piv != c) {
            for (int j = 0; j < 2 * n; ++j) std::swap(aug[piv][j], aug[c][j]);
            d = -d;
        }
        d *= aug[c][c];
        const double inv_p = 1.0 / aug[c][c];
        for (int j = 0; j < 2 * n; ++j) aug[c][j] *= inv_p;
        for (int r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = aug[r][c];
            if (f == 0.0) continue;
            for (int j = 0; j < 2 * n; ++j) aug[r][j] -= f * aug[c][j];
        }
    }
    out = Mat(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = aug[i][n + j];
    if (det) *det = d;
    return true;
}

inline double determinant(const Mat& m) {
    Mat tmp;
    double d = 0.0;
    if (!invert(m, tmp, &d)) return 0.0;
    return d;
}

}  // namespace dnull
