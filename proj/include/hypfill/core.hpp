#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hypfill {

// Small fixed-capacity vector of frame components; n is 2 or 3 at runtime.
struct VecN {
    int n = 2;
    std::array<double, 3> c{0.0, 0.0, 0.0};

    double& operator[](int i) { return c[static_cast<size_t>(i)]; }
    double operator[](int i) const { return c[static_cast<size_t>(i)]; }
};

inline VecN vec2(double a, double b) { return VecN{2, {a, b, 0.0}}; }
inline VecN vec3(double a, double b, double c) { return VecN{3, {a, b, c}}; }

inline VecN operator+(VecN a, const VecN& b) {
    for (int i = 0; i < a.n; ++i) a[i] += b[i];
    return a;
}
inline VecN operator-(VecN a, const VecN& b) {
    for (int i = 0; i < a.n; ++i) a[i] -= b[i];
    return a;
}
inline VecN operator*(double t, VecN a) {
    for (int i = 0; i < a.n; ++i) a[i] *= t;
    return a;
}
inline double dot(const VecN& a, const VecN& b) {
    double s = 0;
    for (int i = 0; i < a.n; ++i) s += a[i] * b[i];
    return s;
}
inline double norm(const VecN& a) { return std::sqrt(dot(a, a)); }

// Row-major n-by-n matrix, n in {2,3}.
struct MatN {
    int n = 2;
    std::array<double, 9> m{};

    double& operator()(int i, int j) { return m[static_cast<size_t>(i * n + j)]; }
    double operator()(int i, int j) const { return m[static_cast<size_t>(i * n + j)]; }

    static MatN identity(int n) {
        MatN a;
        a.n = n;
        for (int i = 0; i < n; ++i) a(i, i) = 1.0;
        return a;
    }
    static MatN zero(int n) {
        MatN a;
        a.n = n;
        return a;
    }
};

inline MatN operator+(MatN a, const MatN& b) {
    for (int i = 0; i < a.n * a.n; ++i) a.m[static_cast<size_t>(i)] += b.m[static_cast<size_t>(i)];
    return a;
}
inline MatN operator-(MatN a, const MatN& b) {
    for (int i = 0; i < a.n * a.n; ++i) a.m[static_cast<size_t>(i)] -= b.m[static_cast<size_t>(i)];
    return a;
}
inline MatN operator*(double t, MatN a) {
    for (int i = 0; i < a.n * a.n; ++i) a.m[static_cast<size_t>(i)] *= t;
    return a;
}
inline VecN operator*(const MatN& a, const VecN& v) {
    VecN r;
    r.n = a.n;
    for (int i = 0; i < a.n; ++i) {
        double s = 0;
        for (int j = 0; j < a.n; ++j) s += a(i, j) * v[j];
        r[i] = s;
    }
    return r;
}
inline MatN operator*(const MatN& a, const MatN& b) {
    MatN r = MatN::zero(a.n);
    for (int i = 0; i < a.n; ++i)
        for (int k = 0; k < a.n; ++k)
            for (int j = 0; j < a.n; ++j) r(i, j) += a(i, k) * b(k, j);
    return r;
}

inline double det(const MatN& a) {
    if (a.n == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
           a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
           a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

inline MatN inverse(const MatN& a) {
    double d = det(a);
    if (std::abs(d) < 1e-300) throw std::runtime_error("MatN: singular matrix");
    MatN r = MatN::zero(a.n);
    if (a.n == 2) {
        r(0, 0) = a(1, 1) / d;
        r(0, 1) = -a(0, 1) / d;
        r(1, 0) = -a(1, 0) / d;
        r(1, 1) = a(0, 0) / d;
    } else {
        r(0, 0) = (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) / d;
        r(0, 1) = (a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2)) / d;
        r(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) / d;
        r(1, 0) = (a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2)) / d;
        r(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)) / d;
        r(1, 2) = (a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2)) / d;
        r(2, 0) = (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)) / d;
        r(2, 1) = (a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1)) / d;
        r(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) / d;
    }
    return r;
}

inline MatN transpose(const MatN& a) {
    MatN r = MatN::zero(a.n);
    for (int i = 0; i < a.n; ++i)
        for (int j = 0; j < a.n; ++j) r(i, j) = a(j, i);
    return r;
}

inline double trace(const MatN& a) {
    double s = 0;
    for (int i = 0; i < a.n; ++i) s += a(i, i);
    return s;
}

// Frobenius norm.
inline double frob(const MatN& a) {
    double s = 0;
    for (int i = 0; i < a.n * a.n; ++i) s += a.m[static_cast<size_t>(i)] * a.m[static_cast<size_t>(i)];
    return std::sqrt(s);
}

inline double sym_eig_max(const MatN& s) {
    if (s.n == 2) {
        double tr = s(0, 0) + s(1, 1);
        double d = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
        double disc = std::sqrt(std::max(0.0, tr * tr / 4 - d));
        return tr / 2 + disc;
    }
    // Trigonometric solution of the characteristic cubic.
    double q = trace(s) / 3.0;
    MatN b = s;
    for (int i = 0; i < 3; ++i) b(i, i) -= q;
    double p2 = 0;
    for (int i = 0; i < 9; ++i) p2 += b.m[static_cast<size_t>(i)] * b.m[static_cast<size_t>(i)];
    double p = std::sqrt(p2 / 6.0);
    if (p < 1e-300) return q;
    MatN bb = (1.0 / p) * b;
    double r = det(bb) / 2.0;
    r = std::min(1.0, std::max(-1.0, r));
    double phi = std::acos(r) / 3.0;
    return q + 2 * p * std::cos(phi);
}

// Spectral norm via the largest eigenvalue of the Gram matrix.
inline double op_norm(const MatN& a) {
    MatN g = transpose(a) * a;
    return std::sqrt(std::max(0.0, sym_eig_max(g)));
}

struct SolverFailure : std::runtime_error {
    explicit SolverFailure(const std::string& what) : std::runtime_error(what) {}
};

struct UsageError : std::invalid_argument {
    explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace hypfill
