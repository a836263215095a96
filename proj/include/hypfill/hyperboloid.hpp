#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "hypfill/core.hpp"

namespace hypfill {

// Ambient vector in R^{n,1}; spatial coordinates first, timelike last.
using Amb = std::array<double, 4>;

/// Point on the upper sheet of the unit hyperboloid {<x,x> = -1, x_n >= 1}.
struct HPoint {
    int n = 2;
    Amb c{0, 0, 1, 0};

    double& operator[](int i) { return c[static_cast<size_t>(i)]; }
    double operator[](int i) const { return c[static_cast<size_t>(i)]; }
    int dim() const { return n; }
    double time() const { return c[static_cast<size_t>(n)]; }
};

/// Tangent vector at `base`, ambient representation with <base, v> = 0.
struct TangentVec {
    HPoint base;
    Amb v{0, 0, 0, 0};

    double& operator[](int i) { return v[static_cast<size_t>(i)]; }
    double operator[](int i) const { return v[static_cast<size_t>(i)]; }
};

inline double mink_inner(const Amb& a, const Amb& b, int n) {
    double s = 0;
    for (int i = 0; i < n; ++i) s += a[static_cast<size_t>(i)] * b[static_cast<size_t>(i)];
    return s - a[static_cast<size_t>(n)] * b[static_cast<size_t>(n)];
}
inline double mink_inner(const HPoint& a, const HPoint& b) { return mink_inner(a.c, b.c, a.n); }
inline double mink_inner(const TangentVec& a, const TangentVec& b) { return mink_inner(a.v, b.v, a.base.n); }
inline double mink_inner(const HPoint& a, const TangentVec& b) { return mink_inner(a.c, b.v, a.n); }

inline HPoint origin(int n) {
    HPoint o;
    o.n = n;
    o.c = {0, 0, 0, 0};
    o.c[static_cast<size_t>(n)] = 1.0;
    return o;
}

// Rescale the timelike normalization after ambient arithmetic so the sheet
// constraint holds to machine precision.
inline HPoint renormalize(HPoint x) {
    double sp = 0;
    for (int i = 0; i < x.n; ++i) sp += x[i] * x[i];
    double t = std::sqrt(1.0 + sp);
    x.c[static_cast<size_t>(x.n)] = t;
    return x;
}

inline HPoint make_hpoint(int n, const Amb& c) {
    HPoint x;
    x.n = n;
    x.c = c;
    return renormalize(x);
}

// Remove the component along x (Minkowski projection onto T_x).
inline TangentVec project_tangent(const HPoint& x, const Amb& v) {
    double a = mink_inner(v, x.c, x.n);  // <v,x>, and <x,x> = -1
    TangentVec t;
    t.base = x;
    for (int i = 0; i <= x.n; ++i) t.v[static_cast<size_t>(i)] = v[static_cast<size_t>(i)] + a * x.c[static_cast<size_t>(i)];
    return t;
}

inline double tangent_norm(const TangentVec& v) {
    return std::sqrt(std::max(0.0, mink_inner(v, v)));
}

inline TangentVec scale(double t, TangentVec v) {
    for (auto& a : v.v) a *= t;
    return v;
}

/// Hyperbolic distance. Uses 2*asinh(|x-y|_mink / 2), stable for close points.
inline double dist0(const HPoint& x, const HPoint& y) {
    double q = 0;
    for (int i = 0; i <= x.n; ++i) {
        double d = x.c[static_cast<size_t>(i)] - y.c[static_cast<size_t>(i)];
        q += (i == x.n ? -d * d : d * d);
    }
    return 2.0 * std::asinh(0.5 * std::sqrt(std::max(0.0, q)));
}

/// exp_x(v) = cosh(|v|) x + sinh(|v|) v/|v|.
inline HPoint exp_map(const HPoint& x, const TangentVec& v) {
    double r = tangent_norm(v);
    HPoint y;
    y.n = x.n;
    if (r < 1e-300) return x;
    double ch = std::cosh(r), sh = std::sinh(r) / r;
    for (int i = 0; i <= x.n; ++i)
        y.c[static_cast<size_t>(i)] = ch * x.c[static_cast<size_t>(i)] + sh * v.v[static_cast<size_t>(i)];
    return renormalize(y);
}

/// Inverse of exp_map: |log_map(x,y)| = dist0(x,y).
inline TangentVec log_map(const HPoint& x, const HPoint& y) {
    double d = dist0(x, y);
    TangentVec t;
    t.base = x;
    if (d < 1e-14) {
        // First-order: y - x is tangent up to O(d^2).
        for (int i = 0; i <= x.n; ++i) t.v[static_cast<size_t>(i)] = y.c[static_cast<size_t>(i)] - x.c[static_cast<size_t>(i)];
        return project_tangent(x, t.v);
    }
    double ch = std::cosh(d), sh = std::sinh(d);
    for (int i = 0; i <= x.n; ++i)
        t.v[static_cast<size_t>(i)] = (d / sh) * (y.c[static_cast<size_t>(i)] - ch * x.c[static_cast<size_t>(i)]);
    return t;
}

/// Origin-centered homothety A_t(x) = exp_o(t * exp_o^{-1}(x)), 0 <= t <= 1.
inline HPoint homothety_At(double t, const HPoint& x) {
    if (std::abs(t - 1.0) < 1e-16) return x;
    HPoint o = origin(x.n);
    return exp_map(o, scale(t, log_map(o, x)));
}

// Unit spatial direction -> future null vector of the ray from o toward it.
inline Amb null_vector(int n, const std::array<double, 3>& dir) {
    Amb b{0, 0, 0, 0};
    for (int i = 0; i < n; ++i) b[static_cast<size_t>(i)] = dir[static_cast<size_t>(i)];
    b[static_cast<size_t>(n)] = 1.0;
    return b;
}

/// Geodesic ray from o toward the unit direction v_s: (sinh t * v_s, cosh t).
inline HPoint ray_point(int n, const std::array<double, 3>& dir, double t) {
    HPoint x;
    x.n = n;
    double sh = std::sinh(t), ch = std::cosh(t);
    for (int i = 0; i < n; ++i) x.c[static_cast<size_t>(i)] = sh * dir[static_cast<size_t>(i)];
    x.c[static_cast<size_t>(n)] = ch;
    return x;
}

/// Busemann function of the ray from o toward s, normalized to 0 at o:
/// log(-<x, b_s>) with b_s = (v_s, 1).
inline double busemann0(int n, const std::array<double, 3>& dir, const HPoint& x) {
    Amb b = null_vector(n, dir);
    return std::log(-mink_inner(x.c, b, n));
}

/// Riemannian gradient of busemann0; unit norm, equal to x + b_s/<x,b_s>.
inline TangentVec busemann0_grad(int n, const std::array<double, 3>& dir, const HPoint& x) {
    Amb b = null_vector(n, dir);
    double ip = mink_inner(x.c, b, n);
    TangentVec g;
    g.base = x;
    for (int i = 0; i <= n; ++i)
        g.v[static_cast<size_t>(i)] = x.c[static_cast<size_t>(i)] + b[static_cast<size_t>(i)] / ip;
    return g;
}

/// Hessian of busemann0 evaluated on tangent vectors:
/// D^2 Phi(u,w) = <u,w> - dPhi(u) dPhi(w).
inline double busemann0_hess(int n, const std::array<double, 3>& dir, const HPoint& x,
                             const TangentVec& u, const TangentVec& w) {
    Amb b = null_vector(n, dir);
    double ip = mink_inner(x.c, b, n);
    double du = mink_inner(u.v, b, n) / ip;
    double dw = mink_inner(w.v, b, n) / ip;
    return mink_inner(u, w) - du * dw;
}

/// Parallel transport of v from T_x to T_y along the connecting geodesic.
inline TangentVec parallel_transport(const HPoint& x, const HPoint& y, const TangentVec& v) {
    double denom = 1.0 - mink_inner(x, y);  // 1 + cosh d
    double a = mink_inner(v.v, y.c, x.n) / denom;
    TangentVec r;
    r.base = y;
    for (int i = 0; i <= x.n; ++i)
        r.v[static_cast<size_t>(i)] = v.v[static_cast<size_t>(i)] + a * (x.c[static_cast<size_t>(i)] + y.c[static_cast<size_t>(i)]);
    return r;
}

/// Orthonormal frame at x obtained by transporting the coordinate frame at o.
/// Smooth in x and deterministic.
struct Frame {
    HPoint base;
    std::array<TangentVec, 3> e;  // e[0..n-1]

    VecN components(const TangentVec& v) const {
        VecN r;
        r.n = base.n;
        for (int i = 0; i < base.n; ++i) r[i] = mink_inner(v, e[static_cast<size_t>(i)]);
        return r;
    }
    TangentVec vector(const VecN& comps) const {
        TangentVec v;
        v.base = base;
        for (int i = 0; i <= base.n; ++i) {
            double s = 0;
            for (int k = 0; k < base.n; ++k) s += comps[k] * e[static_cast<size_t>(k)].v[static_cast<size_t>(i)];
            v.v[static_cast<size_t>(i)] = s;
        }
        return v;
    }
};

inline Frame frame_at(const HPoint& x) {
    Frame f;
    f.base = x;
    HPoint o = origin(x.n);
    for (int k = 0; k < x.n; ++k) {
        TangentVec ek;
        ek.base = o;
        ek.v = {0, 0, 0, 0};
        ek.v[static_cast<size_t>(k)] = 1.0;
        f.e[static_cast<size_t>(k)] = parallel_transport(o, x, ek);
    }
    return f;
}

/// Differential of the homothety A_t at x, as a matrix between the canonical
/// frames at x and A_t(x). Radial stretch t, tangential sinh(tr)/sinh(r).
inline MatN homothety_differential(double t, const HPoint& x) {
    int n = x.n;
    HPoint o = origin(n);
    TangentVec lo = log_map(o, x);
    double r = tangent_norm(lo);
    HPoint y = homothety_At(t, x);
    Frame fx = frame_at(x), fy = frame_at(y);
    if (r < 1e-9) {
        // A_t near o is linear with uniform factor t in transported frames.
        return t * MatN::identity(n);
    }
    // Radial unit vectors at x and y.
    TangentVec ux = scale(1.0 / r, log_map(x, o));  // points toward o
    TangentVec uy = scale(1.0 / (t * r), log_map(y, o));
    VecN rx = fx.components(ux), ry = fy.components(uy);
    double tang = std::sinh(t * r) / std::sinh(r);
    MatN m = MatN::zero(n);
    // tang * (transport part) + (t - tang) * radial projector, expressed via
    // the frame components of the radial directions (the transported frames
    // already agree on radial/tangential decomposition along radii through o).
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = tang * (i == j ? 1.0 : 0.0) + (t - tang) * ry[i] * rx[j];
    return m;
}

/// Distance from c to the full geodesic through p with unit tangent u.
inline double dist_to_geodesic(const HPoint& c, const HPoint& p, const TangentVec& u) {
    // Normal of the plane span{p,u}: eta * (p x u) in R^{2,1}; for n=3 the
    // closed form below only treats n=2 callers.
    Amb nvec{};
    nvec[0] = p.c[1] * u.v[2] - p.c[2] * u.v[1];
    nvec[1] = p.c[2] * u.v[0] - p.c[0] * u.v[2];
    nvec[2] = -(p.c[0] * u.v[1] - p.c[1] * u.v[0]);
    double nn = mink_inner(nvec, nvec, 2);
    double cn = mink_inner(c.c, nvec, 2);
    return std::asinh(std::abs(cn) / std::sqrt(std::max(nn, 1e-300)));
}

}  // namespace hypfill
