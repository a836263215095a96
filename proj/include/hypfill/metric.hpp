#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "hypfill/core.hpp"
#include "hypfill/hyperboloid.hpp"

namespace hypfill {

struct Vec2 {
    double x = 0, y = 0;
};
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double t, Vec2 a) { return {t * a.x, t * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

// Poincare-disc chart of the hyperboloid sheet (n=2).
inline Vec2 chart_of(const HPoint& x) {
    return {x[0] / (1.0 + x.time()), x[1] / (1.0 + x.time())};
}
inline HPoint point_of_chart(Vec2 z) {
    double D = 1.0 - dot(z, z);
    HPoint x;
    x.n = 2;
    x.c = {2 * z.x / D, 2 * z.y / D, (1 + dot(z, z)) / D, 0};
    return renormalize(x);
}
// Differential of the chart map at x applied to an ambient tangent vector.
inline Vec2 chart_velocity(const HPoint& x, const TangentVec& v) {
    double t = 1.0 + x.time();
    return {v[0] / t - x[0] * v[2] / (t * t), v[1] / t - x[1] * v[2] / (t * t)};
}
// Differential of the inverse chart map: ambient velocity of a chart curve.
inline TangentVec ambient_velocity(Vec2 z, Vec2 zdot) {
    double D = 1.0 - dot(z, z);
    double zz = dot(z, zdot);
    TangentVec v;
    v.base = point_of_chart(z);
    v.v = {2 * zdot.x / D + 4 * z.x * zz / (D * D), 2 * zdot.y / D + 4 * z.y * zz / (D * D),
           4 * zz / (D * D), 0};
    return v;
}

/// Compactly supported radial conformal bump u = amplitude * (1-(r/radius)^2)^3
/// inside the geodesic ball around `center`, zero outside.
struct ConformalBump {
    HPoint center;
    double radius = 0.9;
    double amplitude = 0.05;

    double profile(double r) const {
        if (r >= radius) return 0.0;
        double q = 1.0 - (r / radius) * (r / radius);
        return amplitude * q * q * q;
    }
    double profile_d1(double r) const {
        if (r >= radius) return 0.0;
        double q = 1.0 - (r / radius) * (r / radius);
        return -6.0 * amplitude * r / (radius * radius) * q * q;
    }
    double profile_d2(double r) const {
        if (r >= radius) return 0.0;
        double rr = radius * radius;
        double q = 1.0 - r * r / rr;
        return -6.0 * amplitude / rr * q * q + 24.0 * amplitude * r * r / (rr * rr) * q;
    }
    // f'(r)/sinh(r), finite at r=0.
    double profile_d1_over_sinh(double r) const {
        if (r >= radius) return 0.0;
        double q = 1.0 - (r / radius) * (r / radius);
        double ratio = (r < 1e-5) ? 1.0 - r * r / 6.0 : r / std::sinh(r);
        return -6.0 * amplitude / (radius * radius) * q * q * ratio;
    }
};

struct GeodesicResult {
    bool ok = false;
    double length = 0;       // g-length of the solved segment
    double residual = 0;     // terminal gap, metric units
    int iterations = 0;
    VecN init_dir;           // frame components of the unit initial velocity
    Vec2 chart_velocity0;    // affine chart velocity at t=0 (time-1 param)
};

/// The metric g = e^{2u} g0 on H^n, with u a compactly supported conformal
/// bump (u == 0 gives exact hyperbolic space). Chart work happens in the
/// Poincare disc where g = e^{2w} delta, w = u + log(2/(1-|z|^2)).
class MetricField {
public:
    int n = 2;
    double R = 3.0;
    std::optional<ConformalBump> bump;
    double ivp_step = 5e-3;  // RK4 arclength step

    MetricField() = default;
    MetricField(int n_, double R_) : n(n_), R(R_) {}
    MetricField(int n_, double R_, ConformalBump b) : n(n_), R(R_), bump(std::move(b)) {
        if (n_ != 2) throw UsageError("MetricField: perturbed metrics require n=2");
        double margin = dist0(origin(2), b.center) + b.radius;
        if (margin >= R / 2) throw UsageError("MetricField: bump support must stay inside B_o(R/2)");
        if (std::abs(b.amplitude) > 0.2) throw UsageError("MetricField: |amplitude| must be <= 0.2");
    }

    bool is_exact() const { return !bump.has_value(); }

    double bump_dist(const HPoint& x) const { return dist0(x, bump->center); }

    double conformal_u(const HPoint& x) const {
        if (!bump) return 0.0;
        return bump->profile(bump_dist(x));
    }
    double u_chart(Vec2 z) const { return is_exact() ? 0.0 : conformal_u(point_of_chart(z)); }

    // Total conformal exponent of the chart metric g = e^{2w} delta.
    double w_chart(Vec2 z) const {
        double D = 1.0 - dot(z, z);
        return u_chart(z) + std::log(2.0 / D);
    }

    // Euclidean gradient of w in the chart.
    Vec2 grad_w(Vec2 z) const {
        double D = 1.0 - dot(z, z);
        Vec2 g = (2.0 / D) * z;
        if (bump) {
            HPoint x = point_of_chart(z);
            double r = bump_dist(x);
            if (r < bump->radius) {
                double s = bump->profile_d1_over_sinh(r);
                // grad q where q = -<X(z), C> = cosh r
                const HPoint& C = bump->center;
                double DD = D * D;
                for (int i = 0; i < 2; ++i) {
                    double zi = (i == 0) ? z.x : z.y;
                    // d X / d z_i, ambient
                    double dxs0 = (i == 0 ? 2.0 / D : 0.0) + 4 * z.x * zi / DD;
                    double dxs1 = (i == 1 ? 2.0 / D : 0.0) + 4 * z.y * zi / DD;
                    double dxt = 4 * zi / DD;
                    double dq = -(dxs0 * C[0] + dxs1 * C[1] - dxt * C[2]);
                    if (i == 0)
                        g.x += s * dq;
                    else
                        g.y += s * dq;
                }
            }
        }
        return g;
    }

    /// Chart metric tensor at z: e^{2w} I.
    MatN metric_at(Vec2 z) const {
        double e = std::exp(2.0 * w_chart(z));
        MatN m = MatN::zero(2);
        m(0, 0) = e;
        m(1, 1) = e;
        return m;
    }

    /// Christoffel symbols of a conformal metric: Gamma^k_{ij} =
    /// d_i w delta_jk + d_j w delta_ik - d_k w delta_ij. Returns Gamma[k].
    std::array<MatN, 2> christoffel(Vec2 z) const {
        Vec2 g = grad_w(z);
        std::array<double, 2> wg{g.x, g.y};
        std::array<MatN, 2> out{MatN::zero(2), MatN::zero(2)};
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    double v = 0;
                    if (i == k) v += wg[static_cast<size_t>(j)];
                    if (j == k) v += wg[static_cast<size_t>(i)];
                    if (i == j) v -= wg[static_cast<size_t>(k)];
                    out[static_cast<size_t>(k)](i, j) = v;
                }
        return out;
    }

    /// Gauss curvature K = e^{-2u} (-1 - Lap_{g0} u); equals -1 when u == 0.
    double curvature_at(const HPoint& x) const {
        if (n != 2) throw UsageError("curvature_at: n=2 only");
        if (is_exact()) return -1.0;
        double r = bump_dist(x);
        double lap = 0.0;
        if (r < bump->radius) {
            double f1 = bump->profile_d1(r), f2 = bump->profile_d2(r);
            lap = (r < 1e-6) ? 2.0 * bump->profile_d2(0.0) : f2 + f1 / std::tanh(r);
        }
        return std::exp(-2.0 * conformal_u(x)) * (-1.0 - lap);
    }

    /// C^2-type size of the perturbation: max of |u|, |du|_{g0}, |D^2 u|_{g0}
    /// over a radial sample grid (u is radial around the bump center).
    double epsilon_norm() const {
        if (is_exact()) return 0.0;
        double m = 0;
        int K = 4000;
        for (int i = 0; i <= K; ++i) {
            double r = bump->radius * i / K;
            double f = std::abs(bump->profile(r));
            double f1 = std::abs(bump->profile_d1(r));
            double f2 = std::abs(bump->profile_d2(r));
            double ftan = (r < 1e-9) ? std::abs(bump->profile_d2(0.0))
                                     : std::abs(bump->profile_d1(r) / std::tanh(r));
            m = std::max({m, f, f1, f2, ftan});
        }
        return m;
    }

    struct ChartState {
        Vec2 z, zdot;
    };

    Vec2 accel(Vec2 z, Vec2 zdot) const {
        Vec2 gw = grad_w(z);
        double a = dot(gw, zdot);
        double v2 = dot(zdot, zdot);
        return (-2.0 * a) * zdot + v2 * gw;
    }

    ChartState rk4_step(const ChartState& s, double dt) const {
        auto f = [&](const ChartState& q) { return ChartState{q.zdot, accel(q.z, q.zdot)}; };
        ChartState k1 = f(s);
        ChartState k2 = f({s.z + 0.5 * dt * k1.z, s.zdot + 0.5 * dt * k1.zdot});
        ChartState k3 = f({s.z + 0.5 * dt * k2.z, s.zdot + 0.5 * dt * k2.zdot});
        ChartState k4 = f({s.z + dt * k3.z, s.zdot + dt * k3.zdot});
        return {s.z + (dt / 6.0) * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z),
                s.zdot + (dt / 6.0) * (k1.zdot + 2.0 * k2.zdot + 2.0 * k3.zdot + k4.zdot)};
    }

    double speed_g(const ChartState& s) const { return std::exp(w_chart(s.z)) * norm(s.zdot); }

    /// Integrate the geodesic IVP for affine time T; returns the final state
    /// and optionally the trajectory (sampled once per step).
    ChartState integrate(ChartState s, double T, std::vector<ChartState>* path = nullptr) const {
        double sp = std::max(speed_g(s), 1e-15);
        int steps = std::max(1, static_cast<int>(std::ceil(std::abs(T) * sp / ivp_step)));
        double dt = T / steps;
        if (path) {
            path->clear();
            path->push_back(s);
        }
        for (int i = 0; i < steps; ++i) {
            s = rk4_step(s, dt);
            if (path) path->push_back(s);
        }
        return s;
    }

    /// g-exponential in frame components (orthonormal frame e_k = e^{-w} d_k
    /// in the perturbed chart, transported coordinate frame when exact).
    HPoint exp_g(const HPoint& x, const VecN& xi) const {
        if (is_exact()) {
            Frame f = frame_at(x);
            return exp_map(x, f.vector(xi));
        }
        Vec2 z = chart_of(x);
        double ew = std::exp(-w_chart(z));
        ChartState s{z, {ew * xi[0], ew * xi[1]}};
        s = integrate(s, 1.0);
        return point_of_chart(s.z);
    }

    /// exp_g together with the parallel transport of the canonical frame: the
    /// returned orthogonal matrix B maps frame components at x to frame
    /// components at the endpoint of their transported images.
    std::pair<HPoint, MatN> exp_g_with_transport(const HPoint& x, const VecN& xi) const {
        if (is_exact()) {
            Frame fx = frame_at(x);
            HPoint q = exp_map(x, fx.vector(xi));
            Frame fq = frame_at(q);
            MatN B = MatN::zero(n);
            for (int k = 0; k < n; ++k) {
                TangentVec t = parallel_transport(x, q, fx.e[static_cast<size_t>(k)]);
                VecN comps = fq.components(t);
                for (int j = 0; j < n; ++j) B(j, k) = comps[j];
            }
            return {q, B};
        }
        // Joint RK4 of the geodesic and the frame transport ODE
        // e' = -Gamma(zdot, e).
        struct S {
            Vec2 z, zd, e0, e1;
        };
        Vec2 z = chart_of(x);
        double ew = std::exp(-w_chart(z));
        S s{z, {ew * xi[0], ew * xi[1]}, {ew, 0}, {0, ew}};
        auto gamma_apply = [&](Vec2 zz, Vec2 a, Vec2 b) {
            Vec2 gw = grad_w(zz);
            // Gamma^k_{ij} a^i b^j for the conformal metric.
            double g0 = gw.x * (a.x * b.x - a.y * b.y) + gw.y * (a.x * b.y + a.y * b.x);
            double g1 = gw.y * (a.y * b.y - a.x * b.x) + gw.x * (a.x * b.y + a.y * b.x);
            return Vec2{g0, g1};
        };
        auto f = [&](const S& q) {
            return S{q.zd, accel(q.z, q.zd), (-1.0) * gamma_apply(q.z, q.zd, q.e0),
                     (-1.0) * gamma_apply(q.z, q.zd, q.e1)};
        };
        auto axpy = [](const S& a, double t, const S& b) {
            return S{a.z + t * b.z, a.zd + t * b.zd, a.e0 + t * b.e0, a.e1 + t * b.e1};
        };
        double len = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1]);
        int steps = std::max(1, static_cast<int>(std::ceil(len / ivp_step)));
        double dt = 1.0 / steps;
        for (int i = 0; i < steps; ++i) {
            S k1 = f(s);
            S k2 = f(axpy(s, 0.5 * dt, k1));
            S k3 = f(axpy(s, 0.5 * dt, k2));
            S k4 = f(axpy(s, dt, k3));
            S sum{k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z,
                  k1.zd + 2.0 * k2.zd + 2.0 * k3.zd + k4.zd,
                  k1.e0 + 2.0 * k2.e0 + 2.0 * k3.e0 + k4.e0,
                  k1.e1 + 2.0 * k2.e1 + 2.0 * k3.e1 + k4.e1};
            s = axpy(s, dt / 6.0, sum);
        }
        HPoint q = point_of_chart(s.z);
        double ewq = std::exp(w_chart(s.z));
        MatN B = MatN::zero(2);
        B(0, 0) = ewq * s.e0.x;
        B(1, 0) = ewq * s.e0.y;
        B(0, 1) = ewq * s.e1.x;
        B(1, 1) = ewq * s.e1.y;
        return {q, B};
    }

    /// Geodesic boundary-value problem: shoot from x to y with Newton on the
    /// time-1 chart velocity, warm-started from the unperturbed solution.
    GeodesicResult geodesic_bvp(const HPoint& x, const HPoint& y, double tol = 1e-9,
                                int max_iter = 40) const {
        GeodesicResult res;
        if (is_exact()) {
            res.ok = true;
            res.length = dist0(x, y);
            TangentVec lm = log_map(x, y);
            double nn = tangent_norm(lm);
            Frame f = frame_at(x);
            res.init_dir = f.components(nn > 0 ? scale(1.0 / nn, lm) : lm);
            if (n == 2) res.chart_velocity0 = chart_velocity(x, lm);
            return res;
        }
        Vec2 zx = chart_of(x), zy = chart_of(y);
        Vec2 v = chart_velocity(x, log_map(x, y));
        double scale_res = std::exp(w_chart(zy));
        double prev = 1e300;
        for (int it = 0; it < max_iter; ++it) {
            Vec2 end = integrate({zx, v}, 1.0).z;
            Vec2 gap = zy - end;
            double rg = scale_res * norm(gap);
            res.iterations = it + 1;
            if (rg < tol) {
                res.ok = true;
                res.residual = rg;
                break;
            }
            if (rg > 4.0 * prev) break;  // diverging
            prev = std::min(prev, rg);
            // Finite-difference shooting Jacobian d end / d v.
            double h = 1e-6 * (1.0 + norm(v));
            Vec2 ex = integrate({zx, v + Vec2{h, 0}}, 1.0).z;
            Vec2 ey = integrate({zx, v + Vec2{0, h}}, 1.0).z;
            MatN J = MatN::zero(2);
            J(0, 0) = (ex.x - end.x) / h;
            J(1, 0) = (ex.y - end.y) / h;
            J(0, 1) = (ey.x - end.x) / h;
            J(1, 1) = (ey.y - end.y) / h;
            VecN dv = inverse(J) * vec2(gap.x, gap.y);
            v = v + Vec2{dv[0], dv[1]};
        }
        if (!res.ok) {
            res.residual = prev;
            return res;
        }
        // Length by Simpson over the solved trajectory's g-speed.
        std::vector<ChartState> path;
        integrate({zx, v}, 1.0, &path);
        double L = 0;
        for (size_t i = 0; i + 1 < path.size(); ++i) {
            ChartState mid = rk4_step(path[i], 0.5 / (static_cast<double>(path.size()) - 1));
            L += (speed_g(path[i]) + 4 * speed_g(mid) + speed_g(path[i + 1])) / 6.0;
        }
        res.length = L / (static_cast<double>(path.size()) - 1);
        res.chart_velocity0 = v;
        double ew = std::exp(w_chart(zx));
        res.init_dir = vec2(ew * v.x, ew * v.y);
        double nn = norm(res.init_dir);
        if (nn > 0) res.init_dir = (1.0 / nn) * res.init_dir;
        return res;
    }

    double dist_g(const HPoint& x, const HPoint& y) const {
        if (is_exact()) return dist0(x, y);
        GeodesicResult r = geodesic_bvp(x, y);
        if (!r.ok) throw SolverFailure("dist_g: BVP did not converge");
        return r.length;
    }
};

}  // namespace hypfill
