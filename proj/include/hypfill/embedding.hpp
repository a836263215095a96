#pragma once

#include <cmath>
#include <vector>

#include "hypfill/core.hpp"
#include "hypfill/hyperboloid.hpp"
#include "hypfill/metric.hpp"
#include "hypfill/parallel.hpp"
#include "hypfill/sphere.hpp"

namespace hypfill {

/// Busemann data of one base point against every grid node: values, unit
/// gradients (components in the canonical orthonormal frame at x), and the
/// direction-map density lambda(x, s).
struct PointEval {
    HPoint x;
    std::vector<double> phi;     // N
    std::vector<VecN> grad;      // N, frame components, unit norm
    std::vector<double> lambda;  // N, positive, integrates to 1 against ds
};

/// 6th-order central first derivative on a uniform periodic grid.
inline std::vector<double> periodic_derivative(const std::vector<double>& f, double step) {
    int N = static_cast<int>(f.size());
    std::vector<double> d(static_cast<size_t>(N));
    auto at = [&](int i) { return f[static_cast<size_t>((i % N + N) % N)]; };
    for (int i = 0; i < N; ++i) {
        d[static_cast<size_t>(i)] = (-at(i - 3) + 9 * at(i - 2) - 45 * at(i - 1) + 45 * at(i + 1) -
                                     9 * at(i + 2) + at(i + 3)) /
                                    (60.0 * step);
    }
    return d;
}

/// Density of the pushforward of the Haar measure on UT_xM under the inverse
/// gradient map, from sampled gradient angles (n=2). Gradients are given as
/// frame components; the grid must be the equiangular circle grid.
inline std::vector<double> lambda_from_grad_angles(const SphereGrid& grid,
                                                   const std::vector<VecN>& grads) {
    int N = grid.size();
    std::vector<double> psi(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) psi[static_cast<size_t>(i)] = std::atan2(grads[static_cast<size_t>(i)][1], grads[static_cast<size_t>(i)][0]);
    // Unwrap to a continuous branch; the map winds once around as s does.
    for (int i = 1; i < N; ++i) {
        double& p = psi[static_cast<size_t>(i)];
        double prev = psi[static_cast<size_t>(i - 1)];
        while (p - prev > kPi) p -= 2 * kPi;
        while (p - prev < -kPi) p += 2 * kPi;
    }
    // Derivative of psi with respect to the node angle; wraparound uses the
    // +2pi continuation of the branch.
    double step = 2 * kPi / N;
    std::vector<double> ext(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) ext[static_cast<size_t>(i)] = psi[static_cast<size_t>(i)] - step * i;  // periodic remainder
    std::vector<double> d = periodic_derivative(ext, step);
    for (int i = 0; i < N; ++i) d[static_cast<size_t>(i)] += 1.0;
    return d;
}

/// The Busemann-type embedding x -> (s -> Phi_s(x)) for the metric `metric`,
/// sampled on `grid`. Exact metrics use closed forms. Perturbed metrics
/// recover Phi_s as a normalized distance to the fixed unperturbed horosphere
/// tangent to the sphere of radius R toward s, computed by shooting the
/// horosphere's inward normal geodesics; the value is R minus arclength and
/// the gradient is the arriving unit velocity.
class EmbeddingField {
public:
    MetricField metric;
    GridPtr grid;
    double R_horo;

    EmbeddingField(MetricField m, GridPtr g) : metric(std::move(m)), grid(std::move(g)), R_horo(metric.R) {
        if (!metric.is_exact() && metric.n != 2)
            throw UsageError("EmbeddingField: perturbed metrics require n=2");
        if (!metric.is_exact()) {
            o_offset_.assign(static_cast<size_t>(grid->size()), 0.0);
            HPoint o = origin(2);
            std::vector<double> vals(static_cast<size_t>(grid->size()));
            parallel_for(grid->size(), [&](int i) {
                FlowHit hit = flow_to_point(i, o);
                vals[static_cast<size_t>(i)] = hit.value;
            });
            o_offset_ = vals;
        }
    }

    bool is_exact() const { return metric.is_exact(); }
    int dim() const { return metric.n; }

    /// Full Busemann data at x.
    PointEval eval(const HPoint& x) const {
        PointEval out;
        out.x = x;
        int N = grid->size();
        out.phi.resize(static_cast<size_t>(N));
        out.grad.resize(static_cast<size_t>(N));
        out.lambda.resize(static_cast<size_t>(N));
        if (is_exact()) {
            Frame f = frame_at(x);
            for (int i = 0; i < N; ++i) {
                const auto& dir = grid->nodes[static_cast<size_t>(i)];
                double value = busemann0(metric.n, dir, x);
                out.phi[static_cast<size_t>(i)] = value;
                out.grad[static_cast<size_t>(i)] = f.components(busemann0_grad(metric.n, dir, x));
                out.lambda[static_cast<size_t>(i)] = std::exp(-(metric.n - 1) * value);
            }
            return out;
        }
        parallel_for(N, [&](int i) {
            FlowHit hit = flow_to_point(i, x);
            out.phi[static_cast<size_t>(i)] = hit.value - o_offset_[static_cast<size_t>(i)];
            out.grad[static_cast<size_t>(i)] = hit.grad;
        });
        out.lambda = lambda_from_grad_angles(*grid, out.grad);
        return out;
    }

    BoundaryFunction phi_embed(const HPoint& x) const {
        PointEval e = eval(x);
        BoundaryFunction f(grid);
        f.values = e.phi;
        return f;
    }

    double busemann(int node, const HPoint& x) const {
        if (is_exact()) return busemann0(metric.n, grid->nodes[static_cast<size_t>(node)], x);
        return flow_to_point(node, x).value - o_offset_[static_cast<size_t>(node)];
    }

    /// alpha_inv(x, s) = grad Phi_s(x), frame components.
    VecN alpha_inv(int node, const HPoint& x) const {
        if (is_exact())
            return frame_at(x).components(busemann0_grad(metric.n, grid->nodes[static_cast<size_t>(node)], x));
        return flow_to_point(node, x).grad;
    }

    /// Inverse direction map for n=2: angle of s with grad Phi_s(x) = v,
    /// located on the grid and refined by local linear inversion.
    double alpha_angle(const PointEval& e, const VecN& v) const {
        if (metric.n != 2) throw UsageError("alpha_angle: n=2 only");
        int N = grid->size();
        double beta = std::atan2(v[1], v[0]);
        int best = 0;
        double bestgap = 1e300;
        auto anggap = [](double a, double b) {
            double d = std::fmod(a - b + 3 * kPi, 2 * kPi) - kPi;
            return d;
        };
        for (int i = 0; i < N; ++i) {
            double psi = std::atan2(e.grad[static_cast<size_t>(i)][1], e.grad[static_cast<size_t>(i)][0]);
            double gap = std::abs(anggap(psi, beta));
            if (gap < bestgap) {
                bestgap = gap;
                best = i;
            }
        }
        // Local inverse interpolation using the angular derivative (lambda).
        double psi_best = std::atan2(e.grad[static_cast<size_t>(best)][1], e.grad[static_cast<size_t>(best)][0]);
        double slope = std::max(e.lambda[static_cast<size_t>(best)], 1e-8);
        double theta = grid->angles[static_cast<size_t>(best)] + anggap(beta, psi_best) / slope;
        return std::fmod(theta + 4 * kPi, 2 * kPi);
    }

    /// Pushforward density; FD route for n=2, closed form for exact n=3.
    std::vector<double> density_lambda(const HPoint& x) const {
        PointEval e = eval(x);
        if (metric.n == 2 && is_exact()) return lambda_from_grad_angles(*grid, e.grad);
        return e.lambda;
    }

    const std::vector<double>& o_offsets() const { return o_offset_; }

private:
    std::vector<double> o_offset_;

    struct FlowHit {
        double value = 0;  // -R + arclength from the horosphere
        VecN grad;         // arriving unit velocity, frame components
        double offset = 0; // signed transversal miss (diagnostic)
    };

    struct AmbState {
        HPoint p;
        TangentVec v;  // unit
    };

    // Geodesic ray data for node i: base point of the horosphere, its unit
    // tangent, and the null vector of the ideal point.
    struct Horo {
        HPoint p0;
        Amb E;
        Amb b;
    };

    Horo horo_data(int node) const {
        const auto& dir = grid->nodes[static_cast<size_t>(node)];
        Horo h;
        h.p0 = ray_point(2, dir, R_horo);
        h.E = {-dir[1] * 1.0, dir[0] * 1.0, 0, 0};
        h.b = null_vector(2, dir);
        return h;
    }

    HPoint horocycle_point(const Horo& h, double tau) const {
        double c = 0.5 * tau * tau * std::exp(R_horo);
        HPoint y;
        y.n = 2;
        for (int i = 0; i <= 2; ++i)
            y.c[static_cast<size_t>(i)] = h.p0.c[static_cast<size_t>(i)] + tau * h.E[static_cast<size_t>(i)] + c * h.b[static_cast<size_t>(i)];
        return renormalize(y);
    }

    TangentVec inward_normal(const Horo& h, const HPoint& y) const {
        // grad of the unperturbed Busemann on its own horosphere: y - e^R b.
        TangentVec g;
        g.base = y;
        double eR = std::exp(R_horo);
        for (int i = 0; i <= 2; ++i)
            g.v[static_cast<size_t>(i)] = y.c[static_cast<size_t>(i)] - eR * h.b[static_cast<size_t>(i)];
        return g;
    }

    // One normal-flow shot from the horosphere parameter tau; reports the
    // signed miss at closest approach to `target` and the Busemann value.
    struct ShotResult {
        double miss = 0;
        double value = 0;
        VecN grad;
    };

    ShotResult shoot(const Horo& h, double tau, const HPoint& target) const {
        const ConformalBump& bb = *metric.bump;
        double rho = bb.radius;
        AmbState st{horocycle_point(h, tau), inward_normal(h, horocycle_point(h, tau))};
        double arc = 0;
        for (int leg = 0; leg < 4; ++leg) {
            // Closed-form segment: propagate until bump entry or the foot.
            double A = mink_inner(bb.center, st.p), B = mink_inner(bb.center.c, st.v.v, 2);
            double a = -A, b = -B;  // a cosh t + b sinh t = cosh(dist to center)
            double tx = foot_time(st, target);
            double t_entry = entry_time(a, b, rho);
            if (t_entry < 0 || tx <= t_entry) {
                return finish_closed(st, arc, tx, target);
            }
            // Advance to the bump shell and integrate through the support.
            HPoint p1 = geodesic_at(st, t_entry);
            TangentVec v1 = geodesic_vel_at(st, t_entry);
            arc += t_entry;
            MetricField::ChartState cs{chart_of(p1), chart_velocity(p1, v1)};
            double sp = metric.speed_g(cs);
            cs.zdot = (1.0 / sp) * cs.zdot;  // unit g-speed
            double dt = metric.ivp_step;
            MetricField::ChartState prev = cs;
            for (int k = 0; k < 4000; ++k) {
                prev = cs;
                cs = metric.rk4_step(cs, dt);
                double piece = dt * 0.5 * (metric.speed_g(prev) + metric.speed_g(cs));
                arc += piece;
                HPoint q = point_of_chart(cs.z);
                // Foot inside the support: along-track component changes sign
                // (it decreases at unit rate along the flow line).
                TangentVec av = ambient_velocity(cs.z, cs.zdot);
                double along = mink_inner(log_map(q, target).v, av.v, 2) / tangent_norm(av);
                if (along <= 0) {
                    return finish_inside(prev, dt, arc - piece, target);
                }
                if (dist0(q, bb.center) > rho + 1e-9) break;
            }
            HPoint q = point_of_chart(cs.z);
            TangentVec av = ambient_velocity(cs.z, cs.zdot);
            double nn = tangent_norm(av);
            st = AmbState{q, scale(1.0 / nn, av)};
        }
        // Should not happen: a geodesic crosses the convex support once.
        throw SolverFailure("EmbeddingField: flow shot failed to terminate");
    }

    static HPoint geodesic_at(const AmbState& st, double t) {
        HPoint q;
        q.n = 2;
        double ch = std::cosh(t), sh = std::sinh(t);
        for (int i = 0; i <= 2; ++i)
            q.c[static_cast<size_t>(i)] = ch * st.p.c[static_cast<size_t>(i)] + sh * st.v.v[static_cast<size_t>(i)];
        return renormalize(q);
    }
    static TangentVec geodesic_vel_at(const AmbState& st, double t) {
        TangentVec v;
        v.base = geodesic_at(st, t);
        double ch = std::cosh(t), sh = std::sinh(t);
        for (int i = 0; i <= 2; ++i)
            v.v[static_cast<size_t>(i)] = sh * st.p.c[static_cast<size_t>(i)] + ch * st.v.v[static_cast<size_t>(i)];
        return v;
    }

    // Parameter of the orthogonal foot of `target` on the geodesic of st.
    static double foot_time(const AmbState& st, const HPoint& target) {
        double A = mink_inner(target, st.p);
        double B = mink_inner(target.c, st.v.v, 2);
        double r = -B / A;  // tanh t*
        r = std::min(1.0 - 1e-15, std::max(-1.0 + 1e-15, r));
        return std::atanh(r);
    }

    // First positive time at which a cosh t + b sinh t = cosh(rho); negative
    // if the ray never enters the ball.
    static double entry_time(double a, double b, double rho) {
        double disc = a * a - b * b;
        if (disc <= 0) return -1;  // should not happen for points off the ideal boundary
        double m = std::sqrt(disc);
        double target = std::cosh(rho);
        if (m >= target) return -1;  // stays outside
        double t0 = std::atanh(std::min(1.0 - 1e-16, std::max(-1.0 + 1e-16, -b / a)));
        double dt = std::acosh(target / m);
        double t_entry = t0 - dt;
        if (t_entry < 0 && t0 + dt > 0) return std::max(0.0, t_entry);  // inside already
        return t_entry > 0 ? t_entry : -1;
    }

    ShotResult finish_closed(const AmbState& st, double arc, double tx, const HPoint& target) const {
        HPoint q = geodesic_at(st, tx);
        TangentVec vq = geodesic_vel_at(st, tx);
        ShotResult r;
        TangentVec gap = log_map(q, target);
        r.value = -R_horo + arc + tx + mink_inner(gap, vq);
        r.miss = signed_miss(q, vq, target);
        r.grad = grad_components(q, vq);
        return r;
    }

    // `arc` is the accumulated arclength up to `prev`; the foot lies within
    // the next step of size dt. Bisect the along-track component to zero.
    ShotResult finish_inside(const MetricField::ChartState& prev, double dt, double arc,
                             const HPoint& target) const {
        double t_lo = 0, t_hi = dt;
        for (int it = 0; it < 48; ++it) {
            double tm = 0.5 * (t_lo + t_hi);
            MetricField::ChartState mid = metric.rk4_step(prev, tm);
            HPoint q = point_of_chart(mid.z);
            TangentVec av = ambient_velocity(mid.z, mid.zdot);
            double along = mink_inner(log_map(q, target).v, av.v, 2);
            if (along > 0)
                t_lo = tm;
            else
                t_hi = tm;
            if (t_hi - t_lo < 1e-15) break;
        }
        double t_at = 0.5 * (t_lo + t_hi);
        MetricField::ChartState fin = metric.rk4_step(prev, t_at);
        HPoint q = point_of_chart(fin.z);
        TangentVec av = ambient_velocity(fin.z, fin.zdot);
        double nn = tangent_norm(av);
        TangentVec vq = scale(1.0 / nn, av);
        ShotResult r;
        TangentVec gap = log_map(q, target);
        double piece = t_at * 0.5 * (metric.speed_g(prev) + metric.speed_g(fin));
        r.value = -R_horo + arc + piece + mink_inner(gap, vq);
        r.miss = signed_miss(q, vq, target);
        r.grad = grad_components(q, vq);
        return r;
    }

    // Perpendicular signed offset of target from the oriented line (q, vq).
    static double signed_miss(const HPoint& q, const TangentVec& vq, const HPoint& target) {
        Amb nvec{};
        nvec[0] = q.c[1] * vq.v[2] - q.c[2] * vq.v[1];
        nvec[1] = q.c[2] * vq.v[0] - q.c[0] * vq.v[2];
        nvec[2] = -(q.c[0] * vq.v[1] - q.c[1] * vq.v[0]);
        double nn = std::sqrt(std::max(1e-300, mink_inner(nvec, nvec, 2)));
        return std::asinh(mink_inner(target.c, nvec, 2) / nn);
    }

    VecN grad_components(const HPoint& q, const TangentVec& vq) const {
        Vec2 z = chart_of(q);
        Vec2 zd = chart_velocity(q, vq);
        double ew = std::exp(metric.w_chart(z));
        return vec2(ew * zd.x, ew * zd.y);
    }

    // Fast path: if the unperturbed flow segment through x stays clear of the
    // bump support, the perturbed flow line coincides with it.
    bool clear_of_bump(int node, const HPoint& x, double* value, VecN* grad) const {
        const ConformalBump& bb = *metric.bump;
        const auto& dir = grid->nodes[static_cast<size_t>(node)];
        double val0 = busemann0(2, dir, x);
        TangentVec u = busemann0_grad(2, dir, x);
        // Segment from the horosphere foot (downhill) to x: gamma(t) = exp_x(t u),
        // t in [-(val0 + R), 0].
        AmbState st{x, u};
        double t_lo = -(val0 + R_horo), t_hi = 0.0;
        double A = mink_inner(bb.center, x), B = mink_inner(bb.center.c, u.v, 2);
        double tstar = std::atanh(std::min(1.0 - 1e-15, std::max(-1.0 + 1e-15, -B / A)));
        double tq = std::min(t_hi, std::max(t_lo, tstar));
        double d = dist0(bb.center, geodesic_at(st, tq));
        if (d <= bb.radius + 1e-6) return false;
        Frame f = frame_at(x);
        *value = val0;
        *grad = f.components(u);
        return true;
    }

    FlowHit flow_to_point(int node, const HPoint& x) const {
        FlowHit hit;
        {
            double value;
            VecN g;
            if (clear_of_bump(node, x, &value, &g)) {
                // Express in the chart frame used by the perturbed branch.
                TangentVec amb = frame_at(x).vector(g);
                hit.value = value;
                hit.grad = grad_components(x, amb);
                hit.offset = 0;
                return hit;
            }
        }
        Horo h = horo_data(node);
        // Initial horosphere parameter from the unperturbed foot.
        const auto& dir = grid->nodes[static_cast<size_t>(node)];
        double val0 = busemann0(2, dir, x);
        TangentVec u = busemann0_grad(2, dir, x);
        HPoint foot0 = exp_map(x, scale(-(val0 + R_horo), u));
        double tau = mink_inner(foot0.c, h.E, 2);

        ShotResult s0 = shoot(h, tau, x);
        double tau2 = tau + std::max(1e-4, std::abs(s0.miss));
        ShotResult s1 = shoot(h, tau2, x);
        for (int it = 0; it < 16; ++it) {
            if (std::abs(s1.miss) < 1e-11) break;
            double denom = s1.miss - s0.miss;
            double step = (std::abs(denom) > 1e-300) ? s1.miss * (tau2 - tau) / denom : 0.0;
            tau = tau2;
            s0 = s1;
            tau2 = tau2 - step;
            s1 = shoot(h, tau2, x);
        }
        hit.value = s1.value;
        hit.grad = s1.grad;
        hit.offset = s1.miss;
        return hit;
    }
};

}  // namespace hypfill
