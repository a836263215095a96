#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hypfill/core.hpp"
#include "hypfill/embedding.hpp"
#include "hypfill/projector.hpp"

namespace hypfill {

struct CompressionParams {
    double sigma = 0.01;
    double R = 3.0;
};

/// h(phi) = ||phi - Phi(P(phi))||_{L2(S)}.
inline double h_of(const Projection& p, const BoundaryFunction& phi) {
    double s = 0;
    for (int i = 0; i < phi.size(); ++i) {
        double r = phi[i] - p.data.phi[static_cast<size_t>(i)];
        s += phi.grid->weights[static_cast<size_t>(i)] * r * r;
    }
    return std::sqrt(s);
}

/// d(h^2)(delta) = 2 <phi - Phi(P(phi)), delta - dPhi(dP(delta))>_{L2}.
inline double dh2(const EmbeddingField& emb, const Projection& p, const BoundaryFunction& phi,
                  const std::vector<double>& delta, const MatN& a_phi) {
    std::vector<VecN> cols = dp_columns(emb, p, a_phi);
    VecN dpd;
    dpd.n = emb.dim();
    for (size_t i = 0; i < cols.size(); ++i)
        for (int k = 0; k < dpd.n; ++k) dpd[k] += delta[i] * cols[i][k];
    double s = 0;
    for (int i = 0; i < phi.size(); ++i) {
        double r = phi[i] - p.data.phi[static_cast<size_t>(i)];
        double dd = delta[static_cast<size_t>(i)] - dot(p.data.grad[static_cast<size_t>(i)], dpd);
        s += phi.grid->weights[static_cast<size_t>(i)] * r * dd;
    }
    return 2.0 * s;
}

/// Q_sigma(x, h) = A_{(1+sigma h^2)^{-1}}(x).
inline HPoint q_sigma(const CompressionParams& cp, const HPoint& x, double h) {
    double d = dist0(origin(x.n), x);
    if (d * d * 4.0 * cp.sigma >= 1.0)
        throw UsageError("q_sigma: point outside the admissible radius (4 sigma)^{-1/2}");
    return homothety_At(1.0 / (1.0 + cp.sigma * h * h), x);
}

/// Comparison value of the flat model: Jacobian of (x,h) -> (1+sigma h^2)^{-1} x.
inline double q_sigma_euclidean_model(const CompressionParams& cp, double xnorm, double h, int n) {
    double t = 1.0 + cp.sigma * h * h;
    return std::pow(t, -(n + 1)) * std::sqrt(t * t + std::pow(2 * cp.sigma * h * xnorm, 2));
}

/// Upper bound (1 + sigma h^2)^{-1} for the n-Jacobian of Q_sigma within the
/// admissible radius.
inline double q_sigma_bound(const CompressionParams& cp, double h) {
    return 1.0 / (1.0 + cp.sigma * h * h);
}

/// Differential columns of Q_sigma at (x, h): the n x n block through x and
/// the column through h, in canonical frames (unperturbed geometry).
struct QDifferential {
    MatN dx;   // frame(x) -> frame(Q(x,h))
    VecN dh;   // column for the h-slot
    HPoint y;  // Q_sigma(x,h)
};

inline QDifferential q_sigma_differential(const CompressionParams& cp, const HPoint& x, double h) {
    QDifferential out;
    double t = 1.0 / (1.0 + cp.sigma * h * h);
    out.y = homothety_At(t, x);
    out.dx = homothety_differential(t, x);
    double r = dist0(origin(x.n), x);
    double dtdh = -2.0 * cp.sigma * h * t * t;
    VecN col;
    col.n = x.n;
    if (r > 1e-12) {
        // d/dt A_t(x) = r * (outward radial unit at A_t(x)).
        TangentVec back = log_map(out.y, origin(x.n));
        double nn = tangent_norm(back);
        Frame fy = frame_at(out.y);
        VecN rad = fy.components(scale(-1.0 / nn, back));
        col = (dtdh * r) * rad;
    }
    out.dh = col;
    return out;
}

/// Exact n-Jacobian of the (n+1) -> n map Q_sigma at (x,h): columns [dx | dh]
/// against Euclidean structure on the h-slot.
inline double jacobian_q(const CompressionParams& cp, const HPoint& x, double h) {
    QDifferential d = q_sigma_differential(cp, x, h);
    int n = x.n;
    // Gram of the adjoint: dx dx^T + dh dh^T.
    MatN m = MatN::zero(n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            double s = d.dh[a] * d.dh[b];
            for (int k = 0; k < n; ++k) s += d.dx(a, k) * d.dx(b, k);
            m(a, b) = s;
        }
    return std::sqrt(std::max(0.0, det(m)));
}

struct PSigmaResult {
    HPoint y;
    double h = 0;
    double jacobian = 0;  // J_G of P_sigma at phi
    double jacobian_P = 0;
    double det_A = 1;
};

/// Differential of the homothety in the g-orthonormal frames of a (possibly
/// perturbed) metric, by centered chart differences.
inline MatN homothety_differential_g(const MetricField& metric, double t, const HPoint& x) {
    if (metric.is_exact()) return homothety_differential(t, x);
    Vec2 z = chart_of(x);
    HPoint y = homothety_At(t, x);
    Vec2 zy = chart_of(y);
    double k = 1e-5;
    MatN mchart = MatN::zero(2);
    for (int j = 0; j < 2; ++j) {
        Vec2 zp = z, zm = z;
        (j == 0 ? zp.x : zp.y) += k;
        (j == 0 ? zm.x : zm.y) -= k;
        Vec2 yp = chart_of(homothety_At(t, point_of_chart(zp)));
        Vec2 ym = chart_of(homothety_At(t, point_of_chart(zm)));
        mchart(0, j) = (yp.x - ym.x) / (2 * k);
        mchart(1, j) = (yp.y - ym.y) / (2 * k);
    }
    double scale = std::exp(metric.w_chart(zy) - metric.w_chart(z));
    return scale * mchart;
}

inline VecN q_dh_column_g(const MetricField& metric, const CompressionParams& cp, const HPoint& x,
                          double h) {
    if (metric.is_exact()) return q_sigma_differential(cp, x, h).dh;
    double k = 1e-5;
    auto at = [&](double hh) { return chart_of(homothety_At(1.0 / (1.0 + cp.sigma * hh * hh), x)); };
    Vec2 zp = at(h + k), zm = at(h - k);
    Vec2 d{(zp.x - zm.x) / (2 * k), (zp.y - zm.y) / (2 * k)};
    double ew = std::exp(metric.w_chart(at(h)));
    return vec2(ew * d.x, ew * d.y);
}

/// P_sigma(phi) = Q_sigma(P(phi), sigma h(phi)) together with its Jacobian,
/// assembled from the dP columns and the rank-one h-term.
inline PSigmaResult p_sigma(const EmbeddingField& emb, const CompressionParams& cp,
                            const BoundaryFunction& phi, const Projection& p, const MatN& a_phi) {
    PSigmaResult out;
    out.h = h_of(p, phi);
    double hs = cp.sigma * out.h;
    double t = 1.0 / (1.0 + cp.sigma * hs * hs);
    out.y = homothety_At(t, p.x);
    out.det_A = det(a_phi);
    out.jacobian_P = jacobian_JG(emb, p, a_phi);

    GWeights g = metric_G(emb, p);
    std::vector<VecN> cols = dp_columns(emb, p, a_phi);
    MatN D = homothety_differential_g(emb.metric, t, p.x);
    for (auto& c : cols) c = D * c;
    if (out.h > 1e-12) {
        VecN qh = q_dh_column_g(emb.metric, cp, p.x, hs);
        // d(sigma h)(delta) = (sigma / h) sum w_i r_i delta_i.
        for (size_t i = 0; i < cols.size(); ++i) {
            double r = phi[static_cast<int>(i)] - p.data.phi[i];
            double coeff = cp.sigma * phi.grid->weights[i] * r / out.h;
            for (int k = 0; k < emb.dim(); ++k) cols[i][k] += coeff * qh[k];
        }
    }
    out.jacobian = jacobian_of_columns(cols, g);
    return out;
}

/// Quantile of a sample vector (sorted copy, linear interpolation).
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    double pos = q * (static_cast<double>(v.size()) - 1);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, v.size() - 1);
    double w = pos - static_cast<double>(lo);
    return v[lo] * (1 - w) + v[hi] * w;
}

}  // namespace hypfill
