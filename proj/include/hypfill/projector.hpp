#pragma once

#include <cmath>
#include <vector>

#include "hypfill/core.hpp"
#include "hypfill/embedding.hpp"
#include "hypfill/hyperboloid.hpp"
#include "hypfill/metric.hpp"
#include "hypfill/sphere.hpp"

namespace hypfill {

/// State of one solved projection P(phi): the base point, convergence data,
/// the Busemann data at the point, and the exponential weights.
struct Projection {
    bool ok = false;
    HPoint x;
    double residual = 0;  // |W_phi(x)|_g
    int iterations = 0;
    PointEval data;
    std::vector<double> rho;      // e^{n(Phi_s(x) - phi(s))}
    std::vector<double> rho_bar;  // rho normalized against mu_x
    double rho_mass = 0;          // int rho dmu_x
};

/// Node weights of the scalar product G_phi: gamma_i = n w_i lambda_i rhobar_i.
struct GWeights {
    std::vector<double> gamma;

    double inner(const std::vector<double>& X, const std::vector<double>& Y) const {
        double s = 0;
        for (size_t i = 0; i < gamma.size(); ++i) s += gamma[i] * X[i] * Y[i];
        return s;
    }
    double norm(const std::vector<double>& X) const { return std::sqrt(inner(X, X)); }
};

namespace detail {
inline void rho_of(const EmbeddingField& emb, const BoundaryFunction& phi, Projection& p) {
    int n = emb.dim();
    int N = emb.grid->size();
    p.rho.resize(static_cast<size_t>(N));
    p.rho_bar.resize(static_cast<size_t>(N));
    double mass = 0;
    for (int i = 0; i < N; ++i) {
        double r = std::exp(n * (p.data.phi[static_cast<size_t>(i)] - phi[i]));
        p.rho[static_cast<size_t>(i)] = r;
        mass += emb.grid->weights[static_cast<size_t>(i)] * p.data.lambda[static_cast<size_t>(i)] * r;
    }
    p.rho_mass = mass;
    for (int i = 0; i < N; ++i) p.rho_bar[static_cast<size_t>(i)] = p.rho[static_cast<size_t>(i)] / mass;
}
}  // namespace detail

/// W_phi(x) = int e^{n(Phi_s - phi)} grad Phi_s dmu_x, frame components.
inline VecN w_field(const EmbeddingField& emb, const BoundaryFunction& phi, const PointEval& at) {
    int n = emb.dim();
    VecN w;
    w.n = n;
    for (int i = 0; i < emb.grid->size(); ++i) {
        double c = emb.grid->weights[static_cast<size_t>(i)] * at.lambda[static_cast<size_t>(i)] *
                   std::exp(n * (at.phi[static_cast<size_t>(i)] - phi[i]));
        for (int k = 0; k < n; ++k) w[k] += c * at.grad[static_cast<size_t>(i)][k];
    }
    return w;
}
inline VecN w_field(const EmbeddingField& emb, const BoundaryFunction& phi, const HPoint& x) {
    return w_field(emb, phi, emb.eval(x));
}

/// Closed-form solution of the discrete critical-point equation in the exact
/// case: the normalized timelike moment of the null directions. Used as the
/// initial iterate in general.
inline HPoint project_warm_start(const EmbeddingField& emb, const BoundaryFunction& phi) {
    int n = emb.dim();
    Amb K{0, 0, 0, 0};
    for (int i = 0; i < emb.grid->size(); ++i) {
        double c = emb.grid->weights[static_cast<size_t>(i)] * std::exp(-n * phi[i]);
        const auto& dir = emb.grid->nodes[static_cast<size_t>(i)];
        for (int k = 0; k < n; ++k) K[static_cast<size_t>(k)] += c * dir[static_cast<size_t>(k)];
        K[static_cast<size_t>(n)] += c;
    }
    double q = -mink_inner(K, K, n);
    HPoint x;
    x.n = n;
    double s = 1.0 / std::sqrt(std::max(q, 1e-300));
    for (int i = 0; i <= n; ++i) x.c[static_cast<size_t>(i)] = s * K[static_cast<size_t>(i)];
    return renormalize(x);
}

struct ProjectOptions {
    int max_iter = 40;
    double tol = 1e-10;  // on |W|_g, relative to max(1, rho mass)
    bool warm_start = true;
    HPoint init;          // used when warm_start is false
    bool init_given = false;
};

/// Solve W_phi(x) = 0. Exact case: Newton on the convex potential with its
/// closed-form Hessian (an exact 1-d line minimum per step). Perturbed case:
/// damped quasi-Newton, the Hessian approximated by (int rho dmu) * id.
inline Projection project(const EmbeddingField& emb, const BoundaryFunction& phi,
                          const ProjectOptions& opts = {}) {
    Projection p;
    HPoint x = opts.init_given ? opts.init
                               : (opts.warm_start ? project_warm_start(emb, phi) : origin(emb.dim()));
    double best = 1e300;
    for (int it = 0; it < opts.max_iter; ++it) {
        p.data = emb.eval(x);
        p.x = x;
        detail::rho_of(emb, phi, p);
        VecN w = w_field(emb, phi, p.data);
        double wn = norm(w);
        p.residual = wn;
        p.iterations = it + 1;
        double tol = opts.tol * std::max(1.0, p.rho_mass);
        if (wn <= tol) {
            p.ok = true;
            return p;
        }
        if (wn >= best * 4.0 && it > 4) break;
        best = std::min(best, wn);
        // Newton direction; for the exact metric the potential restricted to
        // the line is a cosh, so the 1-d minimum is available in closed form.
        VecN dir = (-1.0 / wn) * w;
        double t = emb.is_exact() ? std::atanh(std::min(wn / p.rho_mass, 1.0 - 1e-12))
                                  : wn / p.rho_mass;
        HPoint xn = emb.metric.exp_g(x, t * dir);
        if (!emb.is_exact()) {
            // Step control: retreat while the residual grows.
            for (int halve = 0; halve < 5; ++halve) {
                VecN wn2 = w_field(emb, phi, xn);
                if (norm(wn2) < wn) break;
                t *= 0.5;
                xn = emb.metric.exp_g(x, t * dir);
            }
        }
        x = xn;
    }
    // Final data at the last iterate even on failure.
    p.data = emb.eval(x);
    p.x = x;
    detail::rho_of(emb, phi, p);
    VecN w = w_field(emb, phi, p.data);
    p.residual = norm(w);
    p.ok = p.residual <= opts.tol * std::max(1.0, p.rho_mass);
    return p;
}

inline GWeights metric_G(const EmbeddingField& emb, const Projection& p) {
    int n = emb.dim();
    GWeights g;
    g.gamma.resize(p.rho_bar.size());
    for (size_t i = 0; i < g.gamma.size(); ++i)
        g.gamma[i] = n * emb.grid->weights[i] * p.data.lambda[i] * p.rho_bar[i];
    return g;
}

/// E_phi(delta) = n int delta rhobar grad Phi dmu, frame components.
inline VecN apply_E(const EmbeddingField& emb, const Projection& p, const std::vector<double>& delta) {
    GWeights g = metric_G(emb, p);
    VecN out;
    out.n = emb.dim();
    for (size_t i = 0; i < g.gamma.size(); ++i)
        for (int k = 0; k < out.n; ++k) out[k] += g.gamma[i] * delta[i] * p.data.grad[i][k];
    return out;
}

/// Second-moment matrix M = n int rhobar (grad x grad) dmu. Its determinant's
/// square root is the full Jacobian of E_phi with respect to G_phi, and its
/// largest eigenvalue bounds the G-operator norm squared.
inline MatN e_moment(const EmbeddingField& emb, const Projection& p) {
    int n = emb.dim();
    GWeights g = metric_G(emb, p);
    MatN m = MatN::zero(n);
    for (size_t i = 0; i < g.gamma.size(); ++i)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) m(a, b) += g.gamma[i] * p.data.grad[i][a] * p.data.grad[i][b];
    return m;
}

inline double jacobian_JE(const EmbeddingField& emb, const Projection& p) {
    return std::sqrt(std::max(0.0, det(e_moment(emb, p))));
}

inline double e_op_norm(const EmbeddingField& emb, const Projection& p) {
    return std::sqrt(std::max(0.0, sym_eig_max(e_moment(emb, p))));
}

/// Node values of dPhi(v) at P(phi): s -> <grad Phi_s, v>.
inline std::vector<double> d_phi_of(const Projection& p, const VecN& v) {
    std::vector<double> out(p.data.grad.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = dot(p.data.grad[i], v);
    return out;
}

struct AStack {
    std::vector<MatN> per_node;  // A_{x,s_i}
    MatN a_phi;                  // rhobar-weighted average
};

/// A_{x,s}(xi) = e^{-n Phi_s} lambda^{-1} nabla_xi T_s with
/// T_s = e^{n Phi_s} lambda grad Phi_s, by a 4th-order covariant stencil.
/// The exact metric admits the closed-form answer A = id; `force_numeric`
/// computes the stencil anyway (used by verification sweeps).
inline AStack a_stack(const EmbeddingField& emb, const Projection& p, bool force_numeric = false,
                      double step = 1e-3) {
    int n = emb.dim();
    int N = emb.grid->size();
    AStack out;
    out.per_node.assign(static_cast<size_t>(N), MatN::identity(n));
    out.a_phi = MatN::identity(n);
    if (emb.is_exact() && !force_numeric) return out;

    // Stencil data: for each direction k and offset m in {-2h,-h,h,2h},
    // evaluate T_s and transport back to the frame at x.
    const double h = step;
    std::vector<std::vector<VecN>> tcols(static_cast<size_t>(n * 4));
    for (int k = 0; k < n; ++k) {
        const double offs[4] = {-2 * h, -h, h, 2 * h};
        for (int m = 0; m < 4; ++m) {
            VecN xi;
            xi.n = n;
            xi[k] = offs[m];
            auto [q, B] = emb.metric.exp_g_with_transport(p.x, xi);
            PointEval eq = emb.eval(q);
            std::vector<VecN> col(static_cast<size_t>(N));
            MatN Bt = transpose(B);  // orthogonal: inverse transport
            for (int i = 0; i < N; ++i) {
                double c = std::exp(n * eq.phi[static_cast<size_t>(i)]) * eq.lambda[static_cast<size_t>(i)];
                VecN t = c * eq.grad[static_cast<size_t>(i)];
                col[static_cast<size_t>(i)] = Bt * t;
            }
            tcols[static_cast<size_t>(k * 4 + m)] = std::move(col);
        }
    }
    for (int i = 0; i < N; ++i) {
        MatN a = MatN::zero(n);
        double pre = std::exp(-n * p.data.phi[static_cast<size_t>(i)]) / p.data.lambda[static_cast<size_t>(i)];
        for (int k = 0; k < n; ++k) {
            const auto& m2 = tcols[static_cast<size_t>(k * 4 + 0)][static_cast<size_t>(i)];
            const auto& m1 = tcols[static_cast<size_t>(k * 4 + 1)][static_cast<size_t>(i)];
            const auto& p1 = tcols[static_cast<size_t>(k * 4 + 2)][static_cast<size_t>(i)];
            const auto& p2 = tcols[static_cast<size_t>(k * 4 + 3)][static_cast<size_t>(i)];
            for (int j = 0; j < n; ++j)
                a(j, k) = pre * (m2[j] - 8 * m1[j] + 8 * p1[j] - p2[j]) / (12 * h);
        }
        out.per_node[static_cast<size_t>(i)] = a;
    }
    MatN acc = MatN::zero(n);
    for (int i = 0; i < N; ++i) {
        double c = emb.grid->weights[static_cast<size_t>(i)] * p.data.lambda[static_cast<size_t>(i)] *
                   p.rho_bar[static_cast<size_t>(i)];
        acc = acc + c * out.per_node[static_cast<size_t>(i)];
    }
    out.a_phi = acc;
    return out;
}

/// Jacobian of a linear map L: (grid functions, G) -> R^n given its columns
/// l_i (so L(delta) = sum_i delta_i l_i): sqrt(det(sum l_i l_i^T / gamma_i)).
inline double jacobian_of_columns(const std::vector<VecN>& cols, const GWeights& g) {
    int n = cols.empty() ? 2 : cols[0].n;
    MatN m = MatN::zero(n);
    for (size_t i = 0; i < cols.size(); ++i) {
        if (g.gamma[i] <= 0) continue;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) m(a, b) += cols[i][a] * cols[i][b] / g.gamma[i];
    }
    return std::sqrt(std::max(0.0, det(m)));
}

/// Columns of E_phi (so that E(delta) = sum delta_i columns_i).
inline std::vector<VecN> e_columns(const EmbeddingField& emb, const Projection& p) {
    GWeights g = metric_G(emb, p);
    std::vector<VecN> cols(g.gamma.size());
    for (size_t i = 0; i < cols.size(); ++i) cols[i] = g.gamma[i] * p.data.grad[i];
    return cols;
}

/// Columns of dP = A^{-1} E.
inline std::vector<VecN> dp_columns(const EmbeddingField& emb, const Projection& p, const MatN& a_phi) {
    MatN ai = inverse(a_phi);
    std::vector<VecN> cols = e_columns(emb, p);
    for (auto& c : cols) c = ai * c;
    return cols;
}

/// Full Jacobian J_G P = |det A|^{-1} J_G(E).
inline double jacobian_JG(const EmbeddingField& emb, const Projection& p, const MatN& a_phi) {
    return jacobian_JE(emb, p) / std::abs(det(a_phi));
}

/// G-orthonormalize n grid functions (Gram-Schmidt); returns false when the
/// span is numerically degenerate.
inline bool gram_schmidt_G(const GWeights& g, std::vector<std::vector<double>>& ys) {
    for (size_t a = 0; a < ys.size(); ++a) {
        for (size_t b = 0; b < a; ++b) {
            double c = g.inner(ys[a], ys[b]);
            for (size_t i = 0; i < ys[a].size(); ++i) ys[a][i] -= c * ys[b][i];
        }
        double nn = g.norm(ys[a]);
        if (nn < 1e-10) return false;
        for (double& v : ys[a]) v /= nn;
    }
    return true;
}

/// J_{G,Y} of a map given by columns, on the subspace spanned by a
/// G-orthonormal basis: |det (L basis_k)_k|.
inline double jacobian_JY(const std::vector<VecN>& cols, const std::vector<std::vector<double>>& onb) {
    int n = static_cast<int>(onb.size());
    MatN m = MatN::zero(n);
    for (int k = 0; k < n; ++k) {
        VecN v;
        v.n = n;
        for (size_t i = 0; i < onb[static_cast<size_t>(k)].size(); ++i)
            for (int a = 0; a < n; ++a) v[a] += onb[static_cast<size_t>(k)][i] * cols[i][a];
        for (int a = 0; a < n; ++a) m(a, k) = v[a];
    }
    return std::abs(det(m));
}

}  // namespace hypfill
