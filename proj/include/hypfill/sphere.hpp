#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "hypfill/core.hpp"

namespace hypfill {

/// Quadrature grid on S^{n-1} carrying the Haar probability measure.
/// n=2: equispaced angles with trapezoid weights (spectrally accurate).
/// n=3: Fibonacci lattice with equal weights.
struct SphereGrid {
    int n = 2;
    std::vector<std::array<double, 3>> nodes;  // unit directions in R^n
    std::vector<double> weights;               // positive, sum to 1
    std::vector<double> angles;                // n=2 only: node angles in [0, 2pi)

    int size() const { return static_cast<int>(nodes.size()); }
};

using GridPtr = std::shared_ptr<const SphereGrid>;

inline GridPtr make_grid(int n, int N) {
    if (n != 2 && n != 3) throw UsageError("make_grid: only n=2 and n=3 are supported");
    if (N < 16) throw UsageError("make_grid: need at least 16 nodes");
    auto g = std::make_shared<SphereGrid>();
    g->n = n;
    g->nodes.resize(static_cast<size_t>(N));
    g->weights.assign(static_cast<size_t>(N), 1.0 / N);
    if (n == 2) {
        g->angles.resize(static_cast<size_t>(N));
        for (int i = 0; i < N; ++i) {
            double th = 2.0 * kPi * i / N;
            g->angles[static_cast<size_t>(i)] = th;
            g->nodes[static_cast<size_t>(i)] = {std::cos(th), std::sin(th), 0.0};
        }
    } else {
        const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
        for (int i = 0; i < N; ++i) {
            double z = 1.0 - (2.0 * i + 1.0) / N;
            double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            double th = 2.0 * kPi * i / golden;
            g->nodes[static_cast<size_t>(i)] = {r * std::cos(th), r * std::sin(th), z};
        }
    }
    return g;
}

/// Sampled element of L^inf(S): one value per grid node.
struct BoundaryFunction {
    GridPtr grid;
    std::vector<double> values;

    BoundaryFunction() = default;
    explicit BoundaryFunction(GridPtr g, double fill = 0.0)
        : grid(std::move(g)), values(static_cast<size_t>(grid->size()), fill) {}

    double& operator[](int i) { return values[static_cast<size_t>(i)]; }
    double operator[](int i) const { return values[static_cast<size_t>(i)]; }
    int size() const { return static_cast<int>(values.size()); }
};

inline void require_same_grid(const BoundaryFunction& a, const BoundaryFunction& b) {
    if (a.grid.get() != b.grid.get() || a.size() != b.size())
        throw UsageError("BoundaryFunction: grid mismatch");
}

inline double integrate(const BoundaryFunction& f) {
    double s = 0;
    for (int i = 0; i < f.size(); ++i) s += f.grid->weights[static_cast<size_t>(i)] * f[i];
    return s;
}

inline double sup_norm(const BoundaryFunction& f) {
    double m = 0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
}

inline double l2_norm(const BoundaryFunction& f) {
    double s = 0;
    for (int i = 0; i < f.size(); ++i) s += f.grid->weights[static_cast<size_t>(i)] * f[i] * f[i];
    return std::sqrt(s);
}

/// Weighted L^2 norm: sqrt(sum w_i rho_i f_i^2).
inline double weighted_l2(const BoundaryFunction& f, const std::vector<double>& density) {
    if (density.size() != f.values.size()) throw UsageError("weighted_l2: density size mismatch");
    double s = 0;
    for (int i = 0; i < f.size(); ++i)
        s += f.grid->weights[static_cast<size_t>(i)] * density[static_cast<size_t>(i)] * f[i] * f[i];
    return std::sqrt(s);
}

/// Clamp values to [-R/2, R/2]. Idempotent, 1-Lipschitz in sup and L2 norms.
inline BoundaryFunction cutoff(const BoundaryFunction& phi, double R) {
    if (R <= 0) throw UsageError("cutoff: R must be positive");
    BoundaryFunction out = phi;
    for (double& v : out.values) v = std::min(R / 2, std::max(-R / 2, v));
    return out;
}

inline BoundaryFunction operator+(BoundaryFunction a, const BoundaryFunction& b) {
    require_same_grid(a, b);
    for (int i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}
inline BoundaryFunction operator-(BoundaryFunction a, const BoundaryFunction& b) {
    require_same_grid(a, b);
    for (int i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}
inline BoundaryFunction operator*(double t, BoundaryFunction a) {
    for (double& v : a.values) v *= t;
    return a;
}

}  // namespace hypfill
