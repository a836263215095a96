#include <catch2/catch_amalgamated.hpp>

#include "hypfill/compression.hpp"
#include "hypfill/rng.hpp"

using namespace hypfill;

namespace {

HPoint rand_point(std::mt19937_64& g, double rmax) {
    double u = uniform(g, 0.0, 1.0);
    double r = std::acosh(1.0 + u * (std::cosh(rmax) - 1.0));
    double a = uniform(g, 0.0, 2 * kPi);
    return ray_point(2, {std::cos(a), std::sin(a), 0}, r);
}

BoundaryFunction random_phi(const GridPtr& grid, std::mt19937_64& g, double R, double amp) {
    BoundaryFunction f(grid);
    int K = 12;
    for (int k = 0; k <= K; ++k) {
        double decay = amp / ((1 + k) * (1 + k));
        double a = gaussian(g) * decay, b = gaussian(g) * decay;
        for (int i = 0; i < grid->size(); ++i) {
            double th = grid->angles[static_cast<size_t>(i)];
            f[i] += a * std::cos(k * th) + b * std::sin(k * th);
        }
    }
    for (auto& v : f.values) v = std::min(R, std::max(-R, v));
    return f;
}

}  // namespace

TEST_CASE("h vanishes exactly on the surface and grows linearly off it") {
    EmbeddingField emb(MetricField(2, 3.0), make_grid(2, 720));
    auto g = task_rng(91, 0);
    HPoint x = rand_point(g, 1.2);
    BoundaryFunction phi = emb.phi_embed(x);
    Projection p = project(emb, phi);
    REQUIRE(p.ok);
    CHECK(h_of(p, phi) < 1e-7);

    // G-normal direction: h(Phi(x) + t delta) = t ||delta||_{L2} + O(t^2).
    GWeights G = metric_G(emb, p);
    BoundaryFunction raw(emb.grid);
    for (int i = 0; i < raw.size(); ++i) raw[i] = std::cos(4 * emb.grid->angles[static_cast<size_t>(i)]);
    std::vector<std::vector<double>> tangent{d_phi_of(p, vec2(1, 0)), d_phi_of(p, vec2(0, 1))};
    REQUIRE(gram_schmidt_G(G, tangent));
    std::vector<double> delta = raw.values;
    for (auto& t : tangent) {
        double c = G.inner(delta, t);
        for (size_t i = 0; i < delta.size(); ++i) delta[i] -= c * t[i];
    }
    BoundaryFunction df(emb.grid);
    df.values = delta;
    double l2 = l2_norm(df);
    for (double t : {1e-2, 5e-3}) {
        BoundaryFunction moved = phi + t * df;
        Projection pm = project(emb, moved);
        REQUIRE(pm.ok);
        CHECK(std::abs(h_of(pm, moved) - t * l2) < 20 * t * t);
    }
}

TEST_CASE("dh2 bound and finite differences") {
    EmbeddingField emb(MetricField(2, 3.0), make_grid(2, 720));
    auto g = task_rng(92, 0);
    BoundaryFunction phi = random_phi(emb.grid, g, 3.0, 0.8);
    Projection p = project(emb, phi);
    REQUIRE(p.ok);
    MatN A = MatN::identity(2);

    for (int rep = 0; rep < 5; ++rep) {
        BoundaryFunction delta = random_phi(emb.grid, g, 3.0, 0.5);
        double d = dh2(emb, p, phi, delta.values, A);
        // Estimate |dh^2| <= 2 h || delta - dPhi dP delta ||_{L2}.
        std::vector<VecN> cols = dp_columns(emb, p, A);
        VecN moved;
        moved.n = 2;
        for (size_t i = 0; i < cols.size(); ++i)
            for (int k = 0; k < 2; ++k) moved[k] += delta.values[i] * cols[i][k];
        BoundaryFunction resid = delta;
        for (int i = 0; i < resid.size(); ++i) resid[i] -= dot(p.data.grad[static_cast<size_t>(i)], moved);
        CHECK(std::abs(d) <= 2 * h_of(p, phi) * l2_norm(resid) + 1e-12);

        double t = 1e-5;
        BoundaryFunction up = phi + t * delta, dn = phi + (-t) * delta;
        Projection pu = project(emb, up), pd = project(emb, dn);
        REQUIRE(pu.ok);
        REQUIRE(pd.ok);
        double hu = h_of(pu, up), hd = h_of(pd, dn);
        double fd = (hu * hu - hd * hd) / (2 * t);
        CHECK(std::abs(fd - d) < 1e-5 * std::max(1.0, std::abs(d)));
    }

    // At the surface the derivative vanishes.
    HPoint x = rand_point(g, 1.0);
    BoundaryFunction sphi = emb.phi_embed(x);
    Projection ps = project(emb, sphi);
    BoundaryFunction delta = random_phi(emb.grid, g, 3.0, 0.5);
    CHECK(std::abs(dh2(emb, ps, sphi, delta.values, A)) < 1e-7);
}

TEST_CASE("q_sigma: identity at h=0, radius guard, model formula") {
    CompressionParams cp{0.01, 3.0};
    auto g = task_rng(93, 0);
    HPoint x = rand_point(g, 2.0);
    CHECK(dist0(q_sigma(cp, x, 0.0), x) < 1e-14);

    CompressionParams tight{0.1, 3.0};
    HPoint far = ray_point(2, {1, 0, 0}, 2.0);
    CHECK_THROWS_AS(q_sigma(tight, far, 1.0), UsageError);

    double v = q_sigma_euclidean_model(CompressionParams{0.01, 3.0}, 1.0, 1.0, 2);
    double t = 1.01;
    CHECK(v == Catch::Approx(std::pow(t, -3.0) * std::sqrt(t * t + 4e-4)).epsilon(1e-12));
    // The model value stays under the bound within the admissible radius.
    CHECK(v <= 1.0 / t);
}

TEST_CASE("jacobian_q respects the bound and matches finite differences") {
    CompressionParams cp{0.01, 3.0};
    auto g = task_rng(94, 0);
    for (int k = 0; k < 20; ++k) {
        HPoint x = rand_point(g, 2.4);
        double h = uniform(g, 0.0, 2.0);
        double J = jacobian_q(cp, x, h);
        CHECK(J <= q_sigma_bound(cp, h) + 1e-6);
    }
    // FD cross-check of the differential columns.
    HPoint x = rand_point(g, 1.8);
    double h = 0.7;
    QDifferential d = q_sigma_differential(cp, x, h);
    Frame fy = frame_at(d.y);
    double k = 1e-6;
    HPoint yp = q_sigma(cp, x, h + k), ym = q_sigma(cp, x, h - k);
    VecN fd = (1.0 / (2 * k)) * (fy.components(log_map(d.y, yp)) - fy.components(log_map(d.y, ym)));
    CHECK(std::abs(fd[0] - d.dh[0]) < 1e-5);
    CHECK(std::abs(fd[1] - d.dh[1]) < 1e-5);
}

TEST_CASE("p_sigma: surface fixed points and strict contraction off-surface") {
    EmbeddingField emb(MetricField(2, 3.0), make_grid(2, 720));
    CompressionParams cp{0.01, 3.0};
    auto g = task_rng(95, 0);

    HPoint x = rand_point(g, 1.2);
    BoundaryFunction sphi = emb.phi_embed(x);
    Projection ps = project(emb, sphi);
    REQUIRE(ps.ok);
    PSigmaResult at_surface = p_sigma(emb, cp, sphi, ps, MatN::identity(2));
    CHECK(dist0(at_surface.y, x) < 1e-7);
    CHECK(at_surface.jacobian == Catch::Approx(1.0).margin(1e-5));

    double min_ratio = 1e300;
    for (int rep = 0; rep < 30; ++rep) {
        BoundaryFunction phi = random_phi(emb.grid, g, 3.0, uniform(g, 0.3, 1.2));
        Projection p = project(emb, phi);
        REQUIRE(p.ok);
        PSigmaResult r = p_sigma(emb, cp, phi, p, MatN::identity(2));
        if (r.h * r.h > 1e-8) min_ratio = std::min(min_ratio, (1.0 - r.jacobian) / (r.h * r.h));
    }
    CHECK(min_ratio > 0);
}

TEST_CASE("larger admissible sigma compresses at least as strongly") {
    EmbeddingField emb(MetricField(2, 3.0), make_grid(2, 720));
    auto g = task_rng(96, 0);
    BoundaryFunction phi = random_phi(emb.grid, g, 3.0, 1.0);
    Projection p = project(emb, phi);
    REQUIRE(p.ok);
    PSigmaResult small = p_sigma(emb, CompressionParams{0.005, 3.0}, phi, p, MatN::identity(2));
    PSigmaResult large = p_sigma(emb, CompressionParams{0.01, 3.0}, phi, p, MatN::identity(2));
    if (small.h * small.h > 1e-6) CHECK(large.jacobian <= small.jacobian + 1e-9);
}
