#include <catch2/catch_amalgamated.hpp>

#include "hypfill/embedding.hpp"
#include "hypfill/rng.hpp"

using namespace hypfill;

namespace {

ConformalBump default_bump(double amplitude = 0.05) {
    ConformalBump b;
    b.center = ray_point(2, {std::cos(0.7), std::sin(0.7), 0}, 0.35);
    b.radius = 0.9;
    b.amplitude = amplitude;
    return b;
}

HPoint rand_point(std::mt19937_64& g, double rmax) {
    double u = uniform(g, 0.0, 1.0);
    double r = std::acosh(1.0 + u * (std::cosh(rmax) - 1.0));
    double a = uniform(g, 0.0, 2 * kPi);
    return ray_point(2, {std::cos(a), std::sin(a), 0}, r);
}

}  // namespace

TEST_CASE("exact embedding: zero at origin and ray values") {
    EmbeddingField emb(MetricField(2, 3.0), make_grid(2, 720));
    BoundaryFunction at_o = emb.phi_embed(origin(2));
    CHECK(sup_norm(at_o) < 1e-14);

    int node = 37;
    auto dir = emb.grid->nodes[37];
    HPoint x = ray_point(2, dir, 1.7);
    BoundaryFunction f = emb.phi_embed(x);
    CHECK(f[node] == Catch::Approx(-1.7).margin(1e-12));
}

TEST_CASE("exact embedding preserves distances in the sup norm") {
    EmbeddingField emb(MetricField(2, 3.0), make_grid(2, 720));
    auto g = task_rng(61, 0);
    for (int k = 0; k < 40; ++k) {
        HPoint x = rand_point(g, 1.5), y = rand_point(g, 1.5);
        double gap = sup_norm(emb.phi_embed(x) - emb.phi_embed(y));
        CHECK(std::abs(gap - dist0(x, y)) < 1e-3);
    }
}

TEST_CASE("exact lambda: identity, mass, and FD pipeline") {
    EmbeddingField emb(MetricField(2, 3.0), make_grid(2, 720));
    auto g = task_rng(62, 0);

    PointEval at_o = emb.eval(origin(2));
    for (int i = 0; i < 720; i += 97) CHECK(at_o.lambda[static_cast<size_t>(i)] == Catch::Approx(1.0).margin(1e-12));

    for (int k = 0; k < 5; ++k) {
        HPoint x = rand_point(g, 1.5);
        PointEval e = emb.eval(x);
        std::vector<double> fd = lambda_from_grad_angles(*emb.grid, e.grad);
        double mass = 0, worst = 0;
        for (int i = 0; i < 720; ++i) {
            double analytic = std::exp(-e.phi[static_cast<size_t>(i)]);
            worst = std::max(worst, std::abs(fd[static_cast<size_t>(i)] - analytic) / analytic);
            mass += emb.grid->weights[static_cast<size_t>(i)] * fd[static_cast<size_t>(i)];
        }
        CHECK(worst < 1e-3);
        CHECK(mass == Catch::Approx(1.0).margin(1e-6));
    }

    // lambda = e at a point one unit along the ray (Phi_s(x) = -1).
    auto dir = emb.grid->nodes[100];
    PointEval e = emb.eval(ray_point(2, dir, 1.0));
    std::vector<double> fd = lambda_from_grad_angles(*emb.grid, e.grad);
    CHECK(fd[100] == Catch::Approx(std::exp(1.0)).epsilon(1e-3));
}

TEST_CASE("alpha at the origin is the antipodal map") {
    EmbeddingField emb(MetricField(2, 3.0), make_grid(2, 720));
    PointEval at_o = emb.eval(origin(2));
    auto g = task_rng(63, 0);
    for (int k = 0; k < 20; ++k) {
        double a = uniform(g, 0, 2 * kPi);
        double s = emb.alpha_angle(at_o, vec2(std::cos(a), std::sin(a)));
        double expect = std::fmod(a + kPi, 2 * kPi);
        double gap = std::abs(std::fmod(s - expect + 3 * kPi, 2 * kPi) - kPi);
        CHECK(gap < 1e-9);
    }
}

TEST_CASE("alpha inverts alpha_inv up to the grid spacing") {
    auto grid = make_grid(2, 720);
    EmbeddingField emb(MetricField(2, 3.0), grid);
    auto g = task_rng(64, 0);
    double spacing = 2 * kPi / 720;
    for (int k = 0; k < 10; ++k) {
        HPoint x = rand_point(g, 1.5);
        PointEval e = emb.eval(x);
        int node = static_cast<int>(uniform(g, 0, 719));
        VecN grad = e.grad[static_cast<size_t>(node)];
        double s = emb.alpha_angle(e, grad);
        double gap = std::abs(std::fmod(s - grid->angles[static_cast<size_t>(node)] + 3 * kPi, 2 * kPi) - kPi);
        CHECK(gap < spacing);
    }
    // Along the ray toward s the gradient is -gamma'.
    auto dir = grid->nodes[200];
    HPoint x = ray_point(2, dir, 1.3);
    PointEval e = emb.eval(x);
    VecN minus_raydir = e.grad[200];
    double s = emb.alpha_angle(e, minus_raydir);
    double gap = std::abs(std::fmod(s - grid->angles[200] + 3 * kPi, 2 * kPi) - kPi);
    CHECK(gap < spacing);
}

TEST_CASE("perturbed machinery reduces to closed forms at zero amplitude") {
    auto grid = make_grid(2, 240);
    EmbeddingField emb(MetricField(2, 3.0, default_bump(0.0)), grid);
    REQUIRE(!emb.is_exact());
    auto g = task_rng(65, 0);
    for (int k = 0; k < 3; ++k) {
        HPoint x = rand_point(g, 1.2);
        PointEval e = emb.eval(x);
        Frame f = frame_at(x);
        Vec2 z = chart_of(x);
        double ew = std::exp(emb.metric.w_chart(z));
        for (int i = 0; i < grid->size(); i += 17) {
            double exact = busemann0(2, grid->nodes[static_cast<size_t>(i)], x);
            CHECK(std::abs(e.phi[static_cast<size_t>(i)] - exact) < 1e-6);
            // Gradient agreement, chart frame vs closed form.
            TangentVec ge = busemann0_grad(2, grid->nodes[static_cast<size_t>(i)], x);
            Vec2 zd = chart_velocity(x, ge);
            CHECK(std::abs(e.grad[static_cast<size_t>(i)][0] - ew * zd.x) < 1e-6);
            CHECK(std::abs(e.grad[static_cast<size_t>(i)][1] - ew * zd.y) < 1e-6);
        }
        (void)f;
    }
}

TEST_CASE("perturbed embedding: normalization, gradient, mass") {
    auto grid = make_grid(2, 240);
    EmbeddingField emb(MetricField(2, 3.0, default_bump(0.05)), grid);
    PointEval at_o = emb.eval(origin(2));
    for (int i = 0; i < grid->size(); i += 13) CHECK(std::abs(at_o.phi[static_cast<size_t>(i)]) < 1e-9);

    auto g = task_rng(66, 0);
    HPoint x = rand_point(g, 1.0);
    PointEval e = emb.eval(x);
    double mass = 0;
    for (int i = 0; i < grid->size(); ++i) {
        CHECK(std::abs(norm(e.grad[static_cast<size_t>(i)]) - 1.0) < 1e-4);
        CHECK(e.lambda[static_cast<size_t>(i)] > 0);
        mass += grid->weights[static_cast<size_t>(i)] * e.lambda[static_cast<size_t>(i)];
    }
    CHECK(mass == Catch::Approx(1.0).margin(1e-6));

    // The value field is differentiated by its reported gradient.
    for (int i : {0, 60, 120, 180}) {
        double h = 1e-4;
        for (int k = 0; k < 2; ++k) {
            VecN dir;
            dir.n = 2;
            dir[k] = 1.0;
            double fp = emb.busemann(i, emb.metric.exp_g(x, h * dir));
            double fm = emb.busemann(i, emb.metric.exp_g(x, (-h) * dir));
            CHECK(std::abs((fp - fm) / (2 * h) - e.grad[static_cast<size_t>(i)][k]) < 1e-5);
        }
    }
}

TEST_CASE("perturbed embedding preserves distances") {
    auto grid = make_grid(2, 240);
    EmbeddingField emb(MetricField(2, 3.0, default_bump(0.05)), grid);
    auto g = task_rng(67, 0);
    for (int k = 0; k < 5; ++k) {
        HPoint x = rand_point(g, 1.4), y = rand_point(g, 1.4);
        double gap = sup_norm(emb.phi_embed(x) - emb.phi_embed(y));
        double d = emb.metric.dist_g(x, y);
        CHECK(std::abs(gap - d) < 5e-3);
    }
}

TEST_CASE("perturbed Hessian satisfies the conformal identity") {
    // The identity D^2(e^Phi) = e^Phi g is exact only at u == 0; its defect
    // grows linearly in the bump amplitude, so the 1e-3 check runs at a
    // small amplitude.
    auto grid = make_grid(2, 240);
    EmbeddingField emb(MetricField(2, 3.0, default_bump(4e-4)), grid);
    auto g = task_rng(68, 0);
    HPoint x = rand_point(g, 0.8);
    double h = 5e-3;
    // Second differences of e^{Phi} along frame directions: D^2(e^Phi)(v,v)
    // should equal e^{Phi} for unit v.
    for (int i : {30, 150}) {
        for (int k = 0; k < 2; ++k) {
            VecN dir;
            dir.n = 2;
            dir[k] = 1.0;
            double f0 = std::exp(emb.busemann(i, x));
            double fp = std::exp(emb.busemann(i, emb.metric.exp_g(x, h * dir)));
            double fm = std::exp(emb.busemann(i, emb.metric.exp_g(x, (-h) * dir)));
            double second = (fp - 2 * f0 + fm) / (h * h);
            CHECK(std::abs(second - f0) < 1e-3 * std::max(1.0, f0));
        }
    }
}

TEST_CASE("n=3 exact embedding sanity") {
    auto grid = make_grid(3, 1024);
    EmbeddingField emb(MetricField(3, 3.0), grid);
    auto g = task_rng(69, 0);
    HPoint x = ray_point(3, {0.48, 0.6, 0.64}, 1.1);
    PointEval e = emb.eval(x);
    double mass = 0;
    for (int i = 0; i < grid->size(); ++i) {
        CHECK(std::abs(norm(e.grad[static_cast<size_t>(i)]) - 1.0) < 1e-10);
        mass += grid->weights[static_cast<size_t>(i)] * e.lambda[static_cast<size_t>(i)];
    }
    CHECK(mass == Catch::Approx(1.0).margin(1e-2));
    (void)g;
}
