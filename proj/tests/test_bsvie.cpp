#include <doctest.h>

#include <cmath>
#include <vector>

#include "volterra/analysis.hpp"
#include "volterra/bsvie.hpp"

using namespace volterra;

namespace {

struct Setup {
    Partition grid;
    PathEnsemble ens;
    SviePaths x;
    Setup(std::size_t N, std::size_t M, std::uint64_t seed)
        : grid(make_uniform(1.0, N)), ens(sample_paths(grid, M, seed)),
          x(solve_forward(example_section5().svie, ens)) {}
};

} // namespace

TEST_CASE("constant free term: Y constant and Z identically zero") {
    BsvieProblem pr;
    pr.dim_x = 1;
    pr.dim_y = 1;
    pr.f = [](double, double, std::span<const double>, std::span<const double>,
              std::span<const double>, std::span<double> out) { out[0] = 0.0; };
    pr.g = [](double, std::span<const double>, std::span<double> out) { out[0] = 1.75; };

    Setup s(12, 512, 5);
    LsmcConfig cfg;
    const BsvieSolution sol = solve_backward(pr, s.x, s.ens, cfg);
    for (std::size_t k = 0; k <= 12; ++k)
        for (double v : sol.y_diag(k)) CHECK(v == 1.75);
    for (std::size_t l = 0; l < 12; ++l)
        for (std::size_t k = 0; k <= l; ++k)
            for (double v : sol.z_on_grid(k, l)) CHECK(v == 0.0);
    CHECK(sol.picard_average() == 0.0);
}

TEST_CASE("martingale free term reproduces the Brownian path in sample") {
    // f = 0 and g(t,x) = x with x = W: Y^{k,pi}(t_l) = E(W(T)|F_l) = W(t_l),
    // which lies in the regression span, so in-sample errors are tiny.
    BsvieProblem pr;
    pr.dim_x = 1;
    pr.dim_y = 1;
    pr.f = [](double, double, std::span<const double>, std::span<const double>,
              std::span<const double>, std::span<double> out) { out[0] = 0.0; };
    pr.g = [](double, std::span<const double> x, std::span<double> out) { out[0] = x[0]; };

    Setup s(10, 8192, 6);
    LsmcConfig cfg;
    const BsvieSolution sol = solve_backward(pr, s.x, s.ens, cfg);
    const std::vector<double> w = s.ens.brownian_values();
    for (std::size_t k = 0; k <= 10; ++k) {
        auto y = sol.y_diag(k);
        double err = 0.0;
        for (std::size_t m = 0; m < 8192; ++m) {
            const double d = y[m] - w[k * 8192 + m];
            err += d * d;
        }
        CHECK(err / 8192.0 <= 1e-3);
    }
}

TEST_CASE("top corner stores the terminal condition") {
    Setup s(8, 256, 7);
    const BsvieProblem pr = example_section5().bsvie;
    LsmcConfig cfg;
    const BsvieSolution sol = solve_backward(pr, s.x, s.ens, cfg);
    auto y = sol.y_diag(8);
    for (std::size_t m = 0; m < 256; ++m) {
        const double expect = 1.0 * std::sin(*s.x.value(8, m));
        CHECK(y[m] == doctest::Approx(expect).epsilon(1e-15));
    }
}

TEST_CASE("section5 short run tracks the closed form") {
    Setup s(16, 1 << 14, 8);
    const Section5Example ex = example_section5();
    BsvieErrorAccumulator acc(ex.oracle, s.grid, s.ens.paths(), 1, s.ens.seed());
    LsmcConfig cfg;
    const BsvieSolution sol = solve_backward(ex.bsvie, s.x, s.ens, cfg, &acc);
    const ErrorReport rep = acc.report();
    CHECK(rep.y_error < 0.02);
    CHECK(rep.z_error < 0.05);
    CHECK(rep.y_stderr > 0.0);
    CHECK(rep.z_stderr > 0.0);
}

TEST_CASE("worker count does not change the backward solve") {
    Setup s(8, 2048, 9);
    const BsvieProblem pr = example_section5().bsvie;
    LsmcConfig one;
    one.workers = 1;
    LsmcConfig many;
    many.workers = 5;
    const BsvieSolution a = solve_backward(pr, s.x, s.ens, one);
    const BsvieSolution b = solve_backward(pr, s.x, s.ens, many);
    for (std::size_t k = 0; k <= 8; ++k) {
        auto ya = a.y_diag(k), yb = b.y_diag(k);
        for (std::size_t m = 0; m < 2048; ++m) CHECK(ya[m] == yb[m]);
    }
    for (std::size_t l = 0; l < 8; ++l)
        for (std::size_t k = 0; k <= l; ++k) {
            auto za = a.z_on_grid(k, l), zb = b.z_on_grid(k, l);
            for (std::size_t m = 0; m < 2048; ++m) CHECK(za[m] == zb[m]);
        }
}

TEST_CASE("z storage cap and forced materialization") {
    Setup s(8, 512, 10);
    const BsvieProblem pr = example_section5().bsvie;
    LsmcConfig cfg;
    cfg.z_storage_cap = 4; // N = 8 exceeds the cap
    const BsvieSolution sol = solve_backward(pr, s.x, s.ens, cfg);
    CHECK_FALSE(sol.z_materialized());
    CHECK_THROWS_AS(sol.z_on_grid(0, 3), InvalidArgument);
    cfg.force_materialize_z = true;
    const BsvieSolution sol2 = solve_backward(pr, s.x, s.ens, cfg);
    CHECK(sol2.z_materialized());
    CHECK_NOTHROW(sol2.z_on_grid(0, 3));
    CHECK_THROWS_AS(sol2.z_on_grid(3, 2), InvalidArgument); // k > l
}

TEST_CASE("linear-in-z generator: Picard matches the direct fixed point") {
    const double alpha = 0.4;
    BsvieProblem pr;
    pr.dim_x = 1;
    pr.dim_y = 1;
    pr.depends_on_z = true;
    pr.f = [alpha](double, double, std::span<const double>, std::span<const double>,
                   std::span<const double> z, std::span<double> out) { out[0] = alpha * z[0]; };
    pr.g = [](double t, std::span<const double> x, std::span<double> out) {
        out[0] = t * std::sin(x[0]);
    };
    const std::size_t N = 4, M = 4096;
    Setup s(N, M, 11);
    LsmcConfig cfg;
    const BsvieSolution sol = solve_backward(pr, s.x, s.ens, cfg);

    // Direct fixed point at the terminal level (k=1, l=3): with a linear
    // generator the demeaned Z-regressand is independent of the Z iterate,
    // so the fixed point is one regression of (dW/dt)(g - fitted(g)).
    const std::size_t k = 1, l = 3;
    const std::vector<double> w = s.ens.brownian_values();
    StateFeatures feats = build_features(default_feature_map(1), s.grid.node(l),
                                         std::span<const double>(w.data() + l * M, M),
                                         s.x.node_values(l), M, 1);
    FittedDesign design(feats, cfg.degree, cfg.ridge);
    std::vector<double> g_vals(M), y_fit(M), zeta(M), z_direct(M);
    for (std::size_t m = 0; m < M; ++m) g_vals[m] = s.grid.node(k) * std::sin(*s.x.value(N, m));
    design.fit(g_vals, y_fit);
    auto dw = s.ens.increment(l);
    for (std::size_t m = 0; m < M; ++m)
        zeta[m] = dw[m] / s.grid.mesh() * (g_vals[m] - y_fit[m]);
    design.fit(zeta, z_direct);

    auto z_sol = sol.z_on_grid(k, l);
    for (std::size_t m = 0; m < M; ++m)
        CHECK(z_sol[m] == doctest::Approx(z_direct[m]).epsilon(1e-9).scale(1.0));
    // fast convergence thanks to the control variate
    for (const auto& st : sol.picard_stats)
        if (st.pairs > 0) CHECK(st.max_iterations <= 8);
}

TEST_CASE("declared-but-vanishing z dependence coincides with the one-shot path") {
    const Section5Example ex = example_section5();
    BsvieProblem declared = ex.bsvie;
    declared.depends_on_z = true; // f ignores z anyway
    Setup s(8, 1024, 12);
    LsmcConfig cfg;
    const BsvieSolution a = solve_backward(ex.bsvie, s.x, s.ens, cfg);
    const BsvieSolution b = solve_backward(declared, s.x, s.ens, cfg);
    for (std::size_t k = 0; k <= 8; ++k) {
        auto ya = a.y_diag(k), yb = b.y_diag(k);
        for (std::size_t m = 0; m < 1024; ++m) CHECK(ya[m] == yb[m]);
    }
    for (std::size_t l = 0; l < 8; ++l)
        for (std::size_t k = 0; k <= l; ++k) {
            auto za = a.z_on_grid(k, l), zb = b.z_on_grid(k, l);
            for (std::size_t m = 0; m < 1024; ++m) CHECK(za[m] == zb[m]);
        }
}

TEST_CASE("super-critical nonlinear generator triggers the divergence error") {
    BsvieProblem pr;
    pr.dim_x = 1;
    pr.dim_y = 1;
    pr.depends_on_z = true;
    const double alpha = 1e4;
    pr.f = [alpha](double, double, std::span<const double>, std::span<const double>,
                   std::span<const double> z, std::span<double> out) {
        out[0] = alpha * z[0] * z[0];
    };
    pr.g = [](double t, std::span<const double> x, std::span<double> out) {
        out[0] = (0.5 + t) * std::sin(x[0]);
    };
    Setup s(4, 2048, 13);
    LsmcConfig cfg;
    CHECK_THROWS_AS(solve_backward(pr, s.x, s.ens, cfg), NumericError);
}

TEST_CASE("grouped and distributed Z regressands give the same estimator") {
    // (dW/dt)*(Y + f dt - eta) versus (dW/dt)*(Y - eta) + dW*f is a pure
    // rearrangement; the fitted coefficients agree to rounding.
    Setup s(6, 4096, 14);
    const std::size_t M = 4096, l = 3;
    const std::vector<double> w = s.ens.brownian_values();
    StateFeatures feats = build_features(default_feature_map(1), s.grid.node(l),
                                         std::span<const double>(w.data() + l * M, M),
                                         s.x.node_values(l), M, 1);
    FittedDesign design(feats, 3, 0.0);
    std::vector<double> y_next(M), f_vals(M), eta(M), t1(M), t2(M);
    for (std::size_t m = 0; m < M; ++m) {
        y_next[m] = std::sin(w[4 * M + m]);
        f_vals[m] = 0.3 * std::cos(w[l * M + m]);
    }
    const double dt = s.grid.mesh();
    {
        std::vector<double> xi(M);
        for (std::size_t m = 0; m < M; ++m) xi[m] = y_next[m] + f_vals[m] * dt;
        design.fit(xi, eta);
    }
    auto dw = s.ens.increment(l);
    for (std::size_t m = 0; m < M; ++m) {
        t1[m] = dw[m] / dt * (y_next[m] + f_vals[m] * dt - eta[m]);
        t2[m] = dw[m] / dt * (y_next[m] - eta[m]) + dw[m] * f_vals[m];
    }
    const CondExpEstimator e1 = design.fit(t1);
    const CondExpEstimator e2 = design.fit(t2);
    REQUIRE(e1.coefficients().size() == e2.coefficients().size());
    for (std::size_t a = 0; a < e1.coefficients().size(); ++a)
        CHECK(e1.coefficients()[a] ==
              doctest::Approx(e2.coefficients()[a]).epsilon(1e-12).scale(1.0));
}

TEST_CASE("two-component problem solves componentwise") {
    // Phase-shifted section5 pair: Y_c(t) = t sin(W(t) + phase_c).
    BsvieProblem pr;
    pr.dim_x = 1;
    pr.dim_y = 2;
    const double ph0 = 0.0, ph1 = 0.8;
    pr.f = [=](double t, double, std::span<const double> x, std::span<const double>,
               std::span<const double>, std::span<double> out) {
        out[0] = 0.5 * t * std::sin(x[0] + ph0);
        out[1] = 0.5 * t * std::sin(x[0] + ph1);
    };
    pr.g = [=](double t, std::span<const double> x, std::span<double> out) {
        out[0] = t * std::sin(x[0] + ph0);
        out[1] = t * std::sin(x[0] + ph1);
    };
    ClosedFormOracle oracle;
    oracle.y_true = [=](double t, double w, std::span<double> out) {
        out[0] = t * std::sin(w + ph0);
        out[1] = t * std::sin(w + ph1);
    };
    oracle.z_true = [=](double t, double, double w, std::span<double> out) {
        out[0] = t * std::cos(w + ph0);
        out[1] = t * std::cos(w + ph1);
    };
    Setup s(8, 1 << 13, 15);
    BsvieErrorAccumulator acc(oracle, s.grid, s.ens.paths(), 2, s.ens.seed());
    LsmcConfig cfg;
    const BsvieSolution sol = solve_backward(pr, s.x, s.ens, cfg, &acc);
    CHECK(sol.dim_y() == 2);
    const ErrorReport rep = acc.report();
    CHECK(rep.y_error < 0.05);
    CHECK(rep.z_error < 0.1);
}

TEST_CASE("single-step grid degenerates to plain means") {
    // N = 1: the only regression happens at t_0 where every feature is
    // constant, so the conditional expectation collapses to the ensemble
    // mean of the terminal condition.
    BsvieProblem pr;
    pr.dim_x = 1;
    pr.dim_y = 1;
    pr.f = [](double, double, std::span<const double>, std::span<const double>,
              std::span<const double>, std::span<double> out) { out[0] = 0.0; };
    pr.g = [](double t, std::span<const double> x, std::span<double> out) {
        out[0] = (1.0 + t) * std::cos(x[0]);
    };
    Setup s(1, 512, 21);
    LsmcConfig cfg;
    cfg.ridge = 0.0; // exact least squares so the mean identity is sharp
    const BsvieSolution sol = solve_backward(pr, s.x, s.ens, cfg);
    double mean = 0.0;
    for (std::size_t m = 0; m < 512; ++m) mean += std::cos(*s.x.value(1, m));
    mean /= 512.0;
    for (double v : sol.y_at_0()) CHECK(v == doctest::Approx(mean).epsilon(1e-13));
}

TEST_CASE("grid/path mismatches are rejected") {
    Setup s(8, 256, 16);
    const BsvieProblem pr = example_section5().bsvie;
    const PathEnsemble other = sample_paths(make_uniform(1.0, 4), 256, 16);
    LsmcConfig cfg;
    CHECK_THROWS_AS(solve_backward(pr, s.x, other, cfg), InvalidArgument);
    const PathEnsemble fewer = sample_paths(s.grid, 128, 16);
    CHECK_THROWS_AS(solve_backward(pr, s.x, fewer, cfg), InvalidArgument);
}
