#include <doctest.h>

#include <cmath>
#include <vector>

#include "volterra/bsvie.hpp"

using namespace volterra;

namespace {

BsvieProblem tree_problem(std::function<double(double, double, double)> f_scalar,
                          std::function<double(double, double)> g_scalar, bool dz = false) {
    BsvieProblem p;
    p.name = "tree-test";
    p.dim_x = 1;
    p.dim_y = 1;
    p.f = [f_scalar](double t, double s, std::span<const double> x, std::span<const double>,
                     std::span<const double> z, std::span<double> out) {
        out[0] = f_scalar(t, s, x[0]) + 0.0 * z[0];
    };
    p.g = [g_scalar](double t, std::span<const double> x, std::span<double> out) {
        out[0] = g_scalar(t, x[0]);
    };
    p.depends_on_z = dz;
    return p;
}

/// Independent oracle: enumerate all 2^(N-l) walk continuations from node
/// (l, j) and average the cumulative target directly.
struct BruteForce {
    const Partition& p;
    const BinaryTree& tree;
    std::function<double(double, double, double)> f; // f(t_k, s, x), nullptr-like for zero
    std::function<double(double, double)> g;

    double y(std::size_t k, std::size_t l, std::size_t j) const {
        const std::size_t steps = p.steps() - l;
        const std::size_t count = std::size_t{1} << steps;
        const double t_k = p.node(k);
        double acc = 0.0;
        for (std::size_t c = 0; c < count; ++c) {
            double w = tree.node_value(l, j);
            double run = f ? f(t_k, p.node(l), w) * p.mesh() : 0.0;
            for (std::size_t s = 0; s < steps; ++s) {
                w += ((c >> s) & 1u) ? tree.step() : -tree.step();
                if (f && l + 1 + s < p.steps()) run += f(t_k, p.node(l + 1 + s), w) * p.mesh();
            }
            acc += g(t_k, w) + run;
        }
        return acc / static_cast<double>(count);
    }

    double z(std::size_t k, std::size_t l, std::size_t j) const {
        const std::size_t steps = p.steps() - l;
        const std::size_t count = std::size_t{1} << steps;
        const double t_k = p.node(k);
        double acc = 0.0;
        for (std::size_t c = 0; c < count; ++c) {
            double w = tree.node_value(l, j);
            const double sign = ((c >> 0) & 1u) ? 1.0 : -1.0;
            double run = 0.0;
            for (std::size_t s = 0; s < steps; ++s) {
                w += ((c >> s) & 1u) ? tree.step() : -tree.step();
                if (f && l + 1 + s < p.steps()) run += f(t_k, p.node(l + 1 + s), w) * p.mesh();
            }
            acc += (sign / tree.step()) * (g(t_k, w) + run);
        }
        return acc / static_cast<double>(count);
    }
};

} // namespace

TEST_CASE("tree backend: constant free term is exact") {
    const Partition p = make_uniform(1.0, 8);
    const SvieProblem forward = example_section5().svie;
    const BsvieProblem pr =
        tree_problem([](double, double, double) { return 0.0; },
                     [](double, double) { return 2.5; });
    const BsvieTreeSolution sol = solve_backward_tree(pr, forward, p);
    for (std::size_t k = 0; k <= 8; ++k)
        for (std::size_t l = k; l <= 8; ++l)
            for (std::size_t j = 0; j <= l; ++j) {
                CHECK(sol.y[k][l][j] == 2.5);
                if (l < 8) CHECK(sol.z[k][l][j] == 0.0);
            }
}

TEST_CASE("tree backend: walk free term gives the martingale and unit Z") {
    const Partition p = make_uniform(1.0, 8);
    const BinaryTree tree(p);
    const SvieProblem forward = example_section5().svie;
    const BsvieProblem pr = tree_problem([](double, double, double) { return 0.0; },
                                         [](double, double x) { return x; });
    const BsvieTreeSolution sol = solve_backward_tree(pr, forward, p);
    for (std::size_t k = 0; k <= 7; ++k)
        for (std::size_t l = k; l <= 7; ++l)
            for (std::size_t j = 0; j <= l; ++j) {
                CHECK(sol.y[k][l][j] == doctest::Approx(tree.node_value(l, j)).epsilon(1e-13));
                CHECK(sol.z[k][l][j] == doctest::Approx(1.0).epsilon(1e-13));
            }
}

TEST_CASE("tree backend matches brute-force enumeration") {
    const Partition p = make_uniform(1.0, 8);
    const BinaryTree tree(p);
    const SvieProblem forward = example_section5().svie;
    auto fsc = [](double t, double s, double x) { return 0.5 * t * std::sin(x) + 0.1 * s; };
    auto gsc = [](double t, double x) { return t * std::sin(x) + 0.2 * x; };
    const BsvieProblem pr = tree_problem(fsc, gsc);
    const BsvieTreeSolution sol = solve_backward_tree(pr, forward, p);
    const BruteForce oracle{p, tree, fsc, gsc};
    for (std::size_t k = 0; k <= 7; ++k)
        for (std::size_t l = k; l <= 7; ++l)
            for (std::size_t j = 0; j <= l; ++j) {
                const double ys = sol.y[k][l][j], yb = oracle.y(k, l, j);
                CHECK(std::abs(ys - yb) <= 1e-12 * std::max({1.0, std::abs(ys), std::abs(yb)}));
                const double zs = sol.z[k][l][j], zb = oracle.z(k, l, j);
                CHECK(std::abs(zs - zb) <= 1e-12 * std::max({1.0, std::abs(zs), std::abs(zb)}));
            }
}

TEST_CASE("tree backend tower property at the root") {
    const Partition p = make_uniform(1.0, 10);
    const BinaryTree tree(p);
    const SvieProblem forward = example_section5().svie;
    auto fsc = [](double t, double s, double x) { return 0.3 * t * std::cos(x) - 0.2 * s; };
    auto gsc = [](double t, double x) { return (1.0 + t) * std::tanh(x); };
    const BsvieProblem pr = tree_problem(fsc, gsc);
    const BsvieTreeSolution sol = solve_backward_tree(pr, forward, p);
    // one-shot unconditional mean via binomial level weights; the k = 0
    // recursion reaches t_0, where F_0 is trivial
    const double t_k = p.node(0);
    double expect = 0.0;
    {
        const std::vector<double> w = binomial_weights(p.steps());
        for (std::size_t j = 0; j <= p.steps(); ++j)
            expect += w[j] * gsc(t_k, tree.node_value(p.steps(), j));
    }
    for (std::size_t l = 0; l < p.steps(); ++l) {
        const std::vector<double> w = binomial_weights(l);
        double term = 0.0;
        for (std::size_t j = 0; j <= l; ++j)
            term += w[j] * fsc(t_k, p.node(l), tree.node_value(l, j));
        expect += term * p.mesh();
    }
    const double root = sol.y[0][0][0];
    CHECK(root == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("tree backend requires a Markovian problem") {
    const Partition p = make_uniform(1.0, 4);
    SvieProblem forward = example_svie_benchmark(); // not driver_is_state
    const BsvieProblem pr = tree_problem([](double, double, double) { return 0.0; },
                                         [](double, double x) { return x; });
    CHECK_THROWS_AS(solve_backward_tree(pr, forward, p), InvalidArgument);
}

TEST_CASE("tree backend with a z-dependent generator") {
    const Partition p = make_uniform(1.0, 12);
    const SvieProblem forward = example_section5().svie;
    BsvieProblem pr;
    pr.dim_x = 1;
    pr.dim_y = 1;
    pr.depends_on_z = true;
    pr.f = [](double, double, std::span<const double>, std::span<const double>,
              std::span<const double> z, std::span<double> out) { out[0] = 0.25 * z[0]; };
    pr.g = [](double t, std::span<const double> x, std::span<double> out) {
        out[0] = t * std::sin(x[0]);
    };
    const BsvieTreeSolution sol = solve_backward_tree(pr, forward, p);
    for (const auto& st : sol.picard_stats) CHECK(st.max_iterations <= 8);
    CHECK(std::isfinite(sol.y[0][0][0]));
}
