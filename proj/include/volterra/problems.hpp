#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "volterra/errors.hpp"
#include "volterra/rng.hpp"

namespace volterra {

// Coefficient callbacks must be pure functions of their arguments: the
// solvers evaluate them concurrently from parallel workers and rely on
// call-order independence for reproducibility.

/// Free term phi(t, W(t)) -> R^d. Modeled as a deterministic function of
/// time and the current Brownian value; general path-dependent free terms
/// are out of scope.
using FreeTermSvie = std::function<void(double t, double w, std::span<double> out)>;

/// Two-time kernel (t, s, x) -> R^d for drift b and diffusion sigma,
/// defined on 0 <= s <= t <= T.
using VolterraKernel =
    std::function<void(double t, double s, std::span<const double> x, std::span<double> out)>;

/// Generator f(t, s, x, y, z) -> R^n on the closed simplex t <= s.
using BsvieGenerator =
    std::function<void(double t, double s, std::span<const double> x, std::span<const double> y,
                       std::span<const double> z, std::span<double> out)>;

/// Free term g(t, x) -> R^n.
using BsvieFreeTerm = std::function<void(double t, std::span<const double> x, std::span<double> out)>;

/// One term of a separable kernel decomposition
///   k(t, s, x) = sum_r outer_r(t) * inner_r(s, x),
/// which admits an O(R*N) forward recursion instead of the O(N^2) resum.
struct SeparableTerm {
    std::function<double(double t)> outer;
    std::function<void(double s, std::span<const double> x, std::span<double> out)> inner;
};

struct SvieProblem {
    std::string name;
    std::size_t dim_x = 1;
    FreeTermSvie phi;
    VolterraKernel b;
    VolterraKernel sigma;
    double lipschitz_L = 1.0;

    /// b and sigma ignore their first (outer time) argument; enables the
    /// O(N) incremental forward recursion.
    bool outer_independent = false;

    /// Optional separable decompositions; empty means none declared.
    std::vector<SeparableTerm> separable_b;
    std::vector<SeparableTerm> separable_sigma;

    /// The forward solution equals the driving Brownian path (x = W).
    /// Required for the exact binary-tree backend.
    bool driver_is_state = false;
};

struct BsvieProblem {
    std::string name;
    std::size_t dim_x = 1;
    std::size_t dim_y = 1;
    BsvieGenerator f;
    BsvieFreeTerm g;
    bool depends_on_y = false;
    bool depends_on_z = false;
    double lipschitz_L = 1.0;
};

/// Closed-form solution used as the error oracle: y_true(t, W(t)) and
/// z_true(t, s, W(s)) for 0 <= t <= s <= T.
struct ClosedFormOracle {
    std::function<void(double t, double w, std::span<double> out)> y_true;
    std::function<void(double t, double s, double w, std::span<double> out)> z_true;
    bool valid() const { return static_cast<bool>(y_true) && static_cast<bool>(z_true); }
};

struct Section5Example {
    SvieProblem svie;
    BsvieProblem bsvie;
    ClosedFormOracle oracle;
};

/// The worked example with solution (t*sin(W(t)), t*cos(W(s))) on [0,1]:
/// the forward part is x = W (phi = 0, b = 0, sigma = 1), the backward part
/// has generator (t/2)*sin(x) and free term t*sin(x).
inline Section5Example example_section5() {
    Section5Example ex;
    ex.svie.name = "section5";
    ex.svie.dim_x = 1;
    ex.svie.phi = [](double, double, std::span<double> out) { out[0] = 0.0; };
    ex.svie.b = [](double, double, std::span<const double>, std::span<double> out) { out[0] = 0.0; };
    ex.svie.sigma = [](double, double, std::span<const double>, std::span<double> out) { out[0] = 1.0; };
    ex.svie.lipschitz_L = 1.0;
    ex.svie.outer_independent = true;
    ex.svie.driver_is_state = true;

    ex.bsvie.name = "section5";
    ex.bsvie.dim_x = 1;
    ex.bsvie.dim_y = 1;
    ex.bsvie.f = [](double t, double, std::span<const double> x, std::span<const double>,
                    std::span<const double>, std::span<double> out) {
        out[0] = 0.5 * t * std::sin(x[0]);
    };
    ex.bsvie.g = [](double t, std::span<const double> x, std::span<double> out) {
        out[0] = t * std::sin(x[0]);
    };
    ex.bsvie.depends_on_y = false;
    ex.bsvie.depends_on_z = false;
    ex.bsvie.lipschitz_L = 1.0;

    ex.oracle.y_true = [](double t, double w, std::span<double> out) { out[0] = t * std::sin(w); };
    ex.oracle.z_true = [](double t, double, double w, std::span<double> out) {
        out[0] = t * std::cos(w);
    };
    return ex;
}

/// Benchmark SVIE with genuine two-time kernels:
///   phi = 1,
///   b(t,s,x)     = 0.75 * sin(0.5 (t+s)) * tanh(x),
///   sigma(t,s,x) = 0.3 * cos(0.5 (t-s)) * tanh(x) + 0.35 * sin(x) + 0.1.
/// Smooth in (t,s) and Lipschitz in x with constants below the declared
/// bound; the state coupling is strong enough that the O(dt) error term
/// dominates self-convergence on the study grids. No closed form;
/// reference solutions come from fine-grid self-convergence.
inline SvieProblem example_svie_benchmark() {
    SvieProblem p;
    p.name = "svie-bench";
    p.dim_x = 1;
    p.phi = [](double, double, std::span<double> out) { out[0] = 1.0; };
    p.b = [](double t, double s, std::span<const double> x, std::span<double> out) {
        out[0] = 0.75 * std::sin(0.5 * (t + s)) * std::tanh(x[0]);
    };
    p.sigma = [](double t, double s, std::span<const double> x, std::span<double> out) {
        out[0] = 0.3 * std::cos(0.5 * (t - s)) * std::tanh(x[0]) + 0.35 * std::sin(x[0]) + 0.1;
    };
    p.lipschitz_L = 1.0;
    p.outer_independent = false;
    p.driver_is_state = false;

    // sin(a t + a s) = sin(a t) cos(a s) + cos(a t) sin(a s), a = 1/2
    p.separable_b.push_back({[](double t) { return 0.75 * std::sin(0.5 * t); },
                             [](double s, std::span<const double> x, std::span<double> out) {
                                 out[0] = std::cos(0.5 * s) * std::tanh(x[0]);
                             }});
    p.separable_b.push_back({[](double t) { return 0.75 * std::cos(0.5 * t); },
                             [](double s, std::span<const double> x, std::span<double> out) {
                                 out[0] = std::sin(0.5 * s) * std::tanh(x[0]);
                             }});
    // cos(a t - a s) = cos(a t) cos(a s) + sin(a t) sin(a s), plus terms
    // independent of the outer time
    p.separable_sigma.push_back({[](double t) { return 0.3 * std::cos(0.5 * t); },
                                 [](double s, std::span<const double> x, std::span<double> out) {
                                     out[0] = std::cos(0.5 * s) * std::tanh(x[0]);
                                 }});
    p.separable_sigma.push_back({[](double t) { return 0.3 * std::sin(0.5 * t); },
                                 [](double s, std::span<const double> x, std::span<double> out) {
                                     out[0] = std::sin(0.5 * s) * std::tanh(x[0]);
                                 }});
    p.separable_sigma.push_back({[](double) { return 1.0; },
                                 [](double, std::span<const double> x, std::span<double> out) {
                                     out[0] = 0.35 * std::sin(x[0]) + 0.1;
                                 }});
    return p;
}

// ---------------------------------------------------------------------------
// Numerical sanity probe of the Lipschitz/Hoelder structure assumptions.
// ---------------------------------------------------------------------------

struct ValidationEntry {
    std::string function; // "b", "sigma", "f", "g"
    std::string argument; // "x", "y", "z", "t", "s"
    double max_quotient = 0.0;
    double declared_bound = 0.0;
    bool flagged = false;
};

struct ValidationReport {
    std::vector<ValidationEntry> entries;
    bool any_flagged = false;

    const ValidationEntry& entry(const std::string& fn, const std::string& arg) const {
        for (const auto& e : entries)
            if (e.function == fn && e.argument == arg) return e;
        throw InvalidArgument("ValidationReport: no entry for " + fn + "/" + arg);
    }
};

namespace detail {

inline void check_finite_output(std::span<const double> out, const std::string& fn,
                                const std::string& where) {
    for (double v : out)
        if (!std::isfinite(v))
            throw NumericError("problem definition error: " + fn + " returned a non-finite value at " +
                               where);
}

inline std::string tuple_str(double t, double s, std::span<const double> x) {
    std::ostringstream os;
    os << "(t=" << t << ", s=" << s << ", x=" << (x.empty() ? 0.0 : x[0]) << ")";
    return os.str();
}

class QuotientTracker {
public:
    void observe(double q) {
        if (q > max_) max_ = q;
    }
    double max() const { return max_; }

private:
    double max_ = 0.0;
};

inline double dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

} // namespace detail

/// Samples random argument tuples, estimates local Lipschitz quotients in the
/// state arguments and Hoelder-1/2 quotients in the time arguments by finite
/// differences, and flags any estimate exceeding 1.1 * lipschitz_L.
inline ValidationReport validate_problem(const SvieProblem& p, std::size_t sample_count,
                                         std::uint64_t seed) {
    if (sample_count < 2) throw InvalidArgument("validate_problem: sample_count must be >= 2");
    const std::size_t d = p.dim_x;
    std::vector<double> x(d), x2(d), out0(d), out1(d);
    detail::QuotientTracker bx, bt, bs, sx, st, ss;
    const double hx = 1e-4, ht = 1e-4;
    for (std::size_t it = 0; it < sample_count; ++it) {
        const double t = rng::uniform(rng::mix(seed, 11, it));
        const double s = t * rng::uniform(rng::mix(seed, 13, it)); // s <= t
        for (std::size_t c = 0; c < d; ++c)
            x[c] = 3.0 * rng::normal(seed, 17 + c, it);

        auto probe = [&](const VolterraKernel& k, const char* fn, detail::QuotientTracker& qx,
                         detail::QuotientTracker& qt, detail::QuotientTracker& qs) {
            k(t, s, x, out0);
            detail::check_finite_output(out0, fn, detail::tuple_str(t, s, x));
            x2 = x;
            x2[it % d] += hx;
            k(t, s, x2, out1);
            detail::check_finite_output(out1, fn, detail::tuple_str(t, s, x2));
            qx.observe(detail::dist(out0, out1) / hx);
            k(t + ht, s, x, out1);
            qt.observe(detail::dist(out0, out1) / std::sqrt(ht));
            if (s + ht <= t) {
                k(t, s + ht, x, out1);
                qs.observe(detail::dist(out0, out1) / std::sqrt(ht));
            }
        };
        probe(p.b, "b", bx, bt, bs);
        probe(p.sigma, "sigma", sx, st, ss);
    }
    ValidationReport rep;
    auto add = [&](const char* fn, const char* arg, double q) {
        ValidationEntry e{fn, arg, q, p.lipschitz_L, q > 1.1 * p.lipschitz_L};
        rep.any_flagged = rep.any_flagged || e.flagged;
        rep.entries.push_back(std::move(e));
    };
    add("b", "x", bx.max());
    add("b", "t", bt.max());
    add("b", "s", bs.max());
    add("sigma", "x", sx.max());
    add("sigma", "t", st.max());
    add("sigma", "s", ss.max());
    return rep;
}

inline ValidationReport validate_problem(const BsvieProblem& p, std::size_t sample_count,
                                         std::uint64_t seed) {
    if (sample_count < 2) throw InvalidArgument("validate_problem: sample_count must be >= 2");
    const std::size_t d = p.dim_x, n = p.dim_y;
    std::vector<double> x(d), y(n), z(n), bump(std::max(d, n));
    std::vector<double> out0(n), out1(n);
    detail::QuotientTracker fx, fy, fz, ft, fs, gx, gt;
    const double hx = 1e-4, ht = 1e-4;
    for (std::size_t it = 0; it < sample_count; ++it) {
        const double t = rng::uniform(rng::mix(seed, 21, it));
        const double s = t + (1.0 - t) * rng::uniform(rng::mix(seed, 23, it)); // t <= s
        for (std::size_t c = 0; c < d; ++c) x[c] = 3.0 * rng::normal(seed, 29 + c, it);
        for (std::size_t c = 0; c < n; ++c) {
            y[c] = 3.0 * rng::normal(seed, 41 + c, it);
            z[c] = 3.0 * rng::normal(seed, 53 + c, it);
        }
        p.f(t, s, x, y, z, out0);
        detail::check_finite_output(out0, "f", detail::tuple_str(t, s, x));

        bump.assign(x.begin(), x.end());
        bump[it % d] += hx;
        p.f(t, s, std::span<const double>(bump.data(), d), y, z, out1);
        detail::check_finite_output(out1, "f", detail::tuple_str(t, s, bump));
        fx.observe(detail::dist(out0, out1) / hx);

        bump.assign(y.begin(), y.end());
        bump[it % n] += hx;
        p.f(t, s, x, std::span<const double>(bump.data(), n), z, out1);
        fy.observe(detail::dist(out0, out1) / hx);

        bump.assign(z.begin(), z.end());
        bump[it % n] += hx;
        p.f(t, s, x, y, std::span<const double>(bump.data(), n), out1);
        fz.observe(detail::dist(out0, out1) / hx);

        if (t + ht <= s) {
            p.f(t + ht, s, x, y, z, out1);
            ft.observe(detail::dist(out0, out1) / std::sqrt(ht));
        }
        p.f(t, s + ht, x, y, z, out1);
        fs.observe(detail::dist(out0, out1) / std::sqrt(ht));

        p.g(t, x, out0);
        detail::check_finite_output(out0, "g", detail::tuple_str(t, 0.0, x));
        bump.assign(x.begin(), x.end());
        bump[it % d] += hx;
        p.g(t, std::span<const double>(bump.data(), d), out1);
        gx.observe(detail::dist(out0, out1) / hx);
        p.g(t + ht, x, out1);
        gt.observe(detail::dist(out0, out1) / std::sqrt(ht));
    }
    ValidationReport rep;
    auto add = [&](const char* fn, const char* arg, double q) {
        ValidationEntry e{fn, arg, q, p.lipschitz_L, q > 1.1 * p.lipschitz_L};
        rep.any_flagged = rep.any_flagged || e.flagged;
        rep.entries.push_back(std::move(e));
    };
    add("f", "x", fx.max());
    add("f", "y", fy.max());
    add("f", "z", fz.max());
    add("f", "t", ft.max());
    add("f", "s", fs.max());
    add("g", "x", gx.max());
    add("g", "t", gt.max());
    return rep;
}

} // namespace volterra
