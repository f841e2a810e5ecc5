#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "volterra/errors.hpp"
#include "volterra/grid.hpp"
#include "volterra/parallel.hpp"
#include "volterra/paths.hpp"
#include "volterra/problems.hpp"

namespace volterra {

/// Forward Euler solution x^pi(t_i) per path, node-major: row i holds all
/// paths (each of dim d) at node i.
class SviePaths {
public:
    SviePaths() = default;
    SviePaths(Partition p, std::size_t M, std::size_t dim, std::string tag)
        : partition_(p), paths_(M), dim_(dim), tag_(std::move(tag)),
          values_((p.steps() + 1) * M * dim, 0.0) {}

    const Partition& partition() const { return partition_; }
    std::size_t paths() const { return paths_; }
    std::size_t dim() const { return dim_; }
    const std::string& problem_tag() const { return tag_; }

    std::span<double> node_values(std::size_t i) {
        return {values_.data() + i * paths_ * dim_, paths_ * dim_};
    }
    std::span<const double> node_values(std::size_t i) const {
        return {values_.data() + i * paths_ * dim_, paths_ * dim_};
    }
    const double* value(std::size_t i, std::size_t m) const {
        return values_.data() + (i * paths_ + m) * dim_;
    }

    /// Keeps every (factor)-th node; the result lives on the coarsened grid.
    SviePaths subsample(std::size_t factor) const {
        if (factor == 0 || partition_.steps() % factor != 0)
            throw InvalidArgument("SviePaths::subsample: factor must divide N");
        if (factor == 1) return *this;
        SviePaths out(make_uniform(partition_.horizon(), partition_.steps() / factor), paths_, dim_,
                      tag_);
        for (std::size_t j = 0; j <= out.partition().steps(); ++j) {
            auto src = node_values(j * factor);
            auto dst = out.node_values(j);
            std::copy(src.begin(), src.end(), dst.begin());
        }
        return out;
    }

private:
    Partition partition_;
    std::size_t paths_ = 0;
    std::size_t dim_ = 1;
    std::string tag_;
    std::vector<double> values_;
};

enum class ForwardRoute {
    Auto,            ///< separable if declared, else O(N) if outer-independent, else resum
    Generic,         ///< O(N^2) full-history resum
    Convolutionless, ///< O(N) recursion, requires outer_independent
    Separable        ///< O(R*N) recursion on a declared separable decomposition
};

namespace detail {

inline void throw_nonfinite(const std::string& tag, std::size_t path, std::size_t step) {
    throw NumericError("solve_forward(" + tag + "): non-finite state at path " +
                       std::to_string(path) + ", step " + std::to_string(step));
}

// O(N^2) resum. Kernels depend on the outer time, so the history sum is
// rebuilt at every step; accumulation is left-to-right in extended
// precision to keep it reproducible.
inline void forward_generic(const SvieProblem& pr, const PathEnsemble& e, SviePaths& out,
                            unsigned workers) {
    const Partition& p = e.partition();
    const std::size_t N = p.steps(), M = e.paths(), d = pr.dim_x;
    const double dt = p.mesh();
    parallel_chunks(M, kReductionChunks, workers, [&](std::size_t mb, std::size_t me, std::size_t) {
        std::vector<long double> acc((me - mb) * d);
        std::vector<double> w(me - mb, 0.0);
        std::vector<double> coeff(d), xval(d), phi_val(d);
        for (std::size_t i = 0; i < N; ++i) {
            const double t_next = p.node(i + 1);
            std::fill(acc.begin(), acc.end(), 0.0L);
            for (std::size_t k = 0; k <= i; ++k) {
                const double t_k = p.node(k);
                std::span<const double> dw = e.increment(k);
                for (std::size_t m = mb; m < me; ++m) {
                    const double* x = out.value(k, m);
                    long double* a = acc.data() + (m - mb) * d;
                    pr.b(t_next, t_k, std::span<const double>(x, d), coeff);
                    for (std::size_t c = 0; c < d; ++c) a[c] += static_cast<long double>(coeff[c]) * dt;
                    pr.sigma(t_next, t_k, std::span<const double>(x, d), coeff);
                    for (std::size_t c = 0; c < d; ++c)
                        a[c] += static_cast<long double>(coeff[c]) * dw[m];
                }
            }
            std::span<const double> dw = e.increment(i);
            std::span<double> next = out.node_values(i + 1);
            for (std::size_t m = mb; m < me; ++m) {
                w[m - mb] += dw[m];
                pr.phi(t_next, w[m - mb], phi_val);
                const long double* a = acc.data() + (m - mb) * d;
                for (std::size_t c = 0; c < d; ++c) {
                    const double v = phi_val[c] + static_cast<double>(a[c]);
                    if (!std::isfinite(v)) throw_nonfinite(pr.name, m, i + 1);
                    next[m * d + c] = v;
                }
            }
        }
    });
}

// O(N) recursion for kernels independent of the outer time. Plain double
// accumulation: with b = 0, sigma = 1 this telescopes bitwise to the
// Brownian prefix sums.
inline void forward_convolutionless(const SvieProblem& pr, const PathEnsemble& e, SviePaths& out,
                                    unsigned workers) {
    const Partition& p = e.partition();
    const std::size_t N = p.steps(), M = e.paths(), d = pr.dim_x;
    const double dt = p.mesh();
    parallel_chunks(M, kReductionChunks, workers, [&](std::size_t mb, std::size_t me, std::size_t) {
        std::vector<double> bsum((me - mb) * d, 0.0), ssum((me - mb) * d, 0.0);
        std::vector<double> w(me - mb, 0.0);
        std::vector<double> coeff(d), phi_val(d);
        for (std::size_t i = 0; i < N; ++i) {
            const double t_i = p.node(i), t_next = p.node(i + 1);
            std::span<const double> dw = e.increment(i);
            std::span<double> next = out.node_values(i + 1);
            for (std::size_t m = mb; m < me; ++m) {
                const double* x = out.value(i, m);
                double* bs = bsum.data() + (m - mb) * d;
                double* ss = ssum.data() + (m - mb) * d;
                pr.b(t_i, t_i, std::span<const double>(x, d), coeff);
                for (std::size_t c = 0; c < d; ++c) bs[c] += coeff[c] * dt;
                pr.sigma(t_i, t_i, std::span<const double>(x, d), coeff);
                for (std::size_t c = 0; c < d; ++c) ss[c] += coeff[c] * dw[m];
                w[m - mb] += dw[m];
                pr.phi(t_next, w[m - mb], phi_val);
                for (std::size_t c = 0; c < d; ++c) {
                    const double v = (phi_val[c] + bs[c]) + ss[c];
                    if (!std::isfinite(v)) throw_nonfinite(pr.name, m, i + 1);
                    next[m * d + c] = v;
                }
            }
        }
    });
}

// O(R*N) recursion on a declared separable decomposition: running inner
// sums per term, outer factors applied at each step.
inline void forward_separable(const SvieProblem& pr, const PathEnsemble& e, SviePaths& out,
                              unsigned workers) {
    const Partition& p = e.partition();
    const std::size_t N = p.steps(), M = e.paths(), d = pr.dim_x;
    const std::size_t Rb = pr.separable_b.size(), Rs = pr.separable_sigma.size();
    const double dt = p.mesh();
    parallel_chunks(M, kReductionChunks, workers, [&](std::size_t mb, std::size_t me, std::size_t) {
        const std::size_t mc = me - mb;
        std::vector<long double> bsum(Rb * mc * d, 0.0L), ssum(Rs * mc * d, 0.0L);
        std::vector<double> w(mc, 0.0);
        std::vector<double> coeff(d), phi_val(d);
        std::vector<double> outer_b(Rb), outer_s(Rs);
        for (std::size_t i = 0; i < N; ++i) {
            const double t_i = p.node(i), t_next = p.node(i + 1);
            std::span<const double> dw = e.increment(i);
            for (std::size_t r = 0; r < Rb; ++r) outer_b[r] = pr.separable_b[r].outer(t_next);
            for (std::size_t r = 0; r < Rs; ++r) outer_s[r] = pr.separable_sigma[r].outer(t_next);
            std::span<double> next = out.node_values(i + 1);
            for (std::size_t m = mb; m < me; ++m) {
                const double* x = out.value(i, m);
                for (std::size_t r = 0; r < Rb; ++r) {
                    pr.separable_b[r].inner(t_i, std::span<const double>(x, d), coeff);
                    long double* a = bsum.data() + (r * mc + (m - mb)) * d;
                    for (std::size_t c = 0; c < d; ++c) a[c] += static_cast<long double>(coeff[c]) * dt;
                }
                for (std::size_t r = 0; r < Rs; ++r) {
                    pr.separable_sigma[r].inner(t_i, std::span<const double>(x, d), coeff);
                    long double* a = ssum.data() + (r * mc + (m - mb)) * d;
                    for (std::size_t c = 0; c < d; ++c)
                        a[c] += static_cast<long double>(coeff[c]) * dw[m];
                }
                w[m - mb] += dw[m];
                pr.phi(t_next, w[m - mb], phi_val);
                for (std::size_t c = 0; c < d; ++c) {
                    long double acc = phi_val[c];
                    for (std::size_t r = 0; r < Rb; ++r)
                        acc += outer_b[r] * bsum[(r * mc + (m - mb)) * d + c];
                    for (std::size_t r = 0; r < Rs; ++r)
                        acc += outer_s[r] * ssum[(r * mc + (m - mb)) * d + c];
                    const double v = static_cast<double>(acc);
                    if (!std::isfinite(v)) throw_nonfinite(pr.name, m, i + 1);
                    next[m * d + c] = v;
                }
            }
        }
    });
}

} // namespace detail

inline SviePaths solve_forward(const SvieProblem& pr, const PathEnsemble& e,
                               ForwardRoute route = ForwardRoute::Auto, unsigned workers = 1) {
    const Partition& p = e.partition();
    SviePaths out(p, e.paths(), pr.dim_x, pr.name);

    // x^pi(t_0) = phi(0) with W(0) = 0.
    {
        std::vector<double> phi0(pr.dim_x);
        pr.phi(0.0, 0.0, phi0);
        for (double v : phi0)
            if (!std::isfinite(v)) detail::throw_nonfinite(pr.name, 0, 0);
        std::span<double> row = out.node_values(0);
        for (std::size_t m = 0; m < e.paths(); ++m)
            for (std::size_t c = 0; c < pr.dim_x; ++c) row[m * pr.dim_x + c] = phi0[c];
    }

    const bool has_separable = !pr.separable_b.empty() && !pr.separable_sigma.empty();
    ForwardRoute r = route;
    if (r == ForwardRoute::Auto)
        r = has_separable ? ForwardRoute::Separable
                          : (pr.outer_independent ? ForwardRoute::Convolutionless
                                                  : ForwardRoute::Generic);
    switch (r) {
    case ForwardRoute::Generic:
        detail::forward_generic(pr, e, out, workers);
        break;
    case ForwardRoute::Convolutionless:
        if (!pr.outer_independent)
            throw InvalidArgument("solve_forward: convolutionless route requires outer-independent "
                                  "kernels");
        detail::forward_convolutionless(pr, e, out, workers);
        break;
    case ForwardRoute::Separable:
        if (!has_separable)
            throw InvalidArgument("solve_forward: no separable decomposition declared");
        detail::forward_separable(pr, e, out, workers);
        break;
    default:
        throw InvalidArgument("solve_forward: unresolved route");
    }
    return out;
}

/// Interpolant with frozen kernel arguments at the off-grid time t. Full
/// subintervals contribute b(t, t_k, x_k)*dt + sigma(t, t_k, x_k)*dW_k; the
/// partial last subinterval uses a linearly bridged Brownian value. On a
/// grid node this returns the stored node values.
inline std::vector<double> evaluate_offgrid(const SvieProblem& pr, const SviePaths& paths,
                                            const PathEnsemble& e, double t) {
    const Partition& p = paths.partition();
    if (!(t >= 0.0) || !(t <= p.horizon()))
        throw InvalidArgument("evaluate_offgrid: t outside [0, T]");
    const std::size_t M = paths.paths(), d = paths.dim();
    std::vector<double> out(M * d);

    const std::size_t i = pi_index(p, t);
    if (t == p.node(i) || t == p.horizon()) {
        const std::size_t node = (t == p.horizon()) ? p.steps() : i;
        auto row = paths.node_values(node);
        std::copy(row.begin(), row.end(), out.begin());
        return out;
    }

    const double dt = p.mesh();
    const double frac = (t - p.node(i)) / dt;
    std::vector<double> w(M, 0.0);
    for (std::size_t k = 0; k < i; ++k) {
        std::span<const double> dw = e.increment(k);
        for (std::size_t m = 0; m < M; ++m) w[m] += dw[m];
    }
    std::vector<double> coeff(d), phi_val(d);
    std::span<const double> dw_i = e.increment(i);
    for (std::size_t m = 0; m < M; ++m) {
        const double w_t = w[m] + frac * dw_i[m]; // linear bridge
        long double acc[8] = {};                  // d is small; cap enforced below
        if (d > 8) throw InvalidArgument("evaluate_offgrid: dim_x > 8 not supported");
        for (std::size_t k = 0; k < i; ++k) {
            const double* x = paths.value(k, m);
            pr.b(t, p.node(k), std::span<const double>(x, d), coeff);
            for (std::size_t c = 0; c < d; ++c) acc[c] += static_cast<long double>(coeff[c]) * dt;
            pr.sigma(t, p.node(k), std::span<const double>(x, d), coeff);
            for (std::size_t c = 0; c < d; ++c)
                acc[c] += static_cast<long double>(coeff[c]) * e.increment(k)[m];
        }
        const double* x_i = paths.value(i, m);
        pr.b(t, p.node(i), std::span<const double>(x_i, d), coeff);
        for (std::size_t c = 0; c < d; ++c)
            acc[c] += static_cast<long double>(coeff[c]) * (t - p.node(i));
        pr.sigma(t, p.node(i), std::span<const double>(x_i, d), coeff);
        for (std::size_t c = 0; c < d; ++c)
            acc[c] += static_cast<long double>(coeff[c]) * (w_t - w[m]);
        pr.phi(t, w_t, phi_val);
        for (std::size_t c = 0; c < d; ++c) out[m * d + c] = phi_val[c] + static_cast<double>(acc[c]);
    }
    return out;
}

} // namespace volterra
