#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "volterra/condexp.hpp"
#include "volterra/errors.hpp"
#include "volterra/grid.hpp"
#include "volterra/parallel.hpp"
#include "volterra/paths.hpp"
#include "volterra/problems.hpp"
#include "volterra/svie.hpp"
#include "volterra/tree.hpp"

namespace volterra {

/// Least-squares Monte Carlo backend configuration.
struct LsmcConfig {
    unsigned degree = 3;
    double ridge = 1e-8;
    std::optional<FeatureMapSpec> feature_map; // default: (W(t), x^pi(t))
    double picard_tol = 1e-10;
    unsigned picard_max_iter = 50;
    std::size_t z_storage_cap = 64; // materialize the Z triangle when N <= cap
    bool force_materialize_z = false;
    unsigned workers = 1;
};

/// Exact binary-tree backend configuration.
struct TreeConfig {
    double picard_tol = 1e-10;
    unsigned picard_max_iter = 50;
};

using BackendConfig = std::variant<LsmcConfig, TreeConfig>;

/// Streaming hooks into the backward sweep. on_z fires once per (k, l) with
/// the per-path Z^{k,pi}(t_l) slice, in ascending k within each l (l runs
/// N-1 down to 0); on_diag fires when a diagonal row Y^{k,pi}(t_k) is
/// finalized. w_row holds W(t_l) per path and dw_row the increment over
/// [t_l, t_{l+1}).
class SweepObserver {
public:
    virtual ~SweepObserver() = default;
    virtual void on_z(std::size_t /*k*/, std::size_t /*l*/, std::span<const double> /*z*/,
                      std::span<const double> /*w_row*/, std::span<const double> /*dw_row*/) {}
    virtual void on_diag(std::size_t /*k*/, std::span<const double> /*y*/,
                         std::span<const double> /*w_row*/) {}
};

class FanoutObserver : public SweepObserver {
public:
    void add(SweepObserver* obs) {
        if (obs) observers_.push_back(obs);
    }
    void on_z(std::size_t k, std::size_t l, std::span<const double> z, std::span<const double> w,
              std::span<const double> dw) override {
        for (auto* o : observers_) o->on_z(k, l, z, w, dw);
    }
    void on_diag(std::size_t k, std::span<const double> y, std::span<const double> w) override {
        for (auto* o : observers_) o->on_diag(k, y, w);
    }

private:
    std::vector<SweepObserver*> observers_;
};

struct PicardStepStats {
    std::size_t pairs = 0;      // (k,l) pairs at this level
    std::size_t iterations = 0; // summed Picard iterations
    unsigned max_iterations = 0;
};

/// Numerical solution of the triangular backward scheme over a Monte Carlo
/// ensemble. y_diag row k holds the per-path diagonal Y^{k,pi}(t_k); row N is
/// the degenerate top corner g(t_N, x^pi(T)). The Z triangle is retained only
/// for small N (storage cap); otherwise consumers stream it via an observer.
class BsvieSolution {
public:
    BsvieSolution() = default;
    BsvieSolution(Partition p, std::size_t paths, std::size_t dim_y)
        : partition_(p), paths_(paths), dim_y_(dim_y),
          y_diag_((p.steps() + 1) * paths * dim_y, 0.0) {}

    const Partition& partition() const { return partition_; }
    std::size_t paths() const { return paths_; }
    std::size_t dim_y() const { return dim_y_; }

    std::span<double> y_diag(std::size_t k) {
        return {y_diag_.data() + k * paths_ * dim_y_, paths_ * dim_y_};
    }
    std::span<const double> y_diag(std::size_t k) const {
        return {y_diag_.data() + k * paths_ * dim_y_, paths_ * dim_y_};
    }
    std::span<const double> y_at_0() const { return y_diag(0); }

    bool z_materialized() const { return z_materialized_; }
    void materialize_z() {
        const std::size_t N = partition_.steps();
        z_field_.assign(N * (N + 1) / 2, {});
        z_materialized_ = true;
    }
    void store_z(std::size_t k, std::size_t l, std::span<const double> z) {
        z_field_[tri_index(k, l)].assign(z.begin(), z.end());
    }

    /// Z^{k,pi}(t_l) per path; stands for Z^{k,pi}(tau(s)) on [t_l, t_{l+1}).
    std::span<const double> z_on_grid(std::size_t k, std::size_t l) const {
        if (l >= partition_.steps() || k > l)
            throw InvalidArgument("z_on_grid: need k <= l <= N-1");
        if (!z_materialized_)
            throw InvalidArgument("z_on_grid: Z triangle not retained at this N (storage cap); "
                                  "attach a streaming observer instead");
        return z_field_[tri_index(k, l)];
    }

    std::vector<PicardStepStats> picard_stats; // indexed by time level l
    double picard_average() const {
        std::size_t pairs = 0, iters = 0;
        for (const auto& s : picard_stats) {
            pairs += s.pairs;
            iters += s.iterations;
        }
        return pairs == 0 ? 0.0 : static_cast<double>(iters) / static_cast<double>(pairs);
    }

private:
    std::size_t tri_index(std::size_t k, std::size_t l) const { return l * (l + 1) / 2 + k; }

    Partition partition_;
    std::size_t paths_ = 0;
    std::size_t dim_y_ = 1;
    std::vector<double> y_diag_;
    bool z_materialized_ = false;
    std::vector<std::vector<double>> z_field_;
};

namespace detail {

/// Relative ensemble-L2 change with an absolute floor at scale 1.
inline double relative_change(std::span<const double> next, std::span<const double> prev) {
    double dn = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
        const double d = next[i] - prev[i];
        dn += d * d;
        nn += next[i] * next[i];
    }
    const double m = static_cast<double>(next.size());
    const double change = std::sqrt(dn / m);
    const double scale = std::max(1.0, std::sqrt(nn / m));
    return change / scale;
}

/// Gathers component c of a path-major (m*n + c) array into contiguous
/// scratch; pass-through when n == 1.
inline std::span<const double> component_view(std::span<const double> data, std::size_t n,
                                              std::size_t c, std::vector<double>& scratch) {
    if (n == 1) return data;
    const std::size_t M = data.size() / n;
    scratch.resize(M);
    for (std::size_t m = 0; m < M; ++m) scratch[m] = data[m * n + c];
    return scratch;
}

inline void scatter_component(std::span<const double> src, std::size_t n, std::size_t c,
                              std::span<double> dst) {
    if (n == 1) {
        std::copy(src.begin(), src.end(), dst.begin());
        return;
    }
    const std::size_t M = src.size();
    for (std::size_t m = 0; m < M; ++m) dst[m * n + c] = src[m];
}

} // namespace detail

/// Optional per-fit diagnostics row streamed out of the backward sweep.
struct CondExpDiagRow {
    std::size_t level;
    std::size_t k;
    char target; // 'y' or 'z'
    double condition_estimate;
    double residual_rms;
    unsigned picard_iterations;
};
using DiagnosticsSink = std::function<void(const CondExpDiagRow&)>;

namespace detail {

class LsmcSweep {
public:
    LsmcSweep(const BsvieProblem& pr, const SviePaths& x, const PathEnsemble& ens,
              const LsmcConfig& cfg, SweepObserver* obs, DiagnosticsSink diag)
        : pr_(pr), x_(x), ens_(ens), cfg_(cfg), obs_(obs), diag_(std::move(diag)),
          p_(ens.partition()), N_(p_.steps()), M_(ens.paths()), n_(pr.dim_y), d_(pr.dim_x),
          feature_map_(cfg.feature_map ? *cfg.feature_map : default_feature_map(d_)) {
        if (x.partition().steps() != N_ || x.partition().horizon() != p_.horizon())
            throw InvalidArgument("solve_backward: forward paths and ensemble grids differ");
        if (x.paths() != M_) throw InvalidArgument("solve_backward: path count mismatch");
        if (x.dim() != d_) throw InvalidArgument("solve_backward: state dimension mismatch");
    }

    BsvieSolution run() {
        BsvieSolution sol(p_, M_, n_);
        sol.picard_stats.assign(N_, {});
        const bool keep_z = cfg_.force_materialize_z || N_ <= cfg_.z_storage_cap;
        if (keep_z) sol.materialize_z();

        w_ = ens_.brownian_values(); // (N+1) x M
        // Terminal condition Y^{k,pi}(t_N) = g(t_k, x^pi(T)) for every k.
        y_buf_.assign((N_ + 1) * M_ * n_, 0.0);
        {
            std::vector<double> gv(n_);
            for (std::size_t k = 0; k <= N_; ++k) {
                const double t_k = p_.node(k);
                double* row = y_buf_.data() + k * M_ * n_;
                for (std::size_t m = 0; m < M_; ++m) {
                    pr_.g(t_k, std::span<const double>(x_.value(N_, m), d_), gv);
                    for (std::size_t c = 0; c < n_; ++c) {
                        if (!std::isfinite(gv[c]))
                            throw NumericError("solve_backward: non-finite g at path " +
                                               std::to_string(m));
                        row[m * n_ + c] = gv[c];
                    }
                }
            }
        }
        std::copy_n(y_buf_.data() + N_ * M_ * n_, M_ * n_, sol.y_diag(N_).begin());
        if (obs_) obs_->on_diag(N_, sol.y_diag(N_), w_row(N_));
        if (pr_.depends_on_z) prev_z_.assign(N_, std::vector<CondExpEstimator>(n_));

        std::vector<double> diag_src(M_ * n_), f_vals(M_ * n_), xi(M_ * n_);
        std::vector<double> y_fit(M_ * n_), z_cur(M_ * n_), z_new(M_ * n_), zeta(M_ * n_);
        std::vector<double> comp_scratch, fit_scratch(M_);

        for (std::size_t l = N_; l-- > 0;) {
            const double t_l = p_.node(l);
            StateFeatures feats =
                build_features(feature_map_, t_l, w_row(l), x_.node_values(l), M_, d_);
            FittedDesign design(feats, cfg_.degree, cfg_.ridge);
            // Y^{l,pi}(t_{l+1}) before row l is overwritten.
            std::copy_n(y_buf_.data() + l * M_ * n_, M_ * n_, diag_src.begin());

            for (std::size_t k = 0; k <= l; ++k) {
                std::span<double> y_next(y_buf_.data() + k * M_ * n_, M_ * n_);
                unsigned iters = 0;

                if (!pr_.depends_on_z) {
                    eval_generator(k, l, diag_src, {}, f_vals);
                    build_xi(y_next, f_vals, xi);
                    fit_components(design, xi, y_fit, comp_scratch, fit_scratch, l, k, 'y', 0);
                    build_zeta(l, xi, y_fit, zeta);
                    fit_components(design, zeta, z_cur, comp_scratch, fit_scratch, l, k, 'z', 0);
                } else {
                    iters = picard(design, feats, l, k, y_next, diag_src, f_vals, xi, y_fit, z_cur,
                                   z_new, zeta, comp_scratch, fit_scratch);
                }

                if (obs_) obs_->on_z(k, l, z_cur, w_row(l), ens_.increment(l));
                if (sol.z_materialized()) sol.store_z(k, l, z_cur);
                std::copy(y_fit.begin(), y_fit.end(), y_next.begin());
                if (k == l) {
                    std::copy(y_fit.begin(), y_fit.end(), sol.y_diag(l).begin());
                    if (obs_) obs_->on_diag(l, sol.y_diag(l), w_row(l));
                }
                auto& st = sol.picard_stats[l];
                st.pairs += 1;
                st.iterations += iters;
                st.max_iterations = std::max(st.max_iterations, iters);
            }
        }
        return sol;
    }

private:
    std::span<const double> w_row(std::size_t i) const { return {w_.data() + i * M_, M_}; }

    /// f(t_k, t_l, x^pi(t_l), Y^{l,pi}(t_{l+1}), z) per path. z may be empty
    /// when the generator was declared z-independent (a zero is passed).
    void eval_generator(std::size_t k, std::size_t l, std::span<const double> diag_src,
                        std::span<const double> z, std::span<double> out) {
        const double t_k = p_.node(k), t_l = p_.node(l);
        const double zero[8] = {};
        if (n_ > 8) throw InvalidArgument("solve_backward: dim_y > 8 not supported");
        parallel_for(M_, cfg_.workers, [&](std::size_t m) {
            std::span<const double> zm =
                z.empty() ? std::span<const double>(zero, n_) : z.subspan(m * n_, n_);
            double fv[8];
            pr_.f(t_k, t_l, std::span<const double>(x_.value(l, m), d_),
                  diag_src.subspan(m * n_, n_), zm, std::span<double>(fv, n_));
            for (std::size_t c = 0; c < n_; ++c) {
                if (!std::isfinite(fv[c]))
                    throw NumericError("solve_backward: non-finite f at (k=" + std::to_string(k) +
                                       ", l=" + std::to_string(l) + ", path=" + std::to_string(m) +
                                       ")");
                out[m * n_ + c] = fv[c];
            }
        });
    }

    void build_xi(std::span<const double> y_next, std::span<const double> f_vals,
                  std::span<double> xi) const {
        const double dt = p_.mesh();
        for (std::size_t i = 0; i < y_next.size(); ++i) xi[i] = y_next[i] + f_vals[i] * dt;
    }

    /// Z regressand (dW/dt) * (xi - y_hat): subtracting the fitted
    /// conditional mean leaves the martingale part, which keeps constant
    /// regressands exactly at zero and reduces regression variance.
    void build_zeta(std::size_t l, std::span<const double> xi, std::span<const double> y_fit,
                    std::span<double> zeta) const {
        const double inv_dt = 1.0 / p_.mesh();
        std::span<const double> dw = ens_.increment(l);
        for (std::size_t m = 0; m < M_; ++m) {
            const double wgt = dw[m] * inv_dt;
            for (std::size_t c = 0; c < n_; ++c)
                zeta[m * n_ + c] = wgt * (xi[m * n_ + c] - y_fit[m * n_ + c]);
        }
    }

    void fit_components(const FittedDesign& design, std::span<const double> regressand,
                        std::span<double> fitted, std::vector<double>& comp_scratch,
                        std::vector<double>& fit_scratch, std::size_t l, std::size_t k, char target,
                        unsigned iters, std::vector<CondExpEstimator>* keep = nullptr) {
        for (std::size_t c = 0; c < n_; ++c) {
            std::span<const double> y = detail::component_view(regressand, n_, c, comp_scratch);
            std::span<double> out =
                n_ == 1 ? fitted : std::span<double>(fit_scratch.data(), M_);
            CondExpEstimator est = design.fit(y, out);
            if (n_ > 1) detail::scatter_component(out, n_, c, fitted);
            if (keep) (*keep)[c] = est;
            if (diag_)
                diag_(CondExpDiagRow{l, k, target, est.diagnostics().condition_estimate,
                                     est.diagnostics().residual_rms, iters});
        }
    }

    unsigned picard(const FittedDesign& design, const StateFeatures& feats, std::size_t l,
                    std::size_t k, std::span<const double> y_next, std::span<const double> diag_src,
                    std::vector<double>& f_vals, std::vector<double>& xi, std::vector<double>& y_fit,
                    std::vector<double>& z_cur, std::vector<double>& z_new,
                    std::vector<double>& zeta, std::vector<double>& comp_scratch,
                    std::vector<double>& fit_scratch) {
        // Warm start: previous level's Z^{k,pi}(t_{l+1}) estimator evaluated
        // at the current features; zero at the terminal level.
        if (l == N_ - 1 || !prev_z_[k][0].coefficients().size()) {
            std::fill(z_cur.begin(), z_cur.end(), 0.0);
        } else {
            for (std::size_t c = 0; c < n_; ++c) {
                std::span<double> out = n_ == 1 ? std::span<double>(z_cur)
                                                : std::span<double>(fit_scratch.data(), M_);
                prev_z_[k][c].evaluate(feats, out);
                if (n_ > 1) detail::scatter_component(out, n_, c, z_cur);
            }
        }
        double prev_change = std::numeric_limits<double>::infinity();
        unsigned growth_streak = 0;
        std::vector<CondExpEstimator> z_est(n_);
        for (unsigned it = 1; it <= cfg_.picard_max_iter; ++it) {
            eval_generator(k, l, diag_src, z_cur, f_vals);
            build_xi(y_next, f_vals, xi);
            fit_components(design, xi, y_fit, comp_scratch, fit_scratch, l, k, 'y', it);
            build_zeta(l, xi, y_fit, zeta);
            fit_components(design, zeta, z_new, comp_scratch, fit_scratch, l, k, 'z', it, &z_est);
            const double change = detail::relative_change(z_new, z_cur);
            std::swap(z_cur, z_new);
            if (change <= cfg_.picard_tol) {
                prev_z_[k] = z_est;
                // One more generator pass with the converged Z so the Y
                // update sees the final F_{t_l}-measurable values.
                eval_generator(k, l, diag_src, z_cur, f_vals);
                build_xi(y_next, f_vals, xi);
                fit_components(design, xi, y_fit, comp_scratch, fit_scratch, l, k, 'y', it);
                return it;
            }
            if (change > prev_change) {
                if (++growth_streak >= 3)
                    throw NumericError("picard_step: divergence at (k=" + std::to_string(k) +
                                       ", l=" + std::to_string(l) + "), residual " +
                                       std::to_string(change) + " after " + std::to_string(it) +
                                       " iterations; the mesh is too coarse for this generator");
            } else {
                growth_streak = 0;
            }
            prev_change = change;
        }
        throw NumericError("picard_step: no convergence within " +
                           std::to_string(cfg_.picard_max_iter) + " iterations at (k=" +
                           std::to_string(k) + ", l=" + std::to_string(l) + "), residual " +
                           std::to_string(prev_change));
    }

    const BsvieProblem& pr_;
    const SviePaths& x_;
    const PathEnsemble& ens_;
    const LsmcConfig& cfg_;
    SweepObserver* obs_;
    DiagnosticsSink diag_;
    Partition p_;
    std::size_t N_, M_, n_, d_;
    FeatureMapSpec feature_map_;
    std::vector<double> w_;
    std::vector<double> y_buf_; // (N+1) rows of Y^{k,pi}(t_level) per path
    std::vector<std::vector<CondExpEstimator>> prev_z_;
};

} // namespace detail

/// Backward Euler sweep for the triangular family {(Y^{k,pi}, Z^{k,pi})}
/// over a Monte Carlo ensemble with the LSMC conditional-expectation
/// backend. Regressions at one time level share a single design; memory
/// stays at O(N*M) by keeping only the current Y slice.
inline BsvieSolution solve_backward(const BsvieProblem& pr, const SviePaths& x,
                                    const PathEnsemble& ens, const LsmcConfig& cfg,
                                    SweepObserver* obs = nullptr, DiagnosticsSink diag = {}) {
    detail::LsmcSweep sweep(pr, x, ens, cfg, obs, std::move(diag));
    return sweep.run();
}

// ---------------------------------------------------------------------------
// Exact tree backend.
// ---------------------------------------------------------------------------

/// Backward solution on the binary lattice: node-indexed triangles
/// y[k][l] (size (l+1)*n) for k <= l <= N and z[k][l] for k <= l <= N-1.
struct BsvieTreeSolution {
    Partition partition;
    std::size_t dim_y = 1;
    std::vector<std::vector<std::vector<double>>> y; // y[k][l][j*n+c]
    std::vector<std::vector<std::vector<double>>> z; // z[k][l][j*n+c]
    std::vector<PicardStepStats> picard_stats;

    std::span<const double> y_diag(std::size_t k) const { return y[k][k]; }
};

/// Same sweep with exact lattice expectations. Admissible only when the
/// forward problem is Markovian in the walk value (x = W), in which case
/// the node's walk value substitutes for x^pi(t_l).
inline BsvieTreeSolution solve_backward_tree(const BsvieProblem& pr, const SvieProblem& forward,
                                             const Partition& p, const TreeConfig& cfg = {}) {
    if (!forward.driver_is_state)
        throw InvalidArgument("solve_backward_tree: tree backend requires a problem Markovian in "
                              "the walk value (driver_is_state)");
    if (pr.dim_x != 1)
        throw InvalidArgument("solve_backward_tree: walk state is one-dimensional");
    const std::size_t N = p.steps(), n = pr.dim_y;
    const double dt = p.mesh();
    BinaryTree tree(p);

    BsvieTreeSolution sol;
    sol.partition = p;
    sol.dim_y = n;
    sol.y.assign(N + 1, std::vector<std::vector<double>>(N + 1));
    sol.z.assign(N + 1, std::vector<std::vector<double>>(N + 1));
    sol.picard_stats.assign(N, {});

    std::vector<double> gv(n), fup(n), fdn(n), zj(n), zj_new(n);
    for (std::size_t k = 0; k <= N; ++k) {
        auto& term = sol.y[k][N];
        term.resize((N + 1) * n);
        const double t_k = p.node(k);
        for (std::size_t j = 0; j <= N; ++j) {
            const double xv = tree.node_value(N, j);
            pr.g(t_k, std::span<const double>(&xv, 1), gv);
            for (std::size_t c = 0; c < n; ++c) term[j * n + c] = gv[c];
        }
    }

    for (std::size_t l = N; l-- > 0;) {
        const double t_l = p.node(l);
        const std::vector<double>& diag_next = sol.y[l][l + 1]; // Y^{l,pi}(t_{l+1})
        for (std::size_t k = 0; k <= l; ++k) {
            const double t_k = p.node(k);
            const std::vector<double>& next = sol.y[k][l + 1];
            auto& yl = sol.y[k][l];
            auto& zl = sol.z[k][l];
            yl.resize((l + 1) * n);
            zl.resize((l + 1) * n);
            unsigned worst_iters = 0;
            for (std::size_t j = 0; j <= l; ++j) {
                const double xv = tree.node_value(l, j);
                std::span<const double> x(&xv, 1);
                std::span<const double> y_up(next.data() + (j + 1) * n, n);
                std::span<const double> y_dn(next.data() + j * n, n);
                std::span<const double> diag_up(diag_next.data() + (j + 1) * n, n);
                std::span<const double> diag_dn(diag_next.data() + j * n, n);

                auto combine = [&](std::span<const double> zarg) {
                    pr.f(t_k, t_l, x, diag_up, zarg, fup);
                    pr.f(t_k, t_l, x, diag_dn, zarg, fdn);
                };
                unsigned iters = 0;
                if (!pr.depends_on_z) {
                    std::fill(zj.begin(), zj.end(), 0.0);
                    combine(zj);
                } else {
                    std::fill(zj.begin(), zj.end(), 0.0);
                    double prev_change = std::numeric_limits<double>::infinity();
                    unsigned growth = 0;
                    bool done = false;
                    for (unsigned it = 1; it <= cfg.picard_max_iter; ++it) {
                        combine(zj);
                        double dn2 = 0.0, nn2 = 0.0;
                        for (std::size_t c = 0; c < n; ++c) {
                            const double up = y_up[c] + fup[c] * dt;
                            const double dn = y_dn[c] + fdn[c] * dt;
                            zj_new[c] = (up - dn) / (2.0 * tree.step());
                            const double dd = zj_new[c] - zj[c];
                            dn2 += dd * dd;
                            nn2 += zj_new[c] * zj_new[c];
                        }
                        const double change =
                            std::sqrt(dn2 / n) / std::max(1.0, std::sqrt(nn2 / n));
                        zj = zj_new;
                        if (change <= cfg.picard_tol) {
                            iters = it;
                            done = true;
                            break;
                        }
                        if (change > prev_change) {
                            if (++growth >= 3)
                                throw NumericError("picard_step(tree): divergence at (k=" +
                                                   std::to_string(k) + ", l=" + std::to_string(l) +
                                                   ", node=" + std::to_string(j) + ")");
                        } else {
                            growth = 0;
                        }
                        prev_change = change;
                    }
                    if (!done)
                        throw NumericError("picard_step(tree): no convergence at (k=" +
                                           std::to_string(k) + ", l=" + std::to_string(l) + ")");
                    combine(zj); // final generator values at the converged Z
                }
                for (std::size_t c = 0; c < n; ++c) {
                    const double up = y_up[c] + fup[c] * dt;
                    const double dn = y_dn[c] + fdn[c] * dt;
                    yl[j * n + c] = 0.5 * (up + dn);
                    zl[j * n + c] = (up - dn) / (2.0 * tree.step());
                }
                worst_iters = std::max(worst_iters, iters);
            }
            auto& st = sol.picard_stats[l];
            st.pairs += 1;
            st.iterations += worst_iters;
            st.max_iterations = std::max(st.max_iterations, worst_iters);
        }
    }
    return sol;
}

/// Dispatch helper for the variant backend configuration.
inline bool backend_is_tree(const BackendConfig& cfg) {
    return std::holds_alternative<TreeConfig>(cfg);
}

} // namespace volterra
