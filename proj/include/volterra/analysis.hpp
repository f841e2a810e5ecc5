#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "volterra/bsvie.hpp"
#include "volterra/errors.hpp"
#include "volterra/grid.hpp"
#include "volterra/paths.hpp"
#include "volterra/problems.hpp"
#include "volterra/rng.hpp"
#include "volterra/svie.hpp"
#include "volterra/tree.hpp"

namespace volterra {

/// Monte Carlo estimates of the error functionals whose decay the backward
/// scheme guarantees at first order in the mesh:
///   y_error = max_k E|Y(t_k) - Y^{k,pi}(t_k)|^2,
///   z_error = sum_k dt sum_{l>=k} E int_{t_l}^{t_{l+1}} |Z(t_k,s) - Z^{k,pi}(t_l)|^2 ds.
/// The inner cell integral is evaluated by Simpson quadrature with the
/// midpoint Brownian value drawn from the exact bridge law, which captures
/// the within-cell variation of the true Z that the continuous functional
/// integrates over. z_nodes_error is the corner-sampled Riemann variant
/// sum_k dt sum_l dt E|Z(t_k,t_l) - Z^{k,pi}(t_l)|^2; it vanishes exactly
/// on node-identical inputs but misses the within-cell content.
struct ErrorReport {
    double y_error = 0.0;
    double z_error = 0.0;
    double y_stderr = 0.0;
    double z_stderr = 0.0;
    double z_nodes_error = 0.0;
    double z_nodes_stderr = 0.0;
    std::size_t n_steps = 0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    double total() const { return y_error + z_error; }
    double total_stderr() const { return std::sqrt(y_stderr * y_stderr + z_stderr * z_stderr); }
};

/// Streaming accumulator: plug into the backward sweep as an observer so the
/// Z triangle never needs materializing. The y part uses the finalized
/// diagonal rows, the z part consumes each (k, l) slice as it is produced.
class BsvieErrorAccumulator : public SweepObserver {
public:
    BsvieErrorAccumulator(const ClosedFormOracle& oracle, const Partition& p, std::size_t paths,
                          std::size_t dim_y, std::uint64_t seed)
        : oracle_(oracle), p_(p), paths_(paths), n_(dim_y), seed_(seed),
          y_sum_(p.steps() + 1, 0.0), y_sumsq_(p.steps() + 1, 0.0), z_path_(paths, 0.0),
          z_nodes_path_(paths, 0.0), bridge_(paths, 0.0) {
        if (!oracle.valid()) throw InvalidArgument("bsvie_error: missing oracle");
    }

    void on_z(std::size_t k, std::size_t l, std::span<const double> z,
              std::span<const double> w_row, std::span<const double> dw_row) override {
        const double t_k = p_.node(k), t_l = p_.node(l), t_r = p_.node(l + 1);
        const double dt = p_.mesh();
        const double s_mid = t_l + 0.5 * dt;
        if (l != bridge_level_) {
            // One midpoint Brownian value per (path, cell), shared across k:
            // conditional on the endpoints the midpoint is Gaussian with
            // standard deviation sqrt(dt)/2 around the endpoint average.
            const double half_sd = 0.5 * std::sqrt(dt);
            for (std::size_t m = 0; m < paths_; ++m)
                bridge_[m] = half_sd * rng::normal(seed_ ^ 0xB51D9EULL, m, l);
            bridge_level_ = l;
        }
        std::vector<double> zt(n_);
        for (std::size_t m = 0; m < paths_; ++m) {
            const double w_l = w_row[m];
            const double w_r = w_l + dw_row[m];
            const double w_mid = 0.5 * (w_l + w_r) + bridge_[m];
            double e_left = 0.0, e_mid = 0.0, e_right = 0.0;
            oracle_.z_true(t_k, t_l, w_l, zt);
            for (std::size_t c = 0; c < n_; ++c) {
                const double d = zt[c] - z[m * n_ + c];
                e_left += d * d;
            }
            oracle_.z_true(t_k, s_mid, w_mid, zt);
            for (std::size_t c = 0; c < n_; ++c) {
                const double d = zt[c] - z[m * n_ + c];
                e_mid += d * d;
            }
            oracle_.z_true(t_k, t_r, w_r, zt);
            for (std::size_t c = 0; c < n_; ++c) {
                const double d = zt[c] - z[m * n_ + c];
                e_right += d * d;
            }
            z_path_[m] += dt * dt * (e_left + 4.0 * e_mid + e_right) / 6.0;
            z_nodes_path_[m] += dt * dt * e_left;
        }
    }

    void on_diag(std::size_t k, std::span<const double> y, std::span<const double> w_row) override {
        const double t_k = p_.node(k);
        std::vector<double> yt(n_);
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t m = 0; m < paths_; ++m) {
            oracle_.y_true(t_k, w_row[m], yt);
            double d2 = 0.0;
            for (std::size_t c = 0; c < n_; ++c) {
                const double d = yt[c] - y[m * n_ + c];
                d2 += d * d;
            }
            s1 += d2;
            s2 += d2 * d2;
        }
        y_sum_[k] = s1;
        y_sumsq_[k] = s2;
    }

    ErrorReport report() const {
        ErrorReport r;
        r.n_steps = p_.steps();
        r.n_paths = paths_;
        r.seed = seed_;
        const double M = static_cast<double>(paths_);
        for (std::size_t k = 0; k <= p_.steps(); ++k) {
            const double mean = y_sum_[k] / M;
            if (mean >= r.y_error) {
                r.y_error = mean;
                const double var = std::max(0.0, y_sumsq_[k] / M - mean * mean);
                r.y_stderr = std::sqrt(var / M);
            }
        }
        auto reduce = [M](const std::vector<double>& per_path, double& mean_out, double& se_out) {
            double s = 0.0, ss = 0.0;
            for (double v : per_path) {
                s += v;
                ss += v * v;
            }
            mean_out = s / M;
            const double var = std::max(0.0, ss / M - mean_out * mean_out);
            se_out = std::sqrt(var / M);
        };
        reduce(z_path_, r.z_error, r.z_stderr);
        reduce(z_nodes_path_, r.z_nodes_error, r.z_nodes_stderr);
        return r;
    }

private:
    const ClosedFormOracle& oracle_;
    Partition p_;
    std::size_t paths_, n_;
    std::uint64_t seed_;
    std::vector<double> y_sum_, y_sumsq_; // per k: sum and sum of squares of |d|^2
    std::vector<double> z_path_;          // per path: cell-integrated z square sum
    std::vector<double> z_nodes_path_;    // per path: corner-sampled z square sum
    std::vector<double> bridge_;          // midpoint bridge offsets at bridge_level_
    std::size_t bridge_level_ = static_cast<std::size_t>(-1);
};

/// Post-hoc error report for a solution with a materialized Z triangle.
inline ErrorReport bsvie_error(const BsvieSolution& sol, const ClosedFormOracle& oracle,
                               const PathEnsemble& ens) {
    if (!oracle.valid()) throw InvalidArgument("bsvie_error: missing oracle");
    if (!sol.z_materialized())
        throw InvalidArgument("bsvie_error: Z triangle not materialized; use the streaming "
                              "accumulator during the sweep");
    const Partition& p = sol.partition();
    BsvieErrorAccumulator acc(oracle, p, sol.paths(), sol.dim_y(), ens.seed());
    std::vector<double> w = ens.brownian_values();
    const std::size_t M = sol.paths();
    for (std::size_t k = 0; k <= p.steps(); ++k)
        acc.on_diag(k, sol.y_diag(k), std::span<const double>(w.data() + k * M, M));
    for (std::size_t l = 0; l < p.steps(); ++l)
        for (std::size_t k = 0; k <= l; ++k)
            acc.on_z(k, l, sol.z_on_grid(k, l), std::span<const double>(w.data() + l * M, M),
                     ens.increment(l));
    return acc.report();
}

/// Error functional under the walk law for the tree backend, against the
/// same oracle evaluated at node values.
inline ErrorReport bsvie_error_tree(const BsvieTreeSolution& sol, const ClosedFormOracle& oracle) {
    if (!oracle.valid()) throw InvalidArgument("bsvie_error_tree: missing oracle");
    const Partition& p = sol.partition;
    const std::size_t N = p.steps(), n = sol.dim_y;
    BinaryTree tree(p);
    ErrorReport r;
    r.n_steps = N;
    r.n_paths = 0;
    std::vector<double> buf(n);
    for (std::size_t k = 0; k <= N; ++k) {
        std::vector<double> w = binomial_weights(k);
        double e = 0.0;
        for (std::size_t j = 0; j <= k; ++j) {
            oracle.y_true(p.node(k), tree.node_value(k, j), buf);
            double d2 = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
                const double d = buf[c] - sol.y[k][k][j * n + c];
                d2 += d * d;
            }
            e += w[j] * d2;
        }
        r.y_error = std::max(r.y_error, e);
    }
    const double w2 = p.mesh() * p.mesh();
    for (std::size_t k = 0; k < N; ++k)
        for (std::size_t l = k; l < N; ++l) {
            std::vector<double> w = binomial_weights(l);
            double e = 0.0;
            for (std::size_t j = 0; j <= l; ++j) {
                oracle.z_true(p.node(k), p.node(l), tree.node_value(l, j), buf);
                double d2 = 0.0;
                for (std::size_t c = 0; c < n; ++c) {
                    const double d = buf[c] - sol.z[k][l][j * n + c];
                    d2 += d * d;
                }
                e += w[j] * d2;
            }
            r.z_error += w2 * e;
        }
    return r;
}

/// max_i E|x_coarse(t_i) - x_ref(t_i)|^2 over the coarse nodes; the
/// reference must refine the coarse grid with the same underlying paths.
inline double svie_error(const SviePaths& coarse, const SviePaths& reference) {
    if (coarse.paths() != reference.paths())
        throw InvalidArgument("svie_error: path counts differ");
    if (coarse.dim() != reference.dim()) throw InvalidArgument("svie_error: dimensions differ");
    if (coarse.partition().horizon() != reference.partition().horizon())
        throw InvalidArgument("svie_error: horizons differ");
    const std::size_t Nc = coarse.partition().steps(), Nr = reference.partition().steps();
    if (Nr % Nc != 0) throw InvalidArgument("svie_error: reference grid must refine coarse grid");
    const std::size_t stride = Nr / Nc;
    const std::size_t Md = coarse.paths() * coarse.dim();
    double worst = 0.0;
    for (std::size_t i = 0; i <= Nc; ++i) {
        auto a = coarse.node_values(i);
        auto b = reference.node_values(i * stride);
        double s = 0.0;
        for (std::size_t jd = 0; jd < Md; ++jd) {
            const double d = a[jd] - b[jd];
            s += d * d;
        }
        worst = std::max(worst, s / static_cast<double>(coarse.paths()));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Rate fitting.
// ---------------------------------------------------------------------------

struct RateFit {
    std::vector<std::pair<double, double>> points; // (delta, error) actually used
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    double r_squared = std::numeric_limits<double>::quiet_NaN();
    bool degenerate = false;            // all errors zero (nothing to fit)
    std::vector<std::size_t> excluded_n; // N values dropped for noise
};

/// Ordinary least squares of log(error) on log(delta).
inline RateFit fit_loglog(const std::vector<std::pair<double, double>>& points) {
    RateFit fit;
    fit.points = points;
    if (points.empty()) {
        fit.degenerate = true;
        return fit;
    }
    const double n = static_cast<double>(points.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (const auto& [d, e] : points) {
        const double x = std::log(d), y = std::log(e);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double det = n * sxx - sx * sx;
    if (det == 0.0) {
        fit.degenerate = true;
        return fit;
    }
    fit.slope = (n * sxy - sx * sy) / det;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0.0;
    const double mean_y = sy / n;
    double ss_tot = 0.0;
    for (const auto& [d, e] : points) {
        const double x = std::log(d), y = std::log(e);
        const double r = y - (fit.intercept + fit.slope * x);
        ss_res += r * r;
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

// ---------------------------------------------------------------------------
// Convergence studies.
// ---------------------------------------------------------------------------

struct StudyRow {
    std::size_t n_steps = 0;
    double delta = 0.0;
    ErrorReport report;
    ErrorReport refinement; // populated when compare_degree is set
    double picard_avg = 0.0;
    double wall_seconds = 0.0;
};

struct StudyResult {
    std::vector<StudyRow> rows;
    RateFit y_fit, z_fit, total_fit;
    bool has_refinement = false;
};

struct StudyConfig {
    double horizon = 1.0;
    std::vector<std::size_t> n_list;
    std::size_t paths = 1 << 17;
    std::uint64_t seed = 1;
    bool antithetic = false;
    LsmcConfig backend;
    /// Re-run every N with this basis degree as well, exposing residual
    /// regression bias next to the main errors.
    std::optional<unsigned> compare_degree;
};

namespace detail {

/// Shared exclusion rules: points whose MC noise exceeds half the signal
/// make the study inconclusive; noisy-but-usable points (over 20%) are
/// excluded from the fit and reported.
inline RateFit fit_with_exclusions(const std::vector<StudyRow>& rows,
                                   double (*value)(const StudyRow&),
                                   double (*noise)(const StudyRow&)) {
    std::vector<std::pair<double, double>> pts;
    RateFit pre;
    bool any_nonzero = false;
    for (const auto& row : rows) {
        const double v = value(row), s = noise(row);
        if (v <= 0.0) continue;
        any_nonzero = true;
        if (s > 0.5 * v)
            throw NumericError("convergence_study: inconclusive, MC noise exceeds 50% of the "
                               "error at N=" + std::to_string(row.n_steps) +
                               "; increase the path count M");
        if (s > 0.2 * v) {
            pre.excluded_n.push_back(row.n_steps);
            continue;
        }
        pts.emplace_back(row.delta, v);
    }
    if (!any_nonzero || pts.size() < 3) {
        // all-zero errors, or too few usable points after exclusions:
        // flagged as degenerate rather than crashing
        pre.degenerate = true;
        pre.points = pts;
        return pre;
    }
    RateFit fit = fit_loglog(pts);
    fit.excluded_n = pre.excluded_n;
    return fit;
}

} // namespace detail

/// Full pipeline per N on coarsened views of one master ensemble (common
/// random numbers), then log-log fits of y, z and total error against the
/// mesh. Deterministic given (seed, M, n_list, backend).
inline StudyResult convergence_study(const SvieProblem& svie_pr, const BsvieProblem& bsvie_pr,
                                     const ClosedFormOracle& oracle, const StudyConfig& cfg) {
    if (cfg.n_list.size() < 1) throw InvalidArgument("convergence_study: empty N list");
    for (std::size_t i = 1; i < cfg.n_list.size(); ++i)
        if (cfg.n_list[i] <= cfg.n_list[i - 1])
            throw InvalidArgument("convergence_study: N list must be strictly ascending");
    const std::size_t n_max = cfg.n_list.back();
    for (std::size_t n : cfg.n_list)
        if (n_max % n != 0)
            throw InvalidArgument("convergence_study: every N must divide max(N list) for "
                                  "common-path coarsening");
    if (!oracle.valid()) throw InvalidArgument("convergence_study: missing oracle");
    if (bsvie_pr.depends_on_y && bsvie_pr.depends_on_z)
        throw InvalidArgument("convergence_study: the proven rate covers f(t,s,x,y) or "
                              "f(t,s,x,z), not both dependencies together");

    const Partition master_p = make_uniform(cfg.horizon, n_max);
    const PathEnsemble master =
        sample_paths(master_p, cfg.paths, cfg.seed, cfg.antithetic, cfg.backend.workers);

    StudyResult out;
    out.has_refinement = cfg.compare_degree.has_value();
    for (std::size_t n : cfg.n_list) {
        const auto t0 = std::chrono::steady_clock::now();
        const PathEnsemble ens = coarsen(master, n_max / n);
        const SviePaths x = solve_forward(svie_pr, ens, ForwardRoute::Auto, cfg.backend.workers);
        BsvieErrorAccumulator acc(oracle, ens.partition(), ens.paths(), bsvie_pr.dim_y, cfg.seed);
        BsvieSolution sol = solve_backward(bsvie_pr, x, ens, cfg.backend, &acc);
        StudyRow row;
        row.n_steps = n;
        row.delta = ens.partition().mesh();
        row.report = acc.report();
        row.picard_avg = sol.picard_average();
        if (cfg.compare_degree) {
            LsmcConfig alt = cfg.backend;
            alt.degree = *cfg.compare_degree;
            BsvieErrorAccumulator alt_acc(oracle, ens.partition(), ens.paths(), bsvie_pr.dim_y,
                                          cfg.seed);
            solve_backward(bsvie_pr, x, ens, alt, &alt_acc);
            row.refinement = alt_acc.report();
        }
        row.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.rows.push_back(std::move(row));
    }
    out.y_fit = detail::fit_with_exclusions(
        out.rows, [](const StudyRow& r) { return r.report.y_error; },
        [](const StudyRow& r) { return r.report.y_stderr; });
    out.z_fit = detail::fit_with_exclusions(
        out.rows, [](const StudyRow& r) { return r.report.z_error; },
        [](const StudyRow& r) { return r.report.z_stderr; });
    out.total_fit = detail::fit_with_exclusions(
        out.rows, [](const StudyRow& r) { return r.report.total(); },
        [](const StudyRow& r) { return r.report.total_stderr(); });
    return out;
}

struct SvieStudyRow {
    std::size_t n_steps = 0;
    double delta = 0.0;
    double error = 0.0;
    double wall_seconds = 0.0;
};

struct SvieStudyResult {
    std::vector<SvieStudyRow> rows;
    RateFit fit;
    std::size_t n_ref = 0;
};

/// Self-convergence of the forward scheme against a fine-grid reference on
/// common Brownian paths.
inline SvieStudyResult svie_self_convergence(const SvieProblem& pr, double horizon,
                                             const std::vector<std::size_t>& n_list,
                                             std::size_t n_ref, std::size_t paths,
                                             std::uint64_t seed, unsigned workers = 1) {
    if (n_list.empty()) throw InvalidArgument("svie_self_convergence: empty N list");
    for (std::size_t i = 1; i < n_list.size(); ++i)
        if (n_list[i] <= n_list[i - 1])
            throw InvalidArgument("svie_self_convergence: N list must be strictly ascending");
    for (std::size_t n : n_list)
        if (n_ref % n != 0 || n >= n_ref)
            throw InvalidArgument("svie_self_convergence: every N must divide and be below N_ref");

    const PathEnsemble master = sample_paths(make_uniform(horizon, n_ref), paths, seed, false,
                                             workers);
    SviePaths ref_sub;
    {
        SviePaths ref = solve_forward(pr, master, ForwardRoute::Auto, workers);
        ref_sub = ref.subsample(n_ref / n_list.back());
    }
    SvieStudyResult out;
    out.n_ref = n_ref;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t n : n_list) {
        const auto t0 = std::chrono::steady_clock::now();
        const PathEnsemble ens = coarsen(master, n_ref / n);
        const SviePaths x = solve_forward(pr, ens, ForwardRoute::Auto, workers);
        SvieStudyRow row;
        row.n_steps = n;
        row.delta = ens.partition().mesh();
        row.error = svie_error(x, ref_sub);
        row.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (row.error > 0.0) pts.emplace_back(row.delta, row.error);
        out.rows.push_back(row);
    }
    if (pts.size() < 3) {
        out.fit.degenerate = true;
        out.fit.points = pts;
    } else {
        out.fit = fit_loglog(pts);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Regularity spot-checks.
// ---------------------------------------------------------------------------

struct RegularityReport {
    std::vector<std::pair<double, double>> points; // (lag time, mean square increment)
    double slope = std::numeric_limits<double>::quiet_NaN();
};

/// Mean-square increments E|V(t_{i+lag}) - V(t_i)|^2 across node-major rows,
/// fitted log-log against the lag time. A slope near 1 is consistent with
/// the linear-in-|t - t_0| regularity bounds; Brownian paths give exactly 1
/// up to noise and smooth deterministic curves give 2.
inline RegularityReport regularity_check(std::span<const double> values, std::size_t n_nodes,
                                         std::size_t row_width, const Partition& p,
                                         std::span<const std::size_t> lags) {
    if (lags.size() < 2) throw InvalidArgument("regularity_check: insufficient lags (need >= 2)");
    RegularityReport rep;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t lag : lags) {
        if (lag == 0 || lag >= n_nodes)
            throw InvalidArgument("regularity_check: lag out of range");
        double acc = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i + lag < n_nodes; ++i) {
            const double* a = values.data() + i * row_width;
            const double* b = values.data() + (i + lag) * row_width;
            for (std::size_t j = 0; j < row_width; ++j) {
                const double d = b[j] - a[j];
                acc += d * d;
            }
            count += row_width;
        }
        const double msd = acc / static_cast<double>(count);
        rep.points.emplace_back(static_cast<double>(lag) * p.mesh(), msd);
        if (msd > 0.0) pts.emplace_back(static_cast<double>(lag) * p.mesh(), msd);
    }
    if (pts.size() >= 2) rep.slope = fit_loglog(pts).slope;
    return rep;
}

} // namespace volterra
