#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "volterra/errors.hpp"
#include "volterra/linalg.hpp"

namespace volterra {

/// Per-path feature vectors at one time level, row-major (count x dim).
/// Entries must be functions of path information up to that time.
struct StateFeatures {
    std::size_t count = 0;
    std::size_t dim = 0;
    std::vector<double> data;

    std::span<const double> row(std::size_t m) const { return {data.data() + m * dim, dim}; }
};

/// Problem-configurable feature map (t, W(t), x^pi(t)) -> R^dim.
/// The default map is (W(t), x^pi(t)) componentwise.
struct FeatureMapSpec {
    std::size_t dim = 0;
    std::function<void(double t, double w, std::span<const double> x, std::span<double> out)> map;
};

inline FeatureMapSpec default_feature_map(std::size_t dim_x) {
    FeatureMapSpec spec;
    spec.dim = 1 + dim_x;
    spec.map = [dim_x](double, double w, std::span<const double> x, std::span<double> out) {
        out[0] = w;
        for (std::size_t c = 0; c < dim_x; ++c) out[1 + c] = x[c];
    };
    return spec;
}

/// Bounded trigonometric features of the driver, (sin W, cos W). Suited to
/// problems whose coefficients are trigonometric in the state: conditional
/// expectations of low harmonics stay inside the polynomial span of these
/// features, so the regression bias is negligible at any time level.
inline FeatureMapSpec trig_feature_map() {
    FeatureMapSpec spec;
    spec.dim = 2;
    spec.map = [](double, double w, std::span<const double>, std::span<double> out) {
        out[0] = std::sin(w);
        out[1] = std::cos(w);
    };
    return spec;
}

inline StateFeatures build_features(const FeatureMapSpec& spec, double t,
                                    std::span<const double> w_row, std::span<const double> x_row,
                                    std::size_t paths, std::size_t dim_x) {
    StateFeatures f;
    f.count = paths;
    f.dim = spec.dim;
    f.data.resize(paths * spec.dim);
    for (std::size_t m = 0; m < paths; ++m)
        spec.map(t, w_row[m], x_row.subspan(m * dim_x, dim_x),
                 std::span<double>(f.data.data() + m * spec.dim, spec.dim));
    return f;
}

/// Monomial basis of total degree <= degree over the standardized, kept
/// feature coordinates. Exponent tuples are enumerated in graded
/// lexicographic order; index 0 is always the constant.
class PolyBasis {
public:
    PolyBasis() = default;
    PolyBasis(std::size_t dim, unsigned degree) : dim_(dim), degree_(degree) {
        std::vector<unsigned> e(dim_, 0);
        for (unsigned d = 0; d <= degree_; ++d) enumerate(e, 0, d);
        if (dim_ == 0) exponents_ = {{}}; // constant only
    }

    std::size_t size() const { return dim_ == 0 ? 1 : exponents_.size() / std::max<std::size_t>(dim_, 1); }
    std::size_t dim() const { return dim_; }
    unsigned degree() const { return degree_; }

    double evaluate(std::size_t idx, std::span<const double> u) const {
        if (dim_ == 0) return 1.0;
        const unsigned* e = exponents_.data() + idx * dim_;
        double v = 1.0;
        for (std::size_t c = 0; c < dim_; ++c)
            for (unsigned p = 0; p < e[c]; ++p) v *= u[c];
        return v;
    }

private:
    void enumerate(std::vector<unsigned>& e, std::size_t pos, unsigned remaining) {
        if (pos + 1 == dim_ || dim_ == 0) {
            if (dim_ > 0) {
                e[pos] = remaining;
                exponents_.insert(exponents_.end(), e.begin(), e.end());
            }
            return;
        }
        for (unsigned p = 0; p <= remaining; ++p) {
            e[pos] = remaining - p;
            enumerate(e, pos + 1, p);
        }
    }

    std::size_t dim_ = 0;
    unsigned degree_ = 0;
    std::vector<unsigned> exponents_; // flattened size() x dim_
};

/// Affine standardization with duplicate / zero-variance column removal.
/// Raw feature columns that are bitwise identical collapse to one (the
/// default map makes W and x identical columns whenever x = W), and
/// constant columns are dropped entirely: their content lives in the
/// basis constant.
struct FeatureTransform {
    std::vector<std::size_t> kept; // raw column indices
    std::vector<double> mean;      // per kept column
    std::vector<double> scale;     // per kept column, 1/stddev

    std::size_t out_dim() const { return kept.size(); }

    void apply(std::span<const double> raw, std::span<double> out) const {
        for (std::size_t j = 0; j < kept.size(); ++j)
            out[j] = (raw[kept[j]] - mean[j]) * scale[j];
    }
};

inline FeatureTransform make_transform(const StateFeatures& f) {
    FeatureTransform t;
    const std::size_t q = f.dim, M = f.count;
    for (std::size_t j = 0; j < q; ++j) {
        bool duplicate = false;
        for (std::size_t prev : t.kept) {
            bool same = true;
            for (std::size_t m = 0; m < M; ++m)
                if (f.data[m * q + j] != f.data[m * q + prev]) {
                    same = false;
                    break;
                }
            if (same) {
                duplicate = true;
                break;
            }
        }
        if (duplicate) continue;
        double mean = 0.0;
        for (std::size_t m = 0; m < M; ++m) mean += f.data[m * q + j];
        mean /= static_cast<double>(M);
        double var = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            const double d = f.data[m * q + j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(M);
        if (var <= 0.0) continue; // constant column
        t.kept.push_back(j);
        t.mean.push_back(mean);
        t.scale.push_back(1.0 / std::sqrt(var));
    }
    return t;
}

struct FitDiagnostics {
    double condition_estimate = 0.0;
    double residual_rms = 0.0;
    std::size_t basis_size = 0;
};

/// Fitted approximation of E(. | F_t) as a polynomial in standardized
/// features. Deterministic to evaluate; carries its own transform so it can
/// be applied to feature matrices from other time levels.
class CondExpEstimator {
public:
    CondExpEstimator() = default;
    CondExpEstimator(FeatureTransform t, PolyBasis b, std::vector<double> coef, FitDiagnostics d)
        : transform_(std::move(t)), basis_(std::move(b)), coef_(std::move(coef)), diag_(d) {}

    /// Exactly-constant estimator (regressands in the constant span fit with
    /// zero residual and evaluate bitwise to the constant).
    static CondExpEstimator constant(double value, std::size_t raw_dim) {
        FeatureTransform t;
        (void)raw_dim;
        PolyBasis b(0, 0);
        FitDiagnostics d;
        d.basis_size = 1;
        return CondExpEstimator(std::move(t), std::move(b), {value}, d);
    }

    const FitDiagnostics& diagnostics() const { return diag_; }
    const std::vector<double>& coefficients() const { return coef_; }
    std::size_t raw_dim_hint() const { return transform_.kept.empty() ? 0 : 1 + *std::max_element(transform_.kept.begin(), transform_.kept.end()); }

    double evaluate_one(std::span<const double> raw) const {
        if (!transform_.kept.empty() && raw.size() < raw_dim_hint())
            throw InvalidArgument("CondExpEstimator: feature dimension mismatch");
        double u_buf[16];
        const std::size_t q = transform_.out_dim();
        if (q > 16) throw InvalidArgument("CondExpEstimator: too many features");
        transform_.apply(raw, std::span<double>(u_buf, q));
        double acc = 0.0;
        for (std::size_t a = 0; a < coef_.size(); ++a)
            acc += coef_[a] * basis_.evaluate(a, std::span<const double>(u_buf, q));
        return acc;
    }

    void evaluate(const StateFeatures& f, std::span<double> out) const {
        if (f.dim < raw_dim_hint())
            throw InvalidArgument("CondExpEstimator::evaluate: feature dimension mismatch");
        for (std::size_t m = 0; m < f.count; ++m) out[m] = evaluate_one(f.row(m));
    }

private:
    FeatureTransform transform_;
    PolyBasis basis_;
    std::vector<double> coef_;
    FitDiagnostics diag_;
};

/// One time level's regression design, shared by every fit at that level:
/// transform + basis expansion + QR factorization are built once, then each
/// regressand costs one reflector pass and a back-substitution.
class FittedDesign {
public:
    FittedDesign(const StateFeatures& features, unsigned degree, double ridge)
        : paths_(features.count), ridge_(ridge), transform_(make_transform(features)),
          basis_(transform_.out_dim(), degree) {
        const std::size_t B = basis_.size();
        if (paths_ < 2 * B)
            throw NumericError("condexp fit: underdetermined regression, need M >= 2*basis size (M=" +
                               std::to_string(paths_) + ", basis=" + std::to_string(B) + ")");
        rows_ = paths_ + (ridge_ > 0.0 ? B : 0);
        phi_.assign(rows_ * B, 0.0);
        std::vector<double> u(transform_.out_dim());
        for (std::size_t m = 0; m < paths_; ++m) {
            transform_.apply(features.row(m), u);
            for (std::size_t a = 0; a < B; ++a) phi_[a * rows_ + m] = basis_.evaluate(a, u);
        }
        if (ridge_ > 0.0) {
            const double s = std::sqrt(ridge_);
            for (std::size_t a = 0; a < B; ++a) phi_[a * rows_ + paths_ + a] = s;
        }
        qr_ = HouseholderQr(phi_, rows_, B); // factors a copy; phi_ keeps the raw design
        if (ridge_ <= 0.0 && qr_.rank_deficient())
            throw NumericError("condexp fit: rank-deficient design with ridge=0; "
                               "set ridge > 0 to regularize");
    }

    std::size_t paths() const { return paths_; }
    std::size_t basis_size() const { return basis_.size(); }
    const FeatureTransform& transform() const { return transform_; }
    const PolyBasis& basis() const { return basis_; }
    double condition_estimate() const { return qr_.condition_estimate(); }

    /// Raw (unfactored) basis column over the sample rows.
    std::span<const double> basis_column(std::size_t a) const {
        return {phi_.data() + a * rows_, paths_};
    }

    std::vector<double> solve(std::span<const double> y) const {
        std::vector<double> rhs(rows_, 0.0);
        std::copy(y.begin(), y.end(), rhs.begin());
        return qr_.solve(rhs);
    }

    void fitted_values(std::span<const double> coef, std::span<double> out) const {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t a = 0; a < coef.size(); ++a) {
            const double c = coef[a];
            if (c == 0.0) continue;
            const double* col = phi_.data() + a * rows_;
            for (std::size_t m = 0; m < paths_; ++m) out[m] += c * col[m];
        }
    }

    /// Fit one regressand; optionally also writes fitted values (length M).
    CondExpEstimator fit(std::span<const double> y, std::span<double> fitted = {}) const {
        if (y.size() != paths_) throw InvalidArgument("condexp fit: regressand length mismatch");
        // Constants fit exactly; this keeps all-trivial problems bitwise exact.
        const double first = y[0];
        bool is_const = true;
        for (std::size_t m = 1; m < paths_; ++m)
            if (y[m] != first) {
                is_const = false;
                break;
            }
        if (is_const) {
            if (!fitted.empty()) std::fill(fitted.begin(), fitted.end(), first);
            return CondExpEstimator::constant(first, transform_.kept.size());
        }
        std::vector<double> coef = solve(y);
        std::vector<double> local;
        std::span<double> fv = fitted;
        if (fv.empty()) {
            local.resize(paths_);
            fv = local;
        }
        fitted_values(coef, fv);
        double rss = 0.0;
        for (std::size_t m = 0; m < paths_; ++m) {
            const double r = y[m] - fv[m];
            rss += r * r;
        }
        FitDiagnostics d;
        d.condition_estimate = qr_.condition_estimate();
        d.residual_rms = std::sqrt(rss / static_cast<double>(paths_));
        d.basis_size = basis_.size();
        return CondExpEstimator(transform_, basis_, std::move(coef), d);
    }

private:
    std::size_t paths_ = 0;
    std::size_t rows_ = 0;
    double ridge_ = 0.0;
    FeatureTransform transform_;
    PolyBasis basis_;
    std::vector<double> phi_; // raw design, column-major rows_ x B
    HouseholderQr qr_;
};

/// Least-squares Monte Carlo fit of E(regressand | features) with ridge
/// stabilization; features are standardized before the polynomial expansion.
inline CondExpEstimator fit_condexp(std::span<const double> regressand,
                                    const StateFeatures& features, double ridge,
                                    unsigned degree = 3) {
    if (regressand.size() != features.count)
        throw InvalidArgument("fit_condexp: regressand/feature count mismatch");
    FittedDesign design(features, degree, ridge);
    return design.fit(regressand);
}

} // namespace volterra
