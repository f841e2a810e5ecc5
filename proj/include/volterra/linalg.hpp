#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "volterra/errors.hpp"

namespace volterra {

/// Householder QR of a tall column-major matrix, kept around to solve
/// least-squares problems for many right-hand sides against one design.
/// Reflectors are stored in the factored copy; application and
/// back-substitution are sequential, so results do not depend on threading.
class HouseholderQr {
public:
    HouseholderQr() = default;

    /// a: column-major rows x cols, rows >= cols. Consumed by the factorization.
    HouseholderQr(std::vector<double> a, std::size_t rows, std::size_t cols)
        : a_(std::move(a)), rows_(rows), cols_(cols), tau_(cols) {
        if (rows_ < cols_) throw InvalidArgument("HouseholderQr: rows < cols");
        factor();
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    /// Ratio max|r_jj| / min|r_jj|; infinity for an exactly singular R.
    double condition_estimate() const {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) {
            const double d = std::abs(a_[j * rows_ + j]);
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        if (lo == 0.0) return std::numeric_limits<double>::infinity();
        return hi / lo;
    }

    bool rank_deficient(double rel_tol = 1e-12) const {
        double hi = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) hi = std::max(hi, std::abs(a_[j * rows_ + j]));
        for (std::size_t j = 0; j < cols_; ++j)
            if (std::abs(a_[j * rows_ + j]) <= rel_tol * hi) return true;
        return false;
    }

    /// Least-squares coefficients for one right-hand side (length rows()).
    /// `y` is used as scratch and destroyed.
    std::vector<double> solve(std::span<double> y) const {
        if (y.size() != rows_) throw InvalidArgument("HouseholderQr::solve: rhs length mismatch");
        for (std::size_t j = 0; j < cols_; ++j) {
            const double* col = a_.data() + j * rows_;
            // u has implicit leading 1 at row j; stored tail below the diagonal.
            double dot = y[j];
            for (std::size_t r = j + 1; r < rows_; ++r) dot += col[r] * y[r];
            const double t = tau_[j] * dot;
            y[j] -= t;
            for (std::size_t r = j + 1; r < rows_; ++r) y[r] -= t * col[r];
        }
        std::vector<double> c(cols_);
        for (std::size_t jj = cols_; jj-- > 0;) {
            double s = y[jj];
            for (std::size_t j2 = jj + 1; j2 < cols_; ++j2) s -= a_[j2 * rows_ + jj] * c[j2];
            const double d = a_[jj * rows_ + jj];
            c[jj] = d != 0.0 ? s / d : 0.0;
        }
        return c;
    }

private:
    void factor() {
        for (std::size_t j = 0; j < cols_; ++j) {
            double* col = a_.data() + j * rows_;
            double norm2 = 0.0;
            for (std::size_t r = j; r < rows_; ++r) norm2 += col[r] * col[r];
            const double norm = std::sqrt(norm2);
            if (norm == 0.0) {
                tau_[j] = 0.0;
                col[j] = 0.0;
                continue;
            }
            const double alpha = col[j] >= 0.0 ? -norm : norm;
            const double v0 = col[j] - alpha;
            tau_[j] = -v0 / alpha;
            const double inv_v0 = 1.0 / v0;
            for (std::size_t r = j + 1; r < rows_; ++r) col[r] *= inv_v0;
            col[j] = alpha;
            for (std::size_t j2 = j + 1; j2 < cols_; ++j2) {
                double* col2 = a_.data() + j2 * rows_;
                double dot = col2[j];
                for (std::size_t r = j + 1; r < rows_; ++r) dot += col[r] * col2[r];
                const double t = tau_[j] * dot;
                col2[j] -= t;
                for (std::size_t r = j + 1; r < rows_; ++r) col2[r] -= t * col[r];
            }
        }
    }

    std::vector<double> a_; // factored matrix: R on and above diagonal, reflectors below
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> tau_;
};

/// Dense LU solve with partial pivoting for small square systems.
inline std::vector<double> solve_dense(std::vector<double> a /*row-major n*n*/,
                                       std::vector<double> b) {
    const std::size_t n = b.size();
    if (a.size() != n * n) throw InvalidArgument("solve_dense: shape mismatch");
    std::vector<std::size_t> piv(n);
    for (std::size_t i = 0; i < n; ++i) piv[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a[i * n + k]) > std::abs(a[p * n + k])) p = i;
        if (a[p * n + k] == 0.0) throw NumericError("solve_dense: singular matrix");
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[p * n + j], a[k * n + j]);
            std::swap(b[p], b[k]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a[i * n + k] / a[k * n + k];
            a[i * n + k] = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
            b[i] -= f * b[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= a[ii * n + j] * x[j];
        x[ii] = s / a[ii * n + ii];
    }
    return x;
}

} // namespace volterra
