#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "volterra/analysis.hpp"
#include "volterra/bsvie.hpp"
#include "volterra/errors.hpp"
#include "volterra/svie.hpp"

namespace volterra {

/// Shortest round-trip decimal formatting; snprintf with the C locale keeps
/// output byte-identical across runs.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : path_(path), f_(std::fopen(path.c_str(), "wb")) {
        if (!f_) throw IoError("cannot open " + path + " for writing");
    }
    ~CsvWriter() {
        if (f_) std::fclose(f_);
    }
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void line(const std::string& s) {
        if (std::fputs(s.c_str(), f_) == EOF || std::fputc('\n', f_) == EOF)
            throw IoError("short write to " + path_);
    }
    void close() {
        if (f_ && std::fclose(f_) != 0) {
            f_ = nullptr;
            throw IoError("close failed for " + path_);
        }
        f_ = nullptr;
    }

private:
    std::string path_;
    std::FILE* f_;
};

struct NodeStats {
    double mean = 0.0;
    double variance = 0.0;
    double q05 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q95 = 0.0;
};

inline NodeStats node_stats(std::vector<double> column) {
    NodeStats s;
    const std::size_t M = column.size();
    double mean = 0.0;
    for (double v : column) mean += v;
    mean /= static_cast<double>(M);
    double var = 0.0;
    for (double v : column) var += (v - mean) * (v - mean);
    s.mean = mean;
    s.variance = M > 1 ? var / static_cast<double>(M - 1) : 0.0;
    auto quantile = [&](double q) {
        const std::size_t idx = std::min(M - 1, static_cast<std::size_t>(q * static_cast<double>(M)));
        std::nth_element(column.begin(), column.begin() + idx, column.end());
        return column[idx];
    };
    s.q05 = quantile(0.05);
    s.q25 = quantile(0.25);
    s.q50 = quantile(0.50);
    s.q75 = quantile(0.75);
    s.q95 = quantile(0.95);
    return s;
}

/// Per-node ensemble statistics of a forward solution.
inline void write_svie_stats_csv(const std::string& path, const SviePaths& x) {
    CsvWriter w(path);
    w.line("i,t,component,mean,variance,q05,q25,q50,q75,q95");
    const std::size_t M = x.paths(), d = x.dim();
    std::vector<double> col(M);
    for (std::size_t i = 0; i <= x.partition().steps(); ++i) {
        auto row = x.node_values(i);
        for (std::size_t c = 0; c < d; ++c) {
            for (std::size_t m = 0; m < M; ++m) col[m] = row[m * d + c];
            const NodeStats s = node_stats(col);
            w.line(std::to_string(i) + "," + fmt_double(x.partition().node(i)) + "," +
                   std::to_string(c) + "," + fmt_double(s.mean) + "," + fmt_double(s.variance) +
                   "," + fmt_double(s.q05) + "," + fmt_double(s.q25) + "," + fmt_double(s.q50) +
                   "," + fmt_double(s.q75) + "," + fmt_double(s.q95));
        }
    }
    w.close();
}

/// Per-node ensemble statistics of the diagonal process Y^{k,pi}(t_k).
inline void write_ydiag_stats_csv(const std::string& path, const BsvieSolution& sol) {
    CsvWriter w(path);
    w.line("k,t,component,mean,variance,q05,q25,q50,q75,q95");
    const std::size_t M = sol.paths(), n = sol.dim_y();
    std::vector<double> col(M);
    for (std::size_t k = 0; k <= sol.partition().steps(); ++k) {
        auto row = sol.y_diag(k);
        for (std::size_t c = 0; c < n; ++c) {
            for (std::size_t m = 0; m < M; ++m) col[m] = row[m * n + c];
            const NodeStats s = node_stats(col);
            w.line(std::to_string(k) + "," + fmt_double(sol.partition().node(k)) + "," +
                   std::to_string(c) + "," + fmt_double(s.mean) + "," + fmt_double(s.variance) +
                   "," + fmt_double(s.q05) + "," + fmt_double(s.q25) + "," + fmt_double(s.q50) +
                   "," + fmt_double(s.q75) + "," + fmt_double(s.q95));
        }
    }
    w.close();
}

/// Z triangle dump for selected paths (materialized solutions only).
inline void write_z_triangle_csv(const std::string& path, const BsvieSolution& sol,
                                 std::size_t max_paths = 4) {
    CsvWriter w(path);
    w.line("k,l,path,component,value");
    const std::size_t n = sol.dim_y();
    const std::size_t mp = std::min(max_paths, sol.paths());
    for (std::size_t l = 0; l < sol.partition().steps(); ++l)
        for (std::size_t k = 0; k <= l; ++k) {
            auto z = sol.z_on_grid(k, l);
            for (std::size_t m = 0; m < mp; ++m)
                for (std::size_t c = 0; c < n; ++c)
                    w.line(std::to_string(k) + "," + std::to_string(l) + "," + std::to_string(m) +
                           "," + std::to_string(c) + "," + fmt_double(z[m * n + c]));
        }
    w.close();
}

/// Study schema shared by the CLI and the acceptance suite. Wall times are
/// written as 0 unless timings are requested, so identical configurations
/// produce byte-identical files.
inline void write_study_csv(const std::string& path, const StudyResult& study,
                            bool include_timings) {
    CsvWriter w(path);
    w.line("N,delta,y_error,y_stderr,z_error,z_stderr,total,picard_avg_iters,wall_time_s");
    for (const auto& row : study.rows) {
        const double wall = include_timings ? row.wall_seconds : 0.0;
        w.line(std::to_string(row.n_steps) + "," + fmt_double(row.delta) + "," +
               fmt_double(row.report.y_error) + "," + fmt_double(row.report.y_stderr) + "," +
               fmt_double(row.report.z_error) + "," + fmt_double(row.report.z_stderr) + "," +
               fmt_double(row.report.total()) + "," + fmt_double(row.picard_avg) + "," +
               fmt_double(wall));
    }
    w.close();
}

/// Basis-refinement companion table: main-degree and comparison-degree
/// errors side by side, exposing residual regression bias per N.
inline void write_study_refinement_csv(const std::string& path, const StudyResult& study,
                                       unsigned main_degree, unsigned alt_degree) {
    CsvWriter w(path);
    w.line("N,delta,degree,y_error,z_error,total");
    for (const auto& row : study.rows) {
        w.line(std::to_string(row.n_steps) + "," + fmt_double(row.delta) + "," +
               std::to_string(main_degree) + "," + fmt_double(row.report.y_error) + "," +
               fmt_double(row.report.z_error) + "," + fmt_double(row.report.total()));
        w.line(std::to_string(row.n_steps) + "," + fmt_double(row.delta) + "," +
               std::to_string(alt_degree) + "," + fmt_double(row.refinement.y_error) + "," +
               fmt_double(row.refinement.z_error) + "," + fmt_double(row.refinement.total()));
    }
    w.close();
}

inline void write_svie_study_csv(const std::string& path, const SvieStudyResult& study,
                                 bool include_timings) {
    CsvWriter w(path);
    w.line("N,delta,error,wall_time_s");
    for (const auto& row : study.rows) {
        const double wall = include_timings ? row.wall_seconds : 0.0;
        w.line(std::to_string(row.n_steps) + "," + fmt_double(row.delta) + "," +
               fmt_double(row.error) + "," + fmt_double(wall));
    }
    w.close();
}

/// Per-(k,l) regression diagnostics collected from the backward sweep.
inline void write_diagnostics_csv(const std::string& path,
                                  const std::vector<CondExpDiagRow>& rows) {
    CsvWriter w(path);
    w.line("l,k,target,condition_estimate,residual_rms,picard_iterations");
    for (const auto& r : rows)
        w.line(std::to_string(r.level) + "," + std::to_string(r.k) + "," + std::string(1, r.target) +
               "," + fmt_double(r.condition_estimate) + "," + fmt_double(r.residual_rms) + "," +
               std::to_string(r.picard_iterations));
    w.close();
}

} // namespace volterra
