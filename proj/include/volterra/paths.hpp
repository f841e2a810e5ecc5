#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "volterra/errors.hpp"
#include "volterra/grid.hpp"
#include "volterra/parallel.hpp"
#include "volterra/rng.hpp"

namespace volterra {

/// Seeded ensemble of Brownian increments on a uniform partition.
///
/// Storage is step-major: increment(i) is the contiguous slice of
/// W(t_{i+1}) - W(t_i) across all M paths. Each path draws from its own
/// counter-based stream keyed on (seed, path), so the ensemble is
/// bitwise-reproducible for any worker count.
class PathEnsemble {
public:
    PathEnsemble() = default;
    PathEnsemble(Partition p, std::size_t M, std::uint64_t seed, bool antithetic,
                 std::vector<double> increments)
        : partition_(p), paths_(M), seed_(seed), antithetic_(antithetic),
          increments_(std::move(increments)) {}

    const Partition& partition() const { return partition_; }
    std::size_t paths() const { return paths_; }
    std::uint64_t seed() const { return seed_; }
    bool antithetic() const { return antithetic_; }

    std::span<const double> increment(std::size_t step) const {
        return {increments_.data() + step * paths_, paths_};
    }
    std::span<const double> raw() const { return increments_; }

    /// W(t_i) across paths for every node, by left-to-right prefix sums.
    /// Row i holds W(t_i); row 0 is identically zero.
    std::vector<double> brownian_values() const {
        const std::size_t N = partition_.steps();
        std::vector<double> w((N + 1) * paths_, 0.0);
        for (std::size_t i = 0; i < N; ++i) {
            const double* dw = increments_.data() + i * paths_;
            const double* prev = w.data() + i * paths_;
            double* next = w.data() + (i + 1) * paths_;
            for (std::size_t m = 0; m < paths_; ++m) next[m] = prev[m] + dw[m];
        }
        return w;
    }

    /// Terminal values W(T) per path.
    std::vector<double> terminal_values() const {
        std::vector<double> w(paths_, 0.0);
        for (std::size_t i = 0; i < partition_.steps(); ++i) {
            const double* dw = increments_.data() + i * paths_;
            for (std::size_t m = 0; m < paths_; ++m) w[m] += dw[m];
        }
        return w;
    }

private:
    Partition partition_;
    std::size_t paths_ = 0;
    std::uint64_t seed_ = 0;
    bool antithetic_ = false;
    std::vector<double> increments_; // N x M, step-major
};

/// Draws M Brownian paths on `p`. With antithetic pairing, path 2j+1 is
/// the elementwise negation of path 2j and M must be even.
inline PathEnsemble sample_paths(const Partition& p, std::size_t M, std::uint64_t seed,
                                 bool antithetic = false, unsigned workers = 1) {
    if (M < 1) throw InvalidArgument("sample_paths: M must be >= 1");
    if (antithetic && (M % 2) != 0)
        throw InvalidArgument("sample_paths: antithetic sampling needs even M");
    const std::size_t N = p.steps();
    const double sqrt_dt = std::sqrt(p.mesh());
    std::vector<double> inc(N * M);
    parallel_for(M, workers, [&](std::size_t m) {
        if (antithetic && (m % 2) == 1) return;
        for (std::size_t i = 0; i < N; ++i)
            inc[i * M + m] = sqrt_dt * rng::normal(seed, m, i);
    });
    if (antithetic) {
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t m = 1; m < M; m += 2) inc[i * M + m] = -inc[i * M + m - 1];
    }
    return PathEnsemble(p, M, seed, antithetic, std::move(inc));
}

/// Sums blocks of `factor` fine increments into one coarse increment,
/// keeping the same underlying Brownian paths (common random numbers).
inline PathEnsemble coarsen(const PathEnsemble& e, std::size_t factor) {
    if (factor == 0 || e.partition().steps() % factor != 0)
        throw InvalidArgument("coarsen: factor must divide N");
    if (factor == 1) return e;
    const std::size_t Nc = e.partition().steps() / factor;
    const std::size_t M = e.paths();
    Partition coarse = make_uniform(e.partition().horizon(), Nc);
    std::vector<double> inc(Nc * M, 0.0);
    for (std::size_t j = 0; j < Nc; ++j) {
        double* out = inc.data() + j * M;
        for (std::size_t s = 0; s < factor; ++s) {
            std::span<const double> fine = e.increment(j * factor + s);
            for (std::size_t m = 0; m < M; ++m) out[m] += fine[m];
        }
    }
    return PathEnsemble(coarse, M, e.seed(), e.antithetic(), std::move(inc));
}

// ---------------------------------------------------------------------------
// Binary dump/load: header (magic, version, T, N, M, seed, flags) followed by
// the step-major increment block as little-endian float64.
// ---------------------------------------------------------------------------

namespace detail {
inline constexpr std::uint32_t kEnsembleMagic = 0x56504E53u; // "SNPV" little-endian
inline constexpr std::uint32_t kEnsembleVersion = 1u;
static_assert(std::endian::native == std::endian::little,
              "ensemble binary format assumes a little-endian host");
} // namespace detail

inline void dump_ensemble(const PathEnsemble& e, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("dump_ensemble: cannot open " + path);
    auto put = [&](const void* p, std::size_t n) {
        if (std::fwrite(p, 1, n, f) != n) {
            std::fclose(f);
            throw IoError("dump_ensemble: short write to " + path);
        }
    };
    const std::uint32_t magic = detail::kEnsembleMagic, version = detail::kEnsembleVersion;
    const double T = e.partition().horizon();
    const std::uint64_t N = e.partition().steps(), M = e.paths(), seed = e.seed();
    const std::uint64_t flags = e.antithetic() ? 1u : 0u;
    put(&magic, 4);
    put(&version, 4);
    put(&T, 8);
    put(&N, 8);
    put(&M, 8);
    put(&seed, 8);
    put(&flags, 8);
    put(e.raw().data(), e.raw().size() * sizeof(double));
    if (std::fclose(f) != 0) throw IoError("dump_ensemble: close failed for " + path);
}

inline PathEnsemble load_ensemble(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw IoError("load_ensemble: cannot open " + path);
    auto get = [&](void* p, std::size_t n) {
        if (std::fread(p, 1, n, f) != n) {
            std::fclose(f);
            throw IoError("load_ensemble: truncated file " + path);
        }
    };
    std::uint32_t magic = 0, version = 0;
    double T = 0;
    std::uint64_t N = 0, M = 0, seed = 0, flags = 0;
    get(&magic, 4);
    get(&version, 4);
    if (magic != detail::kEnsembleMagic) {
        std::fclose(f);
        throw IoError("load_ensemble: bad magic in " + path);
    }
    if (version != detail::kEnsembleVersion) {
        std::fclose(f);
        throw IoError("load_ensemble: unsupported version in " + path);
    }
    get(&T, 8);
    get(&N, 8);
    get(&M, 8);
    get(&seed, 8);
    get(&flags, 8);
    std::vector<double> inc(N * M);
    get(inc.data(), inc.size() * sizeof(double));
    std::fclose(f);
    Partition p = make_uniform(T, static_cast<std::size_t>(N));
    return PathEnsemble(p, static_cast<std::size_t>(M), seed, (flags & 1u) != 0, std::move(inc));
}

} // namespace volterra
