#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "volterra/errors.hpp"

namespace volterra {

/// Uniform partition 0 = t_0 < t_1 < ... < t_N = T with mesh T/N <= 1.
/// Nodes are computed as (i*T)/N, never by cumulative summation, so they
/// are bitwise-reproducible; the endpoint is pinned to T exactly.
class Partition {
public:
    Partition() = default;

    double horizon() const { return horizon_; }
    std::size_t steps() const { return steps_; }
    double mesh() const { return mesh_; }

    double node(std::size_t i) const {
        return i == steps_ ? horizon_
                           : (static_cast<double>(i) * horizon_) / static_cast<double>(steps_);
    }

    std::vector<double> nodes() const {
        std::vector<double> out(steps_ + 1);
        for (std::size_t i = 0; i <= steps_; ++i) out[i] = node(i);
        return out;
    }

    friend Partition make_uniform(double T, std::size_t N);

private:
    Partition(double T, std::size_t N) : horizon_(T), steps_(N), mesh_(T / static_cast<double>(N)) {}

    double horizon_ = 1.0;
    std::size_t steps_ = 1;
    double mesh_ = 1.0;
};

inline Partition make_uniform(double T, std::size_t N) {
    if (!(T > 0.0) || !std::isfinite(T))
        throw InvalidArgument("make_uniform: horizon T must be positive and finite");
    if (N < 1)
        throw InvalidArgument("make_uniform: step count N must be >= 1");
    if (T / static_cast<double>(N) > 1.0)
        throw InvalidArgument("make_uniform: mesh T/N must be <= 1, got T=" + std::to_string(T) +
                              ", N=" + std::to_string(N));
    return Partition(T, N);
}

/// Index of the half-open cell [t_i, t_{i+1}) containing t; t = T maps to
/// N-1 so that integrands of the form Z(tau(s)) are total on [0, T].
inline std::size_t pi_index(const Partition& p, double t) {
    if (!(t >= 0.0) || !(t <= p.horizon()))
        throw InvalidArgument("pi_index: t must lie in [0, T]");
    const std::size_t N = p.steps();
    if (t >= p.horizon()) return N - 1;
    auto fi = std::floor(t / p.mesh());
    std::size_t i = fi <= 0.0 ? 0 : static_cast<std::size_t>(fi);
    if (i > N - 1) i = N - 1;
    // One-step corrections against floating-point edge effects, so that
    // node(i) <= t < node(i+1) holds exactly.
    while (i > 0 && t < p.node(i)) --i;
    while (i + 1 <= N - 1 && t >= p.node(i + 1)) ++i;
    return i;
}

inline double tau(const Partition& p, double t) { return p.node(pi_index(p, t)); }

} // namespace volterra
