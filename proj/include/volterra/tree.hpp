#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "volterra/errors.hpp"
#include "volterra/grid.hpp"

namespace volterra {

/// Recombining binary random walk on a uniform partition: level l has l+1
/// nodes, node (l, j) carries walk value (2j - l) * sqrt(dt), and each node
/// branches +-sqrt(dt) with probability 1/2. Conditional expectations on
/// this lattice are exact, which makes it the reference backend for
/// problems Markovian in the walk value.
class BinaryTree {
public:
    explicit BinaryTree(Partition p) : partition_(p), step_(std::sqrt(p.mesh())) {}

    const Partition& partition() const { return partition_; }
    double step() const { return step_; }
    std::size_t levels() const { return partition_.steps() + 1; }
    std::size_t level_size(std::size_t level) const { return level + 1; }

    double node_value(std::size_t level, std::size_t j) const {
        return (2.0 * static_cast<double>(j) - static_cast<double>(level)) * step_;
    }

private:
    Partition partition_;
    double step_;
};

/// E(payoff | node) one level down: value at node j is the plain average of
/// its two children. Preserves constants and linearity exactly.
inline std::vector<double> tree_expectation(const BinaryTree& /*tree*/, std::size_t level,
                                            std::span<const double> payoff) {
    if (payoff.size() != level + 2)
        throw InvalidArgument("tree_expectation: payoff length must be level+2");
    std::vector<double> out(level + 1);
    for (std::size_t j = 0; j <= level; ++j) out[j] = 0.5 * (payoff[j] + payoff[j + 1]);
    return out;
}

/// E((dW/dt) * payoff | node): the walk increment is +-sqrt(dt), so the
/// weighted average collapses to a scaled child difference.
inline std::vector<double> tree_z_expectation(const BinaryTree& tree, std::size_t level,
                                              std::span<const double> payoff) {
    if (payoff.size() != level + 2)
        throw InvalidArgument("tree_z_expectation: payoff length must be level+2");
    std::vector<double> out(level + 1);
    const double denom = 2.0 * tree.step();
    for (std::size_t j = 0; j <= level; ++j) out[j] = (payoff[j + 1] - payoff[j]) / denom;
    return out;
}

/// Binomial(level, 1/2) node probabilities; exact in double up to level ~50.
inline std::vector<double> binomial_weights(std::size_t level) {
    std::vector<double> w(level + 1, 0.0);
    w[0] = 1.0;
    for (std::size_t l = 1; l <= level; ++l)
        for (std::size_t j = l; j-- > 0;) {
            w[j + 1] += w[j];
        }
    const double scale = std::ldexp(1.0, -static_cast<int>(level));
    for (double& v : w) v *= scale;
    return w;
}

} // namespace volterra
