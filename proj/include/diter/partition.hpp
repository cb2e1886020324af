#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "diter/graph.hpp"
#include "diter/solver.hpp"

namespace diter {

/// Contiguous intervals [b_k, b_{k+1}) covering [0, N).
class Partition {
public:
    /// Throws std::invalid_argument unless boundaries start at 0 and are
    /// strictly increasing with at least one part.
    explicit Partition(std::vector<NodeId> boundaries);

    std::size_t parts() const { return bounds_.size() - 1; }
    NodeId num_nodes() const { return bounds_.back(); }
    NodeRange range(std::size_t k) const { return {bounds_[k], bounds_[k + 1]}; }
    const std::vector<NodeId>& boundaries() const { return bounds_; }
    /// Index of the part holding node i.
    std::size_t owner(NodeId i) const;

    bool operator==(const Partition&) const = default;

private:
    std::vector<NodeId> bounds_;
};

enum class Strategy { uniform, cost_balanced, adaptive };

const char* to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

Partition uniform_partition(NodeId n, std::size_t k);

/// Diffusion cost of a node: max(1, out-degree).
inline std::uint64_t node_cost(const Graph& g, NodeId j) { return g.is_dangling(j) ? 1 : g.out_degree(j); }

/// Greedy sweep closing each interval once its cost reaches
/// ceil(remaining cost / remaining parts).
Partition cost_balanced_partition(const Graph& g, std::size_t k);
Partition cost_balanced_partition(std::span<const std::uint64_t> costs, std::size_t k);

struct PidLoad {
    double residual = 0.0;
    double ops = 0.0;
};

struct AdaptRule {
    double residual_ratio = 2.0;
    double ops_ratio = 1.2;
    double step = 0.10;
};

/// Two-part boundary adaptation: when both the residual ratio and the
/// operation-count ratio exceed their triggers, the interval of the part with
/// the larger residual shrinks by step * boundary nodes.
Partition adapt_boundary(const Partition& p, std::span<const PidLoad> loads, const AdaptRule& rule = {});

}  // namespace diter
