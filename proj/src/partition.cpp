#include "diter/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace diter {

Partition::Partition(std::vector<NodeId> boundaries) : bounds_(std::move(boundaries)) {
    if (bounds_.size() < 2 || bounds_.front() != 0) {
        throw std::invalid_argument("partition boundaries must start at 0 and hold at least one part");
    }
    for (std::size_t k = 1; k < bounds_.size(); ++k) {
        if (bounds_[k] <= bounds_[k - 1]) throw std::invalid_argument("partition boundaries must strictly increase");
    }
}

std::size_t Partition::owner(NodeId i) const {
    if (i >= num_nodes()) throw std::out_of_range("node outside partition");
    return static_cast<std::size_t>(std::upper_bound(bounds_.begin(), bounds_.end(), i) - bounds_.begin()) - 1;
}

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::uniform: return "uniform";
        case Strategy::cost_balanced: return "cb";
        case Strategy::adaptive: return "adaptive";
    }
    return "?";
}

Strategy parse_strategy(std::string_view s) {
    if (s == "uniform") return Strategy::uniform;
    if (s == "cb") return Strategy::cost_balanced;
    if (s == "adaptive") return Strategy::adaptive;
    throw std::invalid_argument("unknown partition strategy '" + std::string(s) + "'");
}

namespace {

void check_parts(NodeId n, std::size_t k) {
    if (k == 0) throw std::invalid_argument("part count must be >= 1");
    if (k > n) {
        throw std::invalid_argument("cannot split " + std::to_string(n) + " nodes into " + std::to_string(k) +
                                    " parts");
    }
}

}  // namespace

Partition uniform_partition(NodeId n, std::size_t k) {
    check_parts(n, k);
    std::vector<NodeId> b{0};
    const NodeId base = static_cast<NodeId>(n / k);
    const NodeId extra = static_cast<NodeId>(n % k);
    for (std::size_t part = 0; part < k; ++part) b.push_back(b.back() + base + (part < extra ? 1 : 0));
    return Partition(std::move(b));
}

Partition cost_balanced_partition(std::span<const std::uint64_t> costs, std::size_t k) {
    const NodeId n = static_cast<NodeId>(costs.size());
    check_parts(n, k);
    std::uint64_t remaining = 0;
    for (auto c : costs) remaining += c;

    std::vector<NodeId> b{0};
    NodeId i = 0;
    for (std::size_t parts_left = k; parts_left > 1; --parts_left) {
        const std::uint64_t target = (remaining + parts_left - 1) / parts_left;
        // Leave at least one node for every later part.
        const NodeId last_allowed = n - static_cast<NodeId>(parts_left - 1);
        std::uint64_t acc = 0;
        do {
            acc += costs[i++];
        } while (acc < target && i < last_allowed);
        remaining -= acc;
        b.push_back(i);
    }
    b.push_back(n);
    return Partition(std::move(b));
}

Partition cost_balanced_partition(const Graph& g, std::size_t k) {
    std::vector<std::uint64_t> costs(g.num_nodes());
    for (NodeId j = 0; j < g.num_nodes(); ++j) costs[j] = node_cost(g, j);
    return cost_balanced_partition(costs, k);
}

namespace {

double ratio(double a, double b) {
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    if (lo <= 0.0) return hi > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    return hi / lo;
}

}  // namespace

Partition adapt_boundary(const Partition& p, std::span<const PidLoad> loads, const AdaptRule& rule) {
    if (p.parts() != 2 || loads.size() != 2) {
        throw std::invalid_argument("boundary adaptation is only defined for two parts");
    }
    if (ratio(loads[0].residual, loads[1].residual) <= rule.residual_ratio ||
        ratio(loads[0].ops, loads[1].ops) <= rule.ops_ratio) {
        return p;
    }
    const NodeId n = p.num_nodes();
    const NodeId mid = p.boundaries()[1];
    const auto delta = static_cast<std::int64_t>(std::llround(rule.step * mid));
    std::int64_t moved = loads[0].residual > loads[1].residual ? static_cast<std::int64_t>(mid) - delta
                                                               : static_cast<std::int64_t>(mid) + delta;
    moved = std::clamp<std::int64_t>(moved, 1, static_cast<std::int64_t>(n) - 1);
    return Partition({0, static_cast<NodeId>(moved), n});
}

}  // namespace diter
