#pragma once

#include <numeric>
#include <vector>

#include "diter/generate.hpp"
#include "diter/graph.hpp"
#include "diter/rng.hpp"

namespace diter::testing {

inline Graph two_cycle() { return Graph::from_edges(2, {{0, 1}, {1, 0}}); }

/// Node 0 points at nodes 1..leaves, which point back at 0.
inline Graph star(NodeId leaves) {
    std::vector<Edge> e;
    for (NodeId i = 1; i <= leaves; ++i) {
        e.push_back({0, i});
        e.push_back({i, 0});
    }
    return Graph::from_edges(leaves + 1, e);
}

/// Random digraph with duplicate draws and a share of dangling nodes.
inline Graph random_digraph(SplitMix64& rng, NodeId n, double mean_degree, double dangling_share) {
    std::vector<Edge> e;
    for (NodeId j = 0; j < n; ++j) {
        if (rng.bernoulli(dangling_share)) continue;
        const auto d = 1 + rng.below(static_cast<std::uint64_t>(2.0 * mean_degree));
        for (std::uint64_t t = 0; t < d; ++t) e.push_back({j, static_cast<NodeId>(rng.below(n))});
    }
    return Graph::from_edges(n, e);
}

/// Web-like stand-in with the link and dangling densities of the crawl
/// samples (1000 or 100000 nodes).
inline generate::WebParams crawl_like(NodeId n) {
    generate::WebParams p;
    p.n = n;
    p.locality = 0.9;
    p.seed = 7;
    if (n <= 1000) {
        p.avg_degree = 12.935;
        p.dangling_fraction = 0.041;
        p.local_window = 50;
    } else {
        p.avg_degree = 31.41476;
        p.dangling_fraction = 0.02729;
        p.local_window = 1000;
    }
    return p;
}

inline double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace diter::testing
