#pragma once

#include <cstdint>

#include "diter/graph.hpp"

namespace diter::generate {

/// Synthetic web-like digraph: heavy-tailed out-degrees, most links to
/// nearby ids (host locality), the rest biased towards popular low ids.
struct WebParams {
    NodeId n = 1000;
    double avg_degree = 12.0;
    double dangling_fraction = 0.03;
    /// Probability that a link stays within the local window.
    double locality = 0.8;
    NodeId local_window = 1000;
    double degree_exponent = 2.1;
    /// Share of all links emitted by the first half of the ids.
    double front_edge_share = 0.5;
    std::uint64_t seed = 1;
};

Graph web_like(const WebParams& p);

/// Uniformly random digraph with the given mean out-degree and dangling share.
Graph random_graph(NodeId n, double avg_degree, double dangling_fraction, std::uint64_t seed);

}  // namespace diter::generate
