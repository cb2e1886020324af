#include "diter/generate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "diter/rng.hpp"

namespace diter::generate {

namespace {

double scaled_sum(const std::vector<double>& deg, NodeId lo, NodeId hi, double f, NodeId cap) {
    double sum = 0.0;
    for (NodeId j = lo; j < hi; ++j) {
        if (deg[j] > 0.0) sum += std::clamp(std::round(deg[j] * f), 1.0, static_cast<double>(cap));
    }
    return sum;
}

// Scales raw weights of [lo, hi) so that the rounded, clamped degrees sum to
// about total.
void scale_degrees(std::vector<double>& deg, NodeId lo, NodeId hi, double total, NodeId cap) {
    double f_lo = 0.0;
    double f_hi = 1.0;
    while (scaled_sum(deg, lo, hi, f_hi, cap) < total && f_hi < 1e12) f_hi *= 2.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (f_lo + f_hi);
        (scaled_sum(deg, lo, hi, mid, cap) < total ? f_lo : f_hi) = mid;
    }
    for (NodeId j = lo; j < hi; ++j) {
        if (deg[j] > 0.0) deg[j] = std::clamp(std::round(deg[j] * f_hi), 1.0, static_cast<double>(cap));
    }
}

}  // namespace

Graph web_like(const WebParams& p) {
    if (p.n < 2) throw std::invalid_argument("web_like needs at least two nodes");
    SplitMix64 rng(p.seed);
    const NodeId n = p.n;
    const NodeId cap = std::min<NodeId>(n - 1, static_cast<NodeId>(std::max(50.0, 40.0 * p.avg_degree)));

    std::vector<double> deg(n, 0.0);
    for (NodeId j = 0; j < n; ++j) {
        if (rng.bernoulli(p.dangling_fraction)) continue;
        const double u = 1.0 - rng.uniform();
        deg[j] = std::min(std::pow(u, -1.0 / (p.degree_exponent - 1.0)), static_cast<double>(cap));
    }
    const double total = p.avg_degree * n;
    scale_degrees(deg, 0, n / 2, total * p.front_edge_share, cap);
    scale_degrees(deg, n / 2, n, total * (1.0 - p.front_edge_share), cap);

    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(total * 1.1));
    const auto window = static_cast<std::int64_t>(std::max<NodeId>(1, std::min(p.local_window, n - 1)));
    auto draw = [&](NodeId j) -> NodeId {
        if (rng.bernoulli(p.locality)) {
            const auto step = 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(window)));
            std::int64_t t = rng.bernoulli(0.5) ? static_cast<std::int64_t>(j) + step : static_cast<std::int64_t>(j) - step;
            if (t < 0) t = -t;
            if (t >= static_cast<std::int64_t>(n)) t = 2 * static_cast<std::int64_t>(n) - 2 - t;
            return static_cast<NodeId>(std::clamp<std::int64_t>(t, 0, n - 1));
        }
        if (rng.bernoulli(0.5)) {
            const double u = rng.uniform();
            return static_cast<NodeId>(u * u * n);
        }
        return static_cast<NodeId>(rng.below(n));
    };
    std::vector<NodeId> picked;
    for (NodeId j = 0; j < n; ++j) {
        const auto d = static_cast<NodeId>(deg[j]);
        picked.clear();
        for (NodeId e = 0; e < d; ++e) {
            NodeId target = draw(j);
            auto taken = [&](NodeId t) { return std::find(picked.begin(), picked.end(), t) != picked.end(); };
            for (int retry = 0; retry < 8 && taken(target); ++retry) target = draw(j);
            while (taken(target)) target = static_cast<NodeId>(rng.below(n));
            picked.push_back(target);
            edges.push_back({j, target});
        }
    }
    return Graph::from_edges(n, std::move(edges));
}

Graph random_graph(NodeId n, double avg_degree, double dangling_fraction, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<Edge> edges;
    const double live = std::max(1e-9, 1.0 - dangling_fraction);
    for (NodeId j = 0; j < n; ++j) {
        if (rng.bernoulli(dangling_fraction)) continue;
        // Out-degree uniform on [1, 2 avg / live - 1] keeps the overall mean near avg_degree.
        const double hi = std::max(1.0, 2.0 * avg_degree / live - 1.0);
        const auto d = static_cast<NodeId>(1 + rng.below(static_cast<std::uint64_t>(hi)));
        for (NodeId e = 0; e < d; ++e) edges.push_back({j, static_cast<NodeId>(rng.below(n))});
    }
    return Graph::from_edges(n, std::move(edges));
}

}  // namespace diter::generate
