#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "diter/partition.hpp"
#include "support.hpp"

using namespace diter;
using doctest::Approx;

namespace {

using Bounds = std::vector<NodeId>;

std::uint64_t cost_of(std::span<const std::uint64_t> c, NodeId b, NodeId e) {
    return std::accumulate(c.begin() + b, c.begin() + e, std::uint64_t{0});
}

/// Enumerates every two-part split and picks the first cut whose prefix cost
/// reaches ceil(total / 2); also reports the smallest achievable larger part.
struct TwoSplit {
    NodeId greedy = 0;
    std::uint64_t greedy_worst = 0;
    std::uint64_t optimum_worst = 0;
};

TwoSplit enumerate_two_splits(std::span<const std::uint64_t> c) {
    const auto n = static_cast<NodeId>(c.size());
    const std::uint64_t total = cost_of(c, 0, n);
    const std::uint64_t target = (total + 1) / 2;
    TwoSplit out{0, 0, ~std::uint64_t{0}};
    for (NodeId cut = 1; cut < n; ++cut) {
        const std::uint64_t left = cost_of(c, 0, cut);
        if (out.greedy == 0 && left >= target) out.greedy = cut;
        out.optimum_worst = std::min(out.optimum_worst, std::max(left, total - left));
    }
    if (out.greedy == 0) out.greedy = n - 1;
    const std::uint64_t left = cost_of(c, 0, out.greedy);
    out.greedy_worst = std::max(left, total - left);
    return out;
}

void check_covers(const Partition& p, NodeId n, std::size_t k) {
    REQUIRE(p.parts() == k);
    CHECK(p.boundaries().front() == 0);
    CHECK(p.num_nodes() == n);
    for (std::size_t part = 0; part < k; ++part) CHECK_FALSE(p.range(part).empty());
}

}  // namespace

TEST_CASE("uniform partition examples") {
    CHECK(uniform_partition(10, 2).boundaries() == Bounds{0, 5, 10});
    CHECK(uniform_partition(10, 3).boundaries() == Bounds{0, 4, 7, 10});
    CHECK(uniform_partition(5, 5).boundaries() == Bounds{0, 1, 2, 3, 4, 5});
    CHECK(uniform_partition(7, 1).boundaries() == Bounds{0, 7});
    CHECK_THROWS_AS(uniform_partition(3, 4), std::invalid_argument);
    CHECK_THROWS_AS(uniform_partition(3, 0), std::invalid_argument);
}

TEST_CASE("uniform part sizes differ by at most one") {
    for (NodeId n = 1; n < 80; ++n) {
        for (std::size_t k = 1; k <= n; k += 3) {
            const Partition p = uniform_partition(n, k);
            check_covers(p, n, k);
            NodeId lo = n;
            NodeId hi = 0;
            for (std::size_t part = 0; part < k; ++part) {
                lo = std::min(lo, p.range(part).size());
                hi = std::max(hi, p.range(part).size());
            }
            CHECK(hi - lo <= 1);
            CHECK(lo == n / k);
        }
    }
}

TEST_CASE("cost balanced split of a front-heavy degree list") {
    const std::vector<std::uint64_t> c{4, 4, 1, 1, 1, 1};
    const TwoSplit want = enumerate_two_splits(c);
    CHECK(want.greedy == 2);
    CHECK(want.greedy_worst == 8);
    // 4 | 8 ties with the greedy 8 | 4, so greedy is optimal here
    CHECK(want.optimum_worst == 8);
    CHECK(cost_balanced_partition(c, 2).boundaries() == Bounds{0, want.greedy, 6});
}

TEST_CASE("cost balanced two-splits match the enumerated greedy rule") {
    SplitMix64 rng(9);
    for (int round = 0; round < 200; ++round) {
        std::vector<std::uint64_t> c(2 + rng.below(12));
        for (auto& x : c) x = 1 + rng.below(9);
        CHECK(cost_balanced_partition(c, 2).boundaries()[1] == enumerate_two_splits(c).greedy);
    }
}

TEST_CASE("equal costs give the uniform partition") {
    for (NodeId n : {5u, 12u, 97u}) {
        for (std::size_t k = 1; k <= n; ++k) {
            const std::vector<std::uint64_t> c(n, 3);
            CHECK(cost_balanced_partition(c, k) == uniform_partition(n, k));
        }
    }
    const Graph ring = Graph::from_edges(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}});
    CHECK(cost_balanced_partition(ring, 3) == uniform_partition(6, 3));
}

TEST_CASE("cost balanced parts respect the greedy bound") {
    SplitMix64 rng(12);
    for (int round = 0; round < 40; ++round) {
        const NodeId n = 1 + static_cast<NodeId>(rng.below(400));
        const Graph g = testing::random_digraph(rng, n, 6.0, 0.15);
        const std::size_t k = 1 + rng.below(std::min<NodeId>(n, 32));
        const Partition p = cost_balanced_partition(g, k);
        check_covers(p, n, k);

        std::vector<std::uint64_t> c(n);
        std::uint64_t heaviest = 0;
        for (NodeId j = 0; j < n; ++j) {
            c[j] = node_cost(g, j);
            heaviest = std::max(heaviest, c[j]);
        }
        const double total = static_cast<double>(g.num_edges() + g.dangling().size());
        for (std::size_t part = 0; part < k; ++part) {
            const auto r = p.range(part);
            CHECK(static_cast<double>(cost_of(c, r.begin, r.end)) <= total / k + heaviest);
        }
    }
    CHECK_THROWS_AS(cost_balanced_partition(testing::two_cycle(), 3), std::invalid_argument);
}

TEST_CASE("node cost counts dangling nodes once") {
    const Graph g = Graph::from_edges(3, {{0, 1}, {0, 2}});
    CHECK(node_cost(g, 0) == 2);
    CHECK(node_cost(g, 1) == 1);
}

TEST_CASE("boundary adaptation") {
    const Partition half({0, 50000, 100000});
    const double L = 1e6;
    const std::vector<PidLoad> front_behind{{0.4, 1.5 * L}, {0.1, 1.0 * L}};
    CHECK(adapt_boundary(half, front_behind).boundaries() == Bounds{0, 45000, 100000});

    const std::vector<PidLoad> back_behind{{0.1, 1.0 * L}, {0.4, 1.5 * L}};
    CHECK(adapt_boundary(half, back_behind).boundaries() == Bounds{0, 55000, 100000});

    SUBCASE("triggers unmet leave the partition alone") {
        const std::vector<PidLoad> mild_residual{{0.15, 1.5 * L}, {0.1, 1.0 * L}};
        const std::vector<PidLoad> mild_ops{{0.4, 1.1 * L}, {0.1, 1.0 * L}};
        CHECK(adapt_boundary(half, mild_residual) == half);
        CHECK(adapt_boundary(half, mild_ops) == half);
        CHECK(adapt_boundary(adapt_boundary(half, mild_ops), mild_ops) == half);
    }
    SUBCASE("clamped to keep both parts nonempty") {
        AdaptRule wide;
        wide.step = 0.9;
        CHECK(adapt_boundary(Partition({0, 9, 10}), back_behind, wide).boundaries() == Bounds{0, 9, 10});
        CHECK(adapt_boundary(Partition({0, 6, 10}), back_behind, wide).boundaries() == Bounds{0, 9, 10});
        CHECK(adapt_boundary(Partition({0, 1, 10}), front_behind, wide).boundaries() == Bounds{0, 1, 10});
    }
    SUBCASE("rounds to the nearest node") {
        CHECK(adapt_boundary(Partition({0, 15, 40}), front_behind).boundaries() == Bounds{0, 13, 40});
    }
    SUBCASE("only two parts") {
        const std::vector<PidLoad> three{{1, 1}, {1, 1}, {1, 1}};
        CHECK_THROWS_AS(adapt_boundary(uniform_partition(9, 3), three), std::invalid_argument);
    }
}

TEST_CASE("partition structure and owner lookup") {
    const Partition p({0, 3, 4, 10});
    CHECK(p.owner(0) == 0);
    CHECK(p.owner(2) == 0);
    CHECK(p.owner(3) == 1);
    CHECK(p.owner(4) == 2);
    CHECK(p.owner(9) == 2);
    CHECK_THROWS_AS(p.owner(10), std::out_of_range);
    CHECK_THROWS_AS(Partition({1, 3}), std::invalid_argument);
    CHECK_THROWS_AS(Partition({0, 3, 3}), std::invalid_argument);
    CHECK_THROWS_AS(Partition({0}), std::invalid_argument);

    SplitMix64 rng(1);
    const Partition u = uniform_partition(1000, 7);
    for (int t = 0; t < 200; ++t) {
        const auto i = static_cast<NodeId>(rng.below(1000));
        CHECK(u.range(u.owner(i)).contains(i));
    }
}

TEST_CASE("strategy names") {
    for (Strategy s : {Strategy::uniform, Strategy::cost_balanced, Strategy::adaptive}) {
        CHECK(parse_strategy(to_string(s)) == s);
    }
    CHECK_THROWS_AS(parse_strategy("spectral"), std::invalid_argument);
}
