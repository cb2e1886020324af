#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "diter/oracle.hpp"
#include "diter/solver.hpp"
#include "support.hpp"

using namespace diter;
using doctest::Approx;

namespace {

double f_sum(const SolverState& s) {
    double t = 0.0;
    for (double x : s.fluid()) t += x;
    return t;
}

double h_sum(const SolverState& s) {
    double t = 0.0;
    for (double x : s.history()) t += x;
    return t;
}

}  // namespace

TEST_CASE("initial state") {
    const Graph g = Graph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
    SolverConfig cfg;

    SUBCASE("uniform personalization") {
        const SolverState s(g, cfg, {0, 4});
        for (NodeId i = 0; i < 4; ++i) {
            CHECK(s.f(i) == Approx(0.0375));
            CHECK(s.h(i) == 0.0);
        }
        CHECK(s.residual() == Approx(0.15));
        CHECK(s.error_bound() == Approx(1.0));
    }
    SUBCASE("owned half") {
        const SolverState s(g, cfg, {0, 2});
        CHECK(s.residual() == Approx(0.075));
    }
    SUBCASE("unit personalization") {
        cfg.personalization = {1.0, 0.0, 0.0, 0.0};
        const SolverState s(g, cfg, {0, 4});
        CHECK(s.f(0) == Approx(0.15));
        CHECK(s.f(1) == 0.0);
        CHECK(s.f(2) == 0.0);
        CHECK(s.f(3) == 0.0);
    }
    SUBCASE("bad ranges and configs") {
        CHECK_THROWS_AS(SolverState(g, cfg, {2, 2}), std::invalid_argument);
        CHECK_THROWS_AS(SolverState(g, cfg, {0, 5}), std::out_of_range);
        cfg.damping = 1.0;
        CHECK_THROWS_AS(SolverState(g, cfg, {0, 4}), std::invalid_argument);
        cfg.damping = 0.85;
        cfg.alpha = 1.0;
        CHECK_THROWS_AS(SolverState(g, cfg, {0, 4}), std::invalid_argument);
        cfg.alpha = 1.5;
        cfg.personalization = {0.5, 0.5, 0.5, 0.0};
        CHECK_THROWS_AS(SolverState(g, cfg, {0, 4}), std::invalid_argument);
        cfg.personalization = {1.5, -0.5, 0.0, 0.0};
        CHECK_THROWS_AS(SolverState(g, cfg, {0, 4}), std::invalid_argument);
        cfg.personalization = {1.0};
        CHECK_THROWS_AS(SolverState(g, cfg, {0, 4}), std::invalid_argument);
        cfg.personalization.clear();
        cfg.target_error = 0.0;
        CHECK_THROWS_AS(SolverState(g, cfg, {0, 4}), std::invalid_argument);
    }
}

TEST_CASE("diffuse on the two-cycle") {
    const Graph g = testing::two_cycle();
    SolverState s(g, {}, {0, 2});
    CHECK(s.f(0) == Approx(0.075));
    const auto work = s.diffuse_node(0);
    CHECK(work == 1);
    CHECK(s.f(0) == 0.0);
    CHECK(s.f(1) == Approx(0.075 + 0.06375));
    CHECK(s.h(0) == Approx(0.075));
    CHECK(s.h(1) == 0.0);
    CHECK(s.residual() == Approx(0.13875));
}

TEST_CASE("diffuse a dangling node") {
    const Graph g = Graph::from_edges(2, {{1, 0}});
    SolverConfig cfg;
    cfg.personalization = {2.0 / 3.0, 1.0 / 3.0};
    SolverState s(g, cfg, {0, 2});
    CHECK(s.f(0) == Approx(0.1));
    const double before = s.residual();
    CHECK(s.diffuse_node(0) == 1);
    CHECK(s.dangling_pool() == Approx(0.085));
    CHECK(before - s.residual() == Approx(0.015));
}

TEST_CASE("diffuse a star centre") {
    const Graph g = testing::star(5);
    SolverConfig cfg;
    cfg.personalization = {1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    SolverState s(g, cfg, {0, 6});
    const double sent = s.f(0);
    CHECK(s.diffuse_node(0) == 5);
    for (NodeId i = 1; i <= 5; ++i) CHECK(s.f(i) == Approx(0.17 * sent));
}

TEST_CASE("diffuse edge cases") {
    const Graph g = testing::two_cycle();
    SolverState s(g, {}, {0, 1});
    CHECK_THROWS_AS(s.diffuse_node(1), std::logic_error);
    s.diffuse_node(0);
    const double h0 = s.h(0);
    CHECK(s.diffuse_node(0) == 0);
    CHECK(s.h(0) == h0);
    CHECK(s.ops_done() == 1);
    // The child lives outside the owned range: its share is deferred.
    CHECK(s.deferred_mass() == Approx(0.85 * 0.075));
    CHECK(s.take_touched() == std::vector<NodeId>{0});
    CHECK(s.take_touched().empty());
}

TEST_CASE("two-cycle residual follows the hand recurrence") {
    // After w >= 1 alternating diffusions from f = (a, a): r = a (1 + d) d^(w-1).
    const Graph g = testing::two_cycle();
    const double a = 0.075;
    const double d = 0.85;

    SolverState manual(g, {}, {0, 2});
    for (int w = 1; w <= 200; ++w) {
        manual.diffuse_node(static_cast<NodeId>((w - 1) % 2));
        CHECK(manual.residual() == Approx(a * (1 + d) * std::pow(d, w - 1)).epsilon(1e-12));
    }
    for (int budget = 1; budget <= 60; ++budget) {
        SolverState s(g, {}, {0, 2});
        CHECK(s.scan_pass(budget, 0.0) == static_cast<std::uint64_t>(budget));
        CHECK(s.residual() == Approx(a * (1 + d) * std::pow(d, budget - 1)).epsilon(1e-12));
    }
}

TEST_CASE("scan pass resumes across budgets") {
    SplitMix64 rng(2);
    const Graph g = testing::random_digraph(rng, 150, 5.0, 0.1);
    SolverState whole(g, {}, {0, g.num_nodes()});
    SolverState split(g, {}, {0, g.num_nodes()});
    whole.scan_pass(20000, 0.0);
    std::uint64_t done = 0;
    while (done < 20000) done += split.scan_pass(std::min<double>(37, 20000 - done), 0.0);
    CHECK(split.ops_done() == whole.ops_done());
    CHECK(std::equal(whole.history().begin(), whole.history().end(), split.history().begin()));
}

TEST_CASE("bound, monotone history and mass per diffusion on random graphs") {
    SplitMix64 rng(17);
    for (int round = 0; round < 15; ++round) {
        const NodeId n = 2 + static_cast<NodeId>(rng.below(199));
        const Graph g = testing::random_digraph(rng, n, 1.0 + 6.0 * rng.uniform(), 0.2 * rng.uniform());
        SolverConfig cfg;
        const auto x = oracle::power_iteration(g, cfg.damping, {}, 1e-14).x;
        SolverState s(g, cfg, {0, n});
        std::vector<double> prev(n, 0.0);
        for (int chunk = 0; chunk < 40; ++chunk) {
            s.scan_pass(static_cast<double>(g.num_edges()) / 4.0 + 1.0, 0.0);
            std::vector<double> h(s.history().begin(), s.history().end());
            for (NodeId i = 0; i < n; ++i) CHECK(h[i] >= prev[i]);
            const double bound = s.error_bound();
            CHECK(1.0 - testing::sum(h) <= bound + 1e-12);
            CHECK(oracle::l1_distance(x, h) <= bound + 1e-12);
            prev = h;
        }
        for (NodeId i = 0; i < n && i < 20; ++i) {
            const double before = f_sum(s) + s.dangling_pool();
            const double sent = s.f(i);
            s.diffuse_node(i);
            CHECK(before - (f_sum(s) + s.dangling_pool()) == Approx((1.0 - cfg.damping) * sent).epsilon(1e-9));
        }
    }
}

TEST_CASE("error bound of a fresh and a finished state") {
    const Graph g = Graph::from_edges(1, {{0, 0}});
    SolverState s(g, {}, {0, 1});
    CHECK(s.error_bound() == Approx(1.0));
    s.scan_pass(1e6, 0.0);
    CHECK(s.error_bound() < 1e-300);
}

TEST_CASE("different selection orders reach the same limit") {
    SplitMix64 rng(23);
    for (int round = 0; round < 5; ++round) {
        const NodeId n = 20 + static_cast<NodeId>(rng.below(150));
        const Graph g = testing::random_digraph(rng, n, 4.0, 0.0);
        SolverConfig cfg;
        const double eps = 1e-8;
        cfg.target_error = eps;
        const auto cyclic = solve_single(g, cfg).h;

        SolverState s(g, cfg, {0, n});
        const double stop = (1.0 - cfg.damping) * eps;
        while (s.recompute_residual() > stop) {
            for (int t = 0; t < 1000; ++t) s.diffuse_node(static_cast<NodeId>(rng.below(n)));
        }
        const std::vector<double> randomized(s.history().begin(), s.history().end());
        CHECK(oracle::l1_distance(cyclic, randomized) <= 2.0 * eps);
    }
}

TEST_CASE("incremental residual after a million operations") {
    SplitMix64 rng(29);
    const Graph g = testing::random_digraph(rng, 500, 6.0, 0.05);
    SolverState s(g, {}, {0, 500});
    while (s.ops_done() < 1'000'000) s.scan_pass(997, 0.0);
    const double tracked = s.residual();
    const double exact = s.recompute_residual();
    CHECK(std::abs(tracked - exact) <= 1e-9 * exact);
    CHECK(exact == Approx(f_sum(s) + s.dangling_pool()));
}

TEST_CASE("pool drain spreads over every node") {
    const Graph g = Graph::from_edges(4, {{1, 0}, {2, 0}, {3, 0}});
    SolverConfig cfg;
    cfg.pool_drain_fraction = 1.0;
    SolverState s(g, cfg, {0, 4});
    s.scan_pass(1e5, 1e-12);
    CHECK(s.residual() <= 1e-12);
    CHECK(h_sum(s) == Approx(1.0).epsilon(1e-10));

    SolverState half(g, {}, {0, 2});
    half.diffuse_node(0);
    const double pool = half.dangling_pool();
    half.scan_pass(2, 0.0);
    CHECK(half.dangling_pool() == 0.0);
    CHECK(half.uniform_export() == Approx(pool / 4));
    CHECK(half.take_uniform_export() == Approx(pool / 4));
    CHECK(half.uniform_export() == 0.0);
}

TEST_CASE("solve_single") {
    SUBCASE("self-loop") {
        SolverConfig cfg;
        cfg.target_error = 1e-10;
        const auto r = solve_single(Graph::from_edges(1, {{0, 0}}), cfg);
        CHECK(std::abs(r.h[0] - 1.0) <= 1e-10);
    }
    SUBCASE("random graph against power iteration") {
        SplitMix64 rng(31);
        const Graph g = testing::random_digraph(rng, 100, 5.0, 0.1);
        SolverConfig cfg;
        cfg.target_error = 1e-10;
        const auto r = solve_single(g, cfg);
        const auto p = oracle::power_iteration(g, cfg.damping, {}, 1e-14);
        CHECK(oracle::l1_distance(r.h, p.x) <= 1e-10);
        // a synchronous sweep only shrinks the residual by d per pass
        CHECK(r.normalized_cost < std::log(1e-10) / std::log(cfg.damping));
    }
    SUBCASE("raw selection converges as well") {
        SplitMix64 rng(37);
        const Graph g = testing::random_digraph(rng, 100, 5.0, 0.1);
        SolverConfig cfg;
        cfg.selection = Selection::raw;
        cfg.target_error = 1e-9;
        const auto r = solve_single(g, cfg);
        CHECK(oracle::l1_distance(r.h, oracle::power_iteration(g, cfg.damping, {}, 1e-14).x) <= 1e-9);
    }
    SUBCASE("edgeless graph") {
        const auto r = solve_single(Graph::from_edges(3, {}), {});
        CHECK(testing::sum(r.h) == Approx(1.0).epsilon(1.0 / 3.0));
    }
    SUBCASE("empty graph") { CHECK_THROWS_AS(solve_single(Graph{}, {}), std::invalid_argument); }
}

TEST_CASE("release and absorb move fluid and history") {
    SplitMix64 rng(41);
    const Graph g = testing::random_digraph(rng, 40, 3.0, 0.1);
    SolverState left(g, {}, {0, 20});
    SolverState right(g, {}, {20, 40});
    left.scan_pass(50, 0.0);
    right.scan_pass(50, 0.0);
    left.take_touched();
    right.take_touched();
    const double total = f_sum(left) + f_sum(right) + h_sum(left) + h_sum(right);

    const auto slots = left.release({0, 15});
    CHECK(slots.size() == 5);
    CHECK(slots.front().node == 15);
    right.absorb(slots);
    CHECK(left.owned() == NodeRange{0, 15});
    CHECK(right.owned() == NodeRange{15, 40});
    CHECK(f_sum(left) + f_sum(right) + h_sum(left) + h_sum(right) == Approx(total).epsilon(1e-14));
    CHECK(right.residual() == Approx(f_sum(right) + right.dangling_pool()));

    CHECK_THROWS_AS(left.release({3, 10}), std::invalid_argument);
    const std::vector<SolverState::Slot> far{{30, 0.0, 0.0}};
    CHECK_THROWS_AS(left.absorb(far), std::invalid_argument);
}

TEST_CASE("release refuses while exports are pending") {
    const Graph g = testing::two_cycle();
    SolverState s(g, {}, {0, 1});
    s.diffuse_node(0);
    CHECK_THROWS_AS(s.release({0, 1}), std::logic_error);
}
