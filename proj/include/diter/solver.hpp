#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "diter/graph.hpp"

namespace diter {

/// Half-open node interval [begin, end).
struct NodeRange {
    NodeId begin = 0;
    NodeId end = 0;

    NodeId size() const { return end - begin; }
    bool empty() const { return end <= begin; }
    bool contains(NodeId i) const { return i >= begin && i < end; }
    bool operator==(const NodeRange&) const = default;
};

enum class Selection {
    weighted,  // compare f_i / ((in_i + 1)(out_i + 1)) against the threshold
    raw,       // compare f_i against the threshold
};

struct SolverConfig {
    double damping = 0.85;
    double alpha = 1.5;
    /// Unset means 1/N.
    std::optional<double> target_error;
    /// Empty means the uniform vector 1/N.
    std::vector<double> personalization;
    Selection selection = Selection::weighted;
    /// The dangling pool is spread over all nodes once it exceeds this
    /// fraction of the residual.
    double pool_drain_fraction = 0.1;

    double target_for(NodeId n) const { return target_error ? *target_error : 1.0 / n; }
    double personalization_at(NodeId i, NodeId n) const {
        return personalization.empty() ? 1.0 / n : personalization[i];
    }
    /// Throws std::invalid_argument on out-of-domain values.
    void validate(NodeId n) const;
};

/// Fluid/history state of the diffusion iteration over one owned node range.
///
/// Diffusing node i moves its fluid f_i into h_i and pushes d f_i / out_i to
/// each child. Children inside the owned range receive the fluid at once.
/// Children outside it are only accounted in deferred_mass(); the simulator
/// recovers the per-node amounts later from the increment of H. Dangling
/// nodes feed a scalar pool that is later spread uniformly over all N nodes,
/// which is the 1/N completion of the dangling columns.
///
/// Mass ledger, exact up to rounding:
///   residual + deferred + uniform_export * (N - |owned|) + (1 - d) |H|
/// only changes through add_fluid() / add_uniform().
class SolverState {
public:
    SolverState(const Graph& g, const SolverConfig& cfg, NodeRange owned);
    SolverState(Graph&&, const SolverConfig&, NodeRange) = delete;

    NodeRange owned() const { return owned_; }
    double damping() const { return damping_; }

    double f(NodeId i) const { return f_[local(i)]; }
    double h(NodeId i) const { return h_[local(i)]; }
    std::span<const double> fluid() const { return f_; }
    std::span<const double> history() const { return h_; }

    /// Sum of owned fluid plus the dangling pool, maintained incrementally.
    double residual() const { return residual_; }
    /// Recomputes the residual from scratch and stores it.
    double recompute_residual();
    double dangling_pool() const { return pool_; }
    double threshold() const { return threshold_; }
    void set_threshold(double t) { threshold_ = t; }
    std::uint64_t ops_done() const { return ops_; }

    /// Fluid pushed towards non-owned children and not yet exported.
    double deferred_mass() const { return deferred_; }
    /// Mass per non-owned node owed from pool drains.
    double uniform_export() const { return uniform_export_; }

    /// residual / (1 - d): bound on |X - H| restricted to the owned mass.
    double error_bound() const { return residual_ / (1.0 - damping_); }

    /// One elementary diffusion of node i. Returns the operations charged:
    /// max(1, number of owned children).
    std::uint64_t diffuse_node(NodeId i);

    /// Resumes the cyclic threshold scan. Stops once the work reaches budget
    /// or the residual is at or below stop_residual. Returns the work done.
    std::uint64_t scan_pass(double budget, double stop_residual);

    /// Merges received fluid into node i (owned).
    void add_fluid(NodeId i, double mass);
    /// Adds per_node to every owned node of span. Returns nodes touched.
    std::uint64_t add_uniform(NodeRange span, double per_node);

    /// Owned nodes with non-owned children diffused since the last call.
    std::vector<NodeId> take_touched();
    /// Clears deferred_mass() after the simulator exported it.
    void clear_deferred() { deferred_ = 0.0; }
    /// Returns and clears uniform_export().
    double take_uniform_export();

    /// Drops the owned nodes outside keep and returns their (f, h) in node
    /// order. keep must share one endpoint with the owned range.
    struct Slot {
        NodeId node;
        double f;
        double h;
    };
    std::vector<Slot> release(NodeRange keep);
    /// Grows the owned range to cover the adjacent nodes of slots.
    void absorb(std::span<const Slot> slots);

private:
    std::size_t local(NodeId i) const { return i - owned_.begin; }
    double weight_of(NodeId i) const;
    std::uint64_t drain_pool();
    void rebuild_weights();

    const Graph* graph_;
    NodeRange owned_;
    double damping_;
    double alpha_;
    double drain_fraction_;
    Selection selection_;

    std::vector<double> f_;
    std::vector<double> h_;
    std::vector<double> weight_;
    std::vector<char> touched_flag_;
    std::vector<NodeId> touched_;

    double residual_ = 0.0;
    double pool_ = 0.0;
    double deferred_ = 0.0;
    double uniform_export_ = 0.0;
    double threshold_ = 0.0;
    NodeId cursor_ = 0;
    bool diffused_this_cycle_ = false;
    std::uint64_t ops_ = 0;
};

struct SolveResult {
    std::vector<double> h;
    /// Elementary operations divided by the number of links.
    double normalized_cost = 0.0;
    std::uint64_t ops = 0;
    double residual = 0.0;
};

/// Runs the scan on the whole graph until residual / (1 - d) <= target.
/// Throws std::runtime_error past 10^4 L operations.
SolveResult solve_single(const Graph& g, const SolverConfig& cfg);

/// Divisor used for normalized costs: L, or 1 for an edgeless graph.
double cost_scale(const Graph& g);

}  // namespace diter
