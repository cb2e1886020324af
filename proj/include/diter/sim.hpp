#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "diter/graph.hpp"
#include "diter/partition.hpp"
#include "diter/rng.hpp"
#include "diter/solver.hpp"

namespace diter::sim {

/// Threshold update when PID k receives fluid while holding r_k > 0.
enum class ThresholdRescale {
    /// T <- min(T (r_k + received) / r_k, received)
    capped,
    /// T <- T * c * min((r_k + received) / r_k, received)
    literal,
};

/// Residual below which a PID sleeps, as a fraction of (1 - d) target.
enum class SleepRule {
    /// 1 / K: sleeping PIDs alone exhaust the target.
    equal_share,
    /// 1 / (2K - 1): leaves (K - 1) / (2K - 1) of the target for fluid in transit.
    transit_slack,
};

/// Work measure compared by the adaptation trigger.
enum class AdaptOps {
    /// total_ops since the start of the run
    cumulative,
    /// ops since the previous check, divided by the summed node cost of the
    /// PID's interval: the number of local sweeps
    local_sweeps,
};

struct SimConfig {
    std::size_t k = 1;
    /// Operations per PID per time step. Unset means max(1, L / K).
    std::optional<double> pid_speed;
    /// Probability that a transmission opportunity is deferred.
    double delay_proba = 0.0;
    Strategy strategy = Strategy::uniform;
    /// Replaces the strategy's initial partition when set.
    std::optional<Partition> initial_partition;
    /// Boundary adaptation (two PIDs only); implied by Strategy::adaptive.
    bool adaptation = false;
    std::size_t adapt_interval = 1;
    AdaptRule adapt_rule;
    AdaptOps adapt_ops = AdaptOps::local_sweeps;
    ThresholdRescale rescale = ThresholdRescale::capped;
    /// Constant c of ThresholdRescale::literal.
    double rescale_constant = 1.0;
    SleepRule sleep_rule = SleepRule::transit_slack;
    std::uint64_t seed = 1;
    std::uint64_t max_steps = 1'000'000;
    bool record_trace = true;
    SolverConfig solver;

    void validate(const Graph& g) const;
};

struct UniformSpan {
    NodeRange range;
    double per_node = 0.0;
};

struct Message {
    std::size_t from = 0;
    std::size_t to = 0;
    /// Sorted by node, masses > 0.
    std::vector<std::pair<NodeId, double>> entries;
    std::vector<UniformSpan> spans;
    std::uint64_t dispatch_step = 0;
    std::uint64_t delivery_step = 0;

    double mass() const;
};

struct PidState {
    std::size_t id = 0;
    SolverState solver;
    /// History snapshot at the last export, indexed like solver.history().
    std::vector<double> h_old;
    std::vector<std::pair<NodeId, double>> outgoing;
    std::vector<UniformSpan> outgoing_spans;
    /// Mass waiting in outgoing and outgoing_spans.
    double pending = 0.0;
    bool send_deferred = false;
    /// Work charged beyond the capacity already spent.
    double debt = 0.0;
    std::uint64_t total_ops = 0;
    double total_idle = 0.0;
    double step_idle = 0.0;
    std::uint64_t sends = 0;
    std::uint64_t deferrals = 0;
    SplitMix64 rng;

    NodeRange owned() const { return solver.owned(); }
    double residual() const { return solver.residual(); }
};

struct TraceRow {
    std::uint64_t step = 0;
    /// PID index, or -1 for the global row.
    long pid = 0;
    double norm_cost = 0.0;
    double bound = 0.0;
    double s_k = 0.0;
    double idle_frac = 0.0;
    bool converged = false;
};

struct Trace {
    std::vector<TraceRow> rows;
};

struct PidSummary {
    std::uint64_t ops = 0;
    double idle = 0.0;
    double norm_cost = 0.0;
    double idle_fraction = 0.0;
    std::uint64_t sends = 0;
    std::uint64_t deferrals = 0;
};

struct SimResult {
    Trace trace;
    std::vector<double> h;
    bool converged = false;
    std::uint64_t steps = 0;
    /// Slowest PID, (ops + idle) / L.
    double cost = 0.0;
    /// Slowest PID, ops / L.
    double cost_ops_only = 0.0;
    /// Mean over PIDs of ops / L.
    double mean_pid_cost = 0.0;
    double global_idle = 0.0;
    std::vector<PidSummary> pids;
    double final_bound = 0.0;
    double dispatched_mass = 0.0;
    double delivered_mass = 0.0;
    /// max over steps of (1 - |H|) - bound; <= 0 up to rounding.
    double max_bound_violation = 0.0;
    /// max over steps and PIDs of s_k / (r_k + target).
    double max_send_ratio = 0.0;
    /// Boundary index 1 after each change, starting with the initial one.
    std::vector<std::pair<std::uint64_t, NodeId>> boundary_history;
    std::vector<NodeId> final_boundaries;
    /// Idle of the final step, excluded from the totals.
    double excluded_final_idle = 0.0;
    double final_debt = 0.0;
    double pid_speed = 0.0;
};

/// Thrown when max_steps elapse without convergence.
class MaxStepsExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Time-stepped simulation of K PIDs, each owning one interval of the
/// partition. All PIDs are stepped by one scheduler in id order; messages
/// dispatched during step t are merged at the end of step t.
class Simulator {
public:
    Simulator(const Graph& g, SimConfig cfg);
    Simulator(Graph&&, SimConfig) = delete;

    /// Advances one time step. Returns true once converged.
    bool step();
    bool converged() const { return converged_; }
    std::uint64_t current_step() const { return step_; }

    /// Spends this step's budget on the PID's scan. Returns diffusion work.
    std::uint64_t pid_step(std::size_t k);
    /// Turns the H increment of nodes with external children into per-node
    /// outgoing fluid. Returns the edges traversed (charged to the PID).
    std::uint64_t compute_outgoing(std::size_t k);
    /// Transmission opportunity: emits one message per destination PID when
    /// the send test passes and the delay draw allows it.
    std::vector<Message> maybe_send(std::size_t k);
    /// Merges a message whose targets are all owned by PID k.
    void deliver(std::size_t k, const Message& msg);
    /// Splits msg by current ownership and delivers each part.
    void route(const Message& msg);

    const PidState& pid(std::size_t k) const { return pids_[k]; }
    PidState& pid_mut(std::size_t k) { return pids_[k]; }
    const Partition& partition() const { return partition_; }
    double pid_speed() const { return speed_; }
    double sleep_residual() const { return sleep_residual_; }
    double target_error() const { return target_; }

    /// Mass not yet folded into H: fluid, pools, unexported and pending
    /// outgoing fluid, in-flight messages.
    double outstanding_mass() const;
    double global_bound() const { return outstanding_mass() / (1.0 - damping_); }
    double history_mass() const;
    std::vector<double> history() const;

    SimResult result() const;

private:
    void adapt();
    void record_rows();
    void finalize();

    const Graph* graph_;
    SimConfig cfg_;
    Partition partition_;
    std::vector<PidState> pids_;
    std::vector<Message> in_flight_;
    double speed_ = 0.0;
    double damping_ = 0.0;
    double target_ = 0.0;
    double sleep_residual_ = 0.0;
    std::uint64_t step_ = 0;
    bool converged_ = false;
    bool adaptive_ = false;

    Trace trace_;
    double dispatched_ = 0.0;
    double delivered_ = 0.0;
    double max_violation_ = -1.0;
    double max_send_ratio_ = 0.0;
    double excluded_idle_ = 0.0;
    std::vector<std::pair<std::uint64_t, NodeId>> boundary_history_;
    std::vector<std::uint64_t> ops_at_check_;
    /// Prefix sums of node_cost, for local sweep counts.
    std::vector<double> cost_prefix_;
};

/// Runs to convergence; throws MaxStepsExceeded past cfg.max_steps.
SimResult run(const Graph& g, const SimConfig& cfg);

/// run() with boundary adaptation enabled (requires K = 2).
SimResult run_adaptive(const Graph& g, SimConfig cfg);

struct IdleProportion {
    std::vector<double> per_pid;
    double global = 0.0;
};

/// idle / (ops + idle), per PID and over all PIDs.
IdleProportion idle_proportion(const SimResult& r);

/// Columns step,pid,norm_cost,bound,s_k,idle_frac; last line
/// TOTAL,<cost>,<global idle>.
void write_trace_csv(std::ostream& out, const SimResult& r);

}  // namespace diter::sim
