#include "diter/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>

namespace diter::sim {

void SimConfig::validate(const Graph& g) const {
    solver.validate(g.num_nodes());
    if (k == 0) throw std::invalid_argument("K must be >= 1");
    if (k > g.num_nodes()) throw std::invalid_argument("K exceeds the number of nodes");
    if (pid_speed && !(*pid_speed >= 1.0)) throw std::invalid_argument("pid speed must be >= 1");
    if (!(delay_proba >= 0.0 && delay_proba < 1.0)) throw std::invalid_argument("delay probability must lie in [0, 1)");
    if ((adaptation || strategy == Strategy::adaptive) && k != 2) {
        throw std::invalid_argument("boundary adaptation requires K = 2");
    }
    if (adapt_interval == 0) throw std::invalid_argument("adaptation interval must be >= 1");
    if (initial_partition &&
        (initial_partition->parts() != k || initial_partition->num_nodes() != g.num_nodes())) {
        throw std::invalid_argument("initial partition does not match K and N");
    }
}

double Message::mass() const {
    double m = 0.0;
    for (const auto& e : entries) m += e.second;
    for (const auto& s : spans) m += s.per_node * s.range.size();
    return m;
}

namespace {

Partition initial_partition(const Graph& g, const SimConfig& cfg) {
    if (cfg.initial_partition) return *cfg.initial_partition;
    switch (cfg.strategy) {
        case Strategy::cost_balanced: return cost_balanced_partition(g, cfg.k);
        case Strategy::uniform:
        case Strategy::adaptive: return uniform_partition(g.num_nodes(), cfg.k);
    }
    return uniform_partition(g.num_nodes(), cfg.k);
}

}  // namespace

Simulator::Simulator(const Graph& g, SimConfig cfg)
    : graph_(&g), cfg_(std::move(cfg)), partition_((cfg_.validate(g), initial_partition(g, cfg_))) {
    damping_ = cfg_.solver.damping;
    target_ = cfg_.solver.target_for(g.num_nodes());
    speed_ = cfg_.pid_speed ? *cfg_.pid_speed : std::max(1.0, cost_scale(g) / static_cast<double>(cfg_.k));
    const double shares = cfg_.sleep_rule == SleepRule::equal_share ? static_cast<double>(cfg_.k)
                                                                     : 2.0 * static_cast<double>(cfg_.k) - 1.0;
    sleep_residual_ = (1.0 - damping_) * target_ / shares;
    adaptive_ = cfg_.adaptation || cfg_.strategy == Strategy::adaptive;

    const SplitMix64 root(cfg_.seed);
    pids_.reserve(cfg_.k);
    for (std::size_t k = 0; k < cfg_.k; ++k) {
        SolverState solver(g, cfg_.solver, partition_.range(k));
        std::vector<double> h_old(solver.owned().size(), 0.0);
        pids_.push_back(PidState{.id = k,
                                 .solver = std::move(solver),
                                 .h_old = std::move(h_old),
                                 .outgoing = {},
                                 .outgoing_spans = {},
                                 .pending = 0.0,
                                 .send_deferred = false,
                                 .debt = 0.0,
                                 .total_ops = 0,
                                 .total_idle = 0.0,
                                 .step_idle = 0.0,
                                 .sends = 0,
                                 .deferrals = 0,
                                 .rng = root.split(k)});
    }
    if (adaptive_) {
        boundary_history_.emplace_back(0, partition_.boundaries()[1]);
        cost_prefix_.assign(g.num_nodes() + 1, 0.0);
        for (NodeId j = 0; j < g.num_nodes(); ++j) cost_prefix_[j + 1] = cost_prefix_[j] + node_cost(g, j);
    }
}

std::uint64_t Simulator::pid_step(std::size_t k) {
    PidState& p = pids_[k];
    p.step_idle = 0.0;
    const double avail = speed_ - p.debt;
    if (avail <= 0.0) {
        p.debt -= speed_;
        return 0;
    }
    p.debt = 0.0;
    const std::uint64_t work = p.solver.scan_pass(avail, sleep_residual_);
    const double w = static_cast<double>(work);
    if (w >= avail) {
        p.debt = w - avail;
    } else {
        p.step_idle = avail - w;
        p.total_idle += p.step_idle;
    }
    p.total_ops += work;
    return work;
}

std::uint64_t Simulator::compute_outgoing(std::size_t k) {
    PidState& p = pids_[k];
    const NodeRange own = p.owned();
    std::uint64_t cost = 0;
    for (NodeId j : p.solver.take_touched()) {
        const std::size_t lj = j - own.begin;
        const double hj = p.solver.history()[lj];
        const double delta = hj - p.h_old[lj];
        p.h_old[lj] = hj;
        if (delta <= 0.0) continue;
        const auto kids = graph_->children(j);
        const double share = damping_ * delta / static_cast<double>(kids.size());
        for (NodeId c : kids) {
            if (own.contains(c)) continue;
            p.outgoing.emplace_back(c, share);
            p.pending += share;
            ++cost;
        }
    }
    p.solver.clear_deferred();

    const double u = p.solver.take_uniform_export();
    if (u > 0.0) {
        const NodeId n = graph_->num_nodes();
        if (own.begin > 0) p.outgoing_spans.push_back({{0, own.begin}, u});
        if (own.end < n) p.outgoing_spans.push_back({{own.end, n}, u});
        p.pending += u * (n - own.size());
    }
    p.debt += static_cast<double>(cost);
    p.total_ops += cost;
    return cost;
}

std::vector<Message> Simulator::maybe_send(std::size_t k) {
    PidState& p = pids_[k];
    if (p.outgoing.empty() && p.outgoing_spans.empty()) {
        p.send_deferred = false;
        p.pending = 0.0;
        return {};
    }
    const double r = p.residual();
    const bool sleeping = r <= sleep_residual_;
    const bool wanted = p.send_deferred || sleeping || p.pending > r / static_cast<double>(cfg_.k);
    if (!wanted) return {};
    if (cfg_.delay_proba > 0.0 && p.rng.bernoulli(cfg_.delay_proba)) {
        p.send_deferred = true;
        ++p.deferrals;
        return {};
    }
    p.send_deferred = false;
    ++p.sends;

    auto entries = std::move(p.outgoing);
    p.outgoing.clear();
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<NodeId, double>> merged;
    for (const auto& e : entries) {
        if (!merged.empty() && merged.back().first == e.first) {
            merged.back().second += e.second;
        } else {
            merged.push_back(e);
        }
    }

    std::vector<Message> out(pids_.size());
    for (std::size_t d = 0; d < out.size(); ++d) {
        out[d].from = k;
        out[d].to = d;
        out[d].dispatch_step = step_;
        out[d].delivery_step = step_;
    }
    for (const auto& e : merged) {
        if (e.second <= 0.0) continue;
        out[partition_.owner(e.first)].entries.push_back(e);
    }
    for (const auto& span : p.outgoing_spans) {
        for (std::size_t d = 0; d < pids_.size(); ++d) {
            const NodeRange r2 = partition_.range(d);
            const NodeRange cut{std::max(span.range.begin, r2.begin), std::min(span.range.end, r2.end)};
            if (!cut.empty()) out[d].spans.push_back({cut, span.per_node});
        }
    }
    p.outgoing_spans.clear();
    p.pending = 0.0;

    // Targets this PID owns itself (possible after a boundary move) merge locally.
    Message self = std::move(out[k]);
    for (const auto& e : self.entries) p.solver.add_fluid(e.first, e.second);
    for (const auto& s : self.spans) p.solver.add_uniform(s.range, s.per_node);

    std::vector<Message> sent;
    for (std::size_t d = 0; d < out.size(); ++d) {
        if (d == k || (out[d].entries.empty() && out[d].spans.empty())) continue;
        dispatched_ += out[d].mass();
        sent.push_back(std::move(out[d]));
    }
    return sent;
}

void Simulator::deliver(std::size_t k, const Message& msg) {
    PidState& p = pids_[k];
    const NodeRange own = p.owned();
    const double before = p.residual();
    double received = 0.0;
    for (const auto& [node, mass] : msg.entries) {
        if (!own.contains(node)) throw std::logic_error("deliver: message targets a node the PID does not own");
        p.solver.add_fluid(node, mass);
        received += mass;
    }
    for (const auto& s : msg.spans) {
        if (s.range.begin < own.begin || s.range.end > own.end) {
            throw std::logic_error("deliver: uniform span exceeds the owned range");
        }
        const auto touched = p.solver.add_uniform(s.range, s.per_node);
        received += s.per_node * touched;
    }
    if (received <= 0.0) return;
    delivered_ += received;
    if (before <= 0.0) {
        p.solver.set_threshold(received);
    } else if (cfg_.rescale == ThresholdRescale::capped) {
        p.solver.set_threshold(std::min(p.solver.threshold() * (before + received) / before, received));
    } else {
        p.solver.set_threshold(p.solver.threshold() * cfg_.rescale_constant *
                               std::min((before + received) / before, received));
    }
}

void Simulator::route(const Message& msg) {
    std::vector<Message> parts(pids_.size());
    for (const auto& e : msg.entries) parts[partition_.owner(e.first)].entries.push_back(e);
    for (const auto& s : msg.spans) {
        for (std::size_t d = 0; d < pids_.size(); ++d) {
            const NodeRange r = partition_.range(d);
            const NodeRange cut{std::max(s.range.begin, r.begin), std::min(s.range.end, r.end)};
            if (!cut.empty()) parts[d].spans.push_back({cut, s.per_node});
        }
    }
    for (std::size_t d = 0; d < parts.size(); ++d) {
        if (parts[d].entries.empty() && parts[d].spans.empty()) continue;
        parts[d].from = msg.from;
        parts[d].to = d;
        parts[d].dispatch_step = msg.dispatch_step;
        parts[d].delivery_step = msg.delivery_step;
        deliver(d, parts[d]);
    }
}

double Simulator::outstanding_mass() const {
    const NodeId n = graph_->num_nodes();
    double m = 0.0;
    for (const auto& p : pids_) {
        m += p.residual() + p.solver.deferred_mass() + p.pending +
             p.solver.uniform_export() * static_cast<double>(n - p.owned().size());
    }
    for (const auto& msg : in_flight_) m += msg.mass();
    return m;
}

double Simulator::history_mass() const {
    double s = 0.0;
    for (const auto& p : pids_) {
        for (double x : p.solver.history()) s += x;
    }
    return s;
}

std::vector<double> Simulator::history() const {
    std::vector<double> h;
    h.reserve(graph_->num_nodes());
    for (const auto& p : pids_) h.insert(h.end(), p.solver.history().begin(), p.solver.history().end());
    return h;
}

void Simulator::adapt() {
    std::vector<PidLoad> loads;
    ops_at_check_.resize(pids_.size(), 0);
    for (std::size_t k = 0; k < pids_.size(); ++k) {
        const PidState& p = pids_[k];
        double work = static_cast<double>(p.total_ops);
        if (cfg_.adapt_ops == AdaptOps::local_sweeps) {
            const NodeRange own = p.owned();
            work = static_cast<double>(p.total_ops - ops_at_check_[k]) / (cost_prefix_[own.end] - cost_prefix_[own.begin]);
        }
        loads.push_back({p.residual(), work});
        ops_at_check_[k] = p.total_ops;
    }
    Partition next = adapt_boundary(partition_, loads, cfg_.adapt_rule);
    if (next == partition_) return;

    for (std::size_t k = 0; k < pids_.size(); ++k) compute_outgoing(k);
    const NodeId old_mid = partition_.boundaries()[1];
    const NodeId new_mid = next.boundaries()[1];
    PidState& left = pids_[0];
    PidState& right = pids_[1];
    if (new_mid < old_mid) {
        auto slots = left.solver.release({0, new_mid});
        right.solver.absorb(slots);
        right.debt += static_cast<double>(slots.size());
        right.total_ops += slots.size();
    } else {
        auto slots = right.solver.release({new_mid, graph_->num_nodes()});
        left.solver.absorb(slots);
        left.debt += static_cast<double>(slots.size());
        left.total_ops += slots.size();
    }
    // Every increment was exported above, so the snapshot restarts at H.
    for (auto& p : pids_) p.h_old.assign(p.solver.history().begin(), p.solver.history().end());
    partition_ = std::move(next);
    boundary_history_.emplace_back(step_, new_mid);
}

bool Simulator::step() {
    if (converged_) return true;
    if (step_ >= cfg_.max_steps) {
        throw MaxStepsExceeded("no convergence after " + std::to_string(cfg_.max_steps) + " steps");
    }
    for (std::size_t k = 0; k < pids_.size(); ++k) {
        pid_step(k);
        compute_outgoing(k);
        for (auto& m : maybe_send(k)) in_flight_.push_back(std::move(m));
        const PidState& p = pids_[k];
        max_send_ratio_ = std::max(max_send_ratio_, p.pending / (p.residual() + target_));
    }
    std::vector<Message> due;
    due.swap(in_flight_);
    for (const auto& m : due) {
        if (m.delivery_step <= step_) {
            route(m);
        } else {
            in_flight_.push_back(m);
        }
    }
    if (adaptive_ && (step_ + 1) % cfg_.adapt_interval == 0 && global_bound() > target_) adapt();

    const double bound = global_bound();
    max_violation_ = std::max(max_violation_, (1.0 - history_mass()) - bound);
    if (bound <= target_) finalize();
    if (cfg_.record_trace) record_rows();
    ++step_;
    return converged_;
}

void Simulator::finalize() {
    converged_ = true;
    for (auto& p : pids_) {
        p.total_idle -= p.step_idle;
        excluded_idle_ += p.step_idle;
        p.step_idle = 0.0;
    }
}

void Simulator::record_rows() {
    const double scale = cost_scale(*graph_);
    double max_cost = 0.0;
    double ops = 0.0;
    double idle = 0.0;
    double pending = 0.0;
    for (const auto& p : pids_) {
        const double used = static_cast<double>(p.total_ops);
        const double frac = used + p.total_idle > 0.0 ? p.total_idle / (used + p.total_idle) : 0.0;
        trace_.rows.push_back({step_, static_cast<long>(p.id), used / scale, p.residual() / (1.0 - damping_),
                               p.pending, frac, converged_});
        max_cost = std::max(max_cost, used / scale);
        ops += used;
        idle += p.total_idle;
        pending += p.pending;
    }
    for (const auto& m : in_flight_) pending += m.mass();
    trace_.rows.push_back(
        {step_, -1, max_cost, global_bound(), pending, ops + idle > 0.0 ? idle / (ops + idle) : 0.0, converged_});
}

SimResult Simulator::result() const {
    SimResult r;
    const double scale = cost_scale(*graph_);
    r.trace = trace_;
    r.h = history();
    r.converged = converged_;
    r.steps = step_;
    r.pid_speed = speed_;
    double ops = 0.0;
    double idle = 0.0;
    for (const auto& p : pids_) {
        PidSummary s;
        s.ops = p.total_ops;
        s.idle = p.total_idle;
        s.norm_cost = static_cast<double>(p.total_ops) / scale;
        const double total = static_cast<double>(p.total_ops) + p.total_idle;
        s.idle_fraction = total > 0.0 ? p.total_idle / total : 0.0;
        s.sends = p.sends;
        s.deferrals = p.deferrals;
        r.pids.push_back(s);
        r.cost = std::max(r.cost, total / scale);
        r.cost_ops_only = std::max(r.cost_ops_only, s.norm_cost);
        r.mean_pid_cost += s.norm_cost / static_cast<double>(pids_.size());
        ops += static_cast<double>(p.total_ops);
        idle += p.total_idle;
        r.final_debt += p.debt;
    }
    r.global_idle = ops + idle > 0.0 ? idle / (ops + idle) : 0.0;
    r.final_bound = global_bound();
    r.dispatched_mass = dispatched_;
    r.delivered_mass = delivered_;
    r.max_bound_violation = max_violation_;
    r.max_send_ratio = max_send_ratio_;
    r.boundary_history = boundary_history_;
    r.final_boundaries = partition_.boundaries();
    r.excluded_final_idle = excluded_idle_;
    return r;
}

SimResult run(const Graph& g, const SimConfig& cfg) {
    Simulator s(g, cfg);
    while (!s.step()) {
    }
    return s.result();
}

SimResult run_adaptive(const Graph& g, SimConfig cfg) {
    cfg.adaptation = true;
    return run(g, cfg);
}

IdleProportion idle_proportion(const SimResult& r) {
    IdleProportion out;
    for (const auto& p : r.pids) out.per_pid.push_back(p.idle_fraction);
    out.global = r.global_idle;
    return out;
}

void write_trace_csv(std::ostream& out, const SimResult& r) {
    std::ostringstream buf;
    buf << std::setprecision(10);
    buf << "step,pid,norm_cost,bound,s_k,idle_frac\n";
    for (const auto& row : r.trace.rows) {
        buf << row.step << ',';
        if (row.pid < 0) {
            buf << "all";
        } else {
            buf << row.pid;
        }
        buf << ',' << row.norm_cost << ',' << row.bound << ',' << row.s_k << ',' << row.idle_frac << '\n';
    }
    buf << "TOTAL," << r.cost << ',' << r.global_idle << '\n';
    out << buf.str();
}

}  // namespace diter::sim
