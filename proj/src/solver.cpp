#include "diter/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace diter {

void SolverConfig::validate(NodeId n) const {
    if (!(damping > 0.0 && damping < 1.0)) throw std::invalid_argument("damping must lie in (0, 1)");
    if (!(alpha > 1.0)) throw std::invalid_argument("alpha must be > 1");
    if (target_error && !(*target_error > 0.0)) throw std::invalid_argument("target error must be > 0");
    if (!(pool_drain_fraction >= 0.0 && pool_drain_fraction <= 1.0)) {
        throw std::invalid_argument("pool drain fraction must lie in [0, 1]");
    }
    if (!personalization.empty()) {
        if (personalization.size() != n) throw std::invalid_argument("personalization length differs from N");
        double sum = 0.0;
        for (double v : personalization) {
            if (!(v >= 0.0)) throw std::invalid_argument("personalization must be non-negative");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("personalization must sum to 1");
    }
}

double cost_scale(const Graph& g) { return g.num_edges() > 0 ? static_cast<double>(g.num_edges()) : 1.0; }

SolverState::SolverState(const Graph& g, const SolverConfig& cfg, NodeRange owned)
    : graph_(&g),
      owned_(owned),
      damping_(cfg.damping),
      alpha_(cfg.alpha),
      drain_fraction_(cfg.pool_drain_fraction),
      selection_(cfg.selection) {
    cfg.validate(g.num_nodes());
    if (owned.empty()) throw std::invalid_argument("owned node range is empty");
    if (owned.end > g.num_nodes()) throw std::out_of_range("owned node range exceeds graph");

    const NodeId n = g.num_nodes();
    f_.resize(owned.size());
    h_.assign(owned.size(), 0.0);
    touched_flag_.assign(owned.size(), 0);
    for (NodeId i = owned.begin; i < owned.end; ++i) {
        f_[local(i)] = (1.0 - damping_) * cfg.personalization_at(i, n);
    }
    rebuild_weights();
    recompute_residual();
    for (std::size_t k = 0; k < f_.size(); ++k) threshold_ = std::max(threshold_, f_[k] * weight_[k]);
    cursor_ = owned.begin;
}

double SolverState::weight_of(NodeId i) const {
    if (selection_ == Selection::raw) return 1.0;
    const double in = graph_->in_degree(i);
    const double out = graph_->out_degree(i);
    return 1.0 / ((in + 1.0) * (out + 1.0));
}

void SolverState::rebuild_weights() {
    weight_.resize(owned_.size());
    for (NodeId i = owned_.begin; i < owned_.end; ++i) weight_[local(i)] = weight_of(i);
}

double SolverState::recompute_residual() {
    residual_ = std::accumulate(f_.begin(), f_.end(), 0.0) + pool_;
    return residual_;
}

std::uint64_t SolverState::diffuse_node(NodeId i) {
    if (!owned_.contains(i)) {
        throw std::logic_error("diffuse_node: node " + std::to_string(i) + " is not owned");
    }
    const std::size_t li = local(i);
    const double sent = f_[li];
    if (sent <= 0.0) {
        f_[li] = 0.0;
        return 0;
    }
    f_[li] = 0.0;
    h_[li] += sent;

    const auto kids = graph_->children(i);
    std::uint64_t work = 1;
    if (kids.empty()) {
        pool_ += damping_ * sent;
        residual_ -= (1.0 - damping_) * sent;
    } else {
        const double share = damping_ * sent / static_cast<double>(kids.size());
        std::uint64_t internal = 0;
        for (NodeId c : kids) {
            if (owned_.contains(c)) {
                f_[local(c)] += share;
                ++internal;
            }
        }
        const std::uint64_t external = kids.size() - internal;
        if (external == 0) {
            residual_ -= (1.0 - damping_) * sent;
        } else {
            residual_ += static_cast<double>(internal) * share - sent;
            deferred_ += static_cast<double>(external) * share;
            if (!touched_flag_[li]) {
                touched_flag_[li] = 1;
                touched_.push_back(i);
            }
        }
        work = std::max<std::uint64_t>(1, internal);
    }
    if (residual_ < 0.0) residual_ = 0.0;
    ops_ += work;
    return work;
}

std::uint64_t SolverState::drain_pool() {
    const NodeId n = graph_->num_nodes();
    const double per_node = pool_ / n;
    for (double& x : f_) x += per_node;
    const NodeId outside = n - owned_.size();
    if (outside > 0) {
        uniform_export_ += per_node;
        residual_ -= per_node * outside;
        if (residual_ < 0.0) residual_ = 0.0;
    }
    pool_ = 0.0;
    ops_ += owned_.size();
    return owned_.size();
}

std::uint64_t SolverState::scan_pass(double budget, double stop_residual) {
    std::uint64_t work = 0;
    while (residual_ > stop_residual && static_cast<double>(work) < budget) {
        if (pool_ > 0.0 && (pool_ > drain_fraction_ * residual_ || pool_ >= residual_)) {
            work += drain_pool();
            continue;
        }
        const std::size_t li = local(cursor_);
        if (f_[li] > 0.0 && f_[li] * weight_[li] > threshold_) {
            work += diffuse_node(cursor_);
            diffused_this_cycle_ = true;
        }
        if (++cursor_ == owned_.end) {
            cursor_ = owned_.begin;
            recompute_residual();
            if (!diffused_this_cycle_) {
                // every key underflowed below the smallest threshold
                const double lowered = threshold_ / alpha_;
                if (lowered == threshold_) break;
                threshold_ = lowered;
            }
            diffused_this_cycle_ = false;
        }
    }
    return work;
}

void SolverState::add_fluid(NodeId i, double mass) {
    if (!owned_.contains(i)) {
        throw std::logic_error("add_fluid: node " + std::to_string(i) + " is not owned");
    }
    f_[local(i)] += mass;
    residual_ += mass;
}

std::uint64_t SolverState::add_uniform(NodeRange span, double per_node) {
    const NodeId lo = std::max(span.begin, owned_.begin);
    const NodeId hi = std::min(span.end, owned_.end);
    if (lo >= hi) return 0;
    for (NodeId i = lo; i < hi; ++i) f_[local(i)] += per_node;
    residual_ += per_node * (hi - lo);
    return hi - lo;
}

std::vector<NodeId> SolverState::take_touched() {
    for (NodeId i : touched_) touched_flag_[local(i)] = 0;
    std::vector<NodeId> out;
    out.swap(touched_);
    return out;
}

double SolverState::take_uniform_export() {
    const double u = uniform_export_;
    uniform_export_ = 0.0;
    return u;
}

std::vector<SolverState::Slot> SolverState::release(NodeRange keep) {
    if (keep.empty() || keep.begin < owned_.begin || keep.end > owned_.end ||
        (keep.begin != owned_.begin && keep.end != owned_.end)) {
        throw std::invalid_argument("release: kept range must be a nonempty prefix or suffix of the owned range");
    }
    if (!touched_.empty()) throw std::logic_error("release: pending external increments must be exported first");

    std::vector<Slot> out;
    for (NodeId i = owned_.begin; i < owned_.end; ++i) {
        if (!keep.contains(i)) out.push_back({i, f_[local(i)], h_[local(i)]});
    }
    const std::size_t off = keep.begin - owned_.begin;
    f_ = std::vector<double>(f_.begin() + off, f_.begin() + off + keep.size());
    h_ = std::vector<double>(h_.begin() + off, h_.begin() + off + keep.size());
    touched_flag_.assign(keep.size(), 0);
    owned_ = keep;
    rebuild_weights();
    recompute_residual();
    if (!owned_.contains(cursor_)) {
        cursor_ = owned_.begin;
        diffused_this_cycle_ = false;
    }
    return out;
}

void SolverState::absorb(std::span<const Slot> slots) {
    if (slots.empty()) return;
    const NodeId lo = slots.front().node;
    const NodeId hi = slots.back().node + 1;
    if (hi - lo != slots.size() || (hi != owned_.begin && lo != owned_.end)) {
        throw std::invalid_argument("absorb: slots must be contiguous and adjacent to the owned range");
    }
    std::vector<double> nf;
    std::vector<double> nh;
    const NodeRange grown{std::min(lo, owned_.begin), std::max(hi, owned_.end)};
    nf.reserve(grown.size());
    nh.reserve(grown.size());
    if (hi == owned_.begin) {
        for (const auto& s : slots) {
            nf.push_back(s.f);
            nh.push_back(s.h);
        }
    }
    nf.insert(nf.end(), f_.begin(), f_.end());
    nh.insert(nh.end(), h_.begin(), h_.end());
    if (lo == owned_.end) {
        for (const auto& s : slots) {
            nf.push_back(s.f);
            nh.push_back(s.h);
        }
    }
    f_ = std::move(nf);
    h_ = std::move(nh);
    touched_flag_.assign(grown.size(), 0);
    for (NodeId i : touched_) touched_flag_[i - grown.begin] = 1;
    owned_ = grown;
    rebuild_weights();
    recompute_residual();
}

SolveResult solve_single(const Graph& g, const SolverConfig& cfg) {
    if (g.num_nodes() == 0) throw std::invalid_argument("graph is empty");
    SolverState state(g, cfg, {0, g.num_nodes()});
    const double stop = (1.0 - cfg.damping) * cfg.target_for(g.num_nodes());
    const double chunk = cost_scale(g);
    const double max_ops = 1e4 * chunk;
    while (state.residual() > stop) {
        state.scan_pass(chunk, stop);
        if (static_cast<double>(state.ops_done()) > max_ops) {
            throw std::runtime_error("solve_single: no convergence within 10^4 L operations");
        }
    }
    SolveResult r;
    r.h.assign(state.history().begin(), state.history().end());
    r.ops = state.ops_done();
    r.normalized_cost = static_cast<double>(r.ops) / chunk;
    r.residual = state.residual();
    return r;
}

}  // namespace diter
