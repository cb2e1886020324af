#include "diter/oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace diter::oracle {

namespace {

double v_at(const std::vector<double>& v, NodeId i, NodeId n) { return v.empty() ? 1.0 / n : v[i]; }

}  // namespace

std::vector<double> apply_operator(const Graph& g, double damping, const std::vector<double>& personalization,
                                   const std::vector<double>& x) {
    const NodeId n = g.num_nodes();
    std::vector<double> next(n, 0.0);
    double dangling_mass = 0.0;
    for (NodeId j = 0; j < n; ++j) {
        const auto kids = g.children(j);
        if (kids.empty()) {
            dangling_mass += x[j];
            continue;
        }
        const double share = damping * x[j] / static_cast<double>(kids.size());
        for (NodeId i : kids) next[i] += share;
    }
    const double spread = damping * dangling_mass / n;
    for (NodeId i = 0; i < n; ++i) next[i] += spread + (1.0 - damping) * v_at(personalization, i, n);
    return next;
}

double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("l1_distance: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

PowerResult power_iteration(const Graph& g, double damping, const std::vector<double>& personalization,
                            double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
    const NodeId n = g.num_nodes();
    PowerResult r;
    r.x.resize(n);
    for (NodeId i = 0; i < n; ++i) r.x[i] = v_at(personalization, i, n);
    for (;;) {
        auto next = apply_operator(g, damping, personalization, r.x);
        ++r.iterations;
        const double change = l1_distance(next, r.x);
        r.x = std::move(next);
        if (change <= tol) break;
    }
    return r;
}

std::vector<double> completed_matrix(const Graph& g) {
    const NodeId n = g.num_nodes();
    std::vector<double> q(static_cast<std::size_t>(n) * n, 0.0);
    for (NodeId j = 0; j < n; ++j) {
        const auto kids = g.children(j);
        if (kids.empty()) {
            for (NodeId i = 0; i < n; ++i) q[static_cast<std::size_t>(i) * n + j] = 1.0 / n;
        } else {
            for (NodeId i : kids) q[static_cast<std::size_t>(i) * n + j] = 1.0 / kids.size();
        }
    }
    return q;
}

std::vector<double> dense_solve(const Graph& g, double damping, const std::vector<double>& personalization) {
    const NodeId n = g.num_nodes();
    if (n > 500) throw std::invalid_argument("dense_solve refuses N > 500");
    auto a = completed_matrix(g);
    for (auto& v : a) v *= -damping;
    for (NodeId i = 0; i < n; ++i) a[static_cast<std::size_t>(i) * n + i] += 1.0;
    std::vector<double> b(n);
    for (NodeId i = 0; i < n; ++i) b[i] = (1.0 - damping) * v_at(personalization, i, n);

    auto at = [&](NodeId r, NodeId c) -> double& { return a[static_cast<std::size_t>(r) * n + c]; };
    for (NodeId col = 0; col < n; ++col) {
        NodeId pivot = col;
        for (NodeId r = col + 1; r < n; ++r) {
            if (std::abs(at(r, col)) > std::abs(at(pivot, col))) pivot = r;
        }
        if (at(pivot, col) == 0.0) throw std::runtime_error("dense_solve: singular system");
        if (pivot != col) {
            for (NodeId c = 0; c < n; ++c) std::swap(at(pivot, c), at(col, c));
            std::swap(b[pivot], b[col]);
        }
        for (NodeId r = col + 1; r < n; ++r) {
            const double factor = at(r, col) / at(col, col);
            if (factor == 0.0) continue;
            for (NodeId c = col; c < n; ++c) at(r, c) -= factor * at(col, c);
            b[r] -= factor * b[col];
        }
    }
    std::vector<double> x(n);
    for (NodeId r = n; r-- > 0;) {
        double s = b[r];
        for (NodeId c = r + 1; c < n; ++c) s -= at(r, c) * x[c];
        x[r] = s / at(r, r);
    }
    return x;
}

}  // namespace diter::oracle
