#pragma once

#include <cstdint>
#include <vector>

#include "diter/graph.hpp"

namespace diter::oracle {

struct PowerResult {
    std::vector<double> x;
    std::uint32_t iterations = 0;
};

/// Power iteration on the dangling-completed operator
///   X <- d Q X + d (dangling mass / N) 1 + (1 - d) V
/// starting from V, until the L1 change between iterates is <= tol.
/// Empty personalization means uniform.
PowerResult power_iteration(const Graph& g, double damping, const std::vector<double>& personalization,
                            double tol);

/// Dense completed transition matrix Q' (row-major, N x N); column j sums to 1.
std::vector<double> completed_matrix(const Graph& g);

/// Solves (I - d Q') X = (1 - d) V by Gaussian elimination with partial
/// pivoting. Refuses N > 500.
std::vector<double> dense_solve(const Graph& g, double damping, const std::vector<double>& personalization);

/// One application of the affine operator above.
std::vector<double> apply_operator(const Graph& g, double damping, const std::vector<double>& personalization,
                                   const std::vector<double>& x);

double l1_distance(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace diter::oracle
