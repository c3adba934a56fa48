#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace doatrack {

/// Cost matrix for 2D assignment. Entries may be +infinity to forbid a
/// row/column pairing. Feasibility requires rows <= cols and a complete
/// matching over finite entries.
using CostMatrix = Eigen::MatrixXd;

struct Assignment {
    std::vector<int> col_of_row;  // one distinct column per row
    double cost = 0.0;
};

struct NoFeasibleAssignment : std::runtime_error {
    NoFeasibleAssignment() : std::runtime_error("no feasible assignment") {}
};

/// Minimum-cost assignment of every row to a distinct column. Forbidden
/// (+inf) entries are never selected. Among cost ties the lexicographically
/// smallest column vector is returned, so results are reproducible.
/// Throws NoFeasibleAssignment if no complete finite matching exists.
Assignment solve_optimal(const CostMatrix& cost);

/// The min(k, #feasible) cheapest assignments in nondecreasing cost order
/// (ties ordered by column vector), pairwise distinct; the first element
/// equals solve_optimal. Murty partitioning over a Jonker-Volgenant solver.
std::vector<Assignment> solve_k_best(const CostMatrix& cost, int k);

}  // namespace doatrack
