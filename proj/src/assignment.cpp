#include "doatrack/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace doatrack {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Jonker-Volgenant shortest-augmenting-path solver. Columns are 1-based
// internally (index 0 is the virtual start of the alternating path).
struct JvState {
    std::vector<int> p;       // p[j] = row (1-based) matched to column j; 0 = free
    std::vector<double> u;    // row potentials, u[0] scratch
    std::vector<double> v;    // column potentials, v[0] scratch
};

// Augment row i (1-based) along a shortest alternating path, updating the
// potentials. Returns false when no finite path exists.
bool jv_augment(const Eigen::MatrixXd& cost, JvState& s, int i) {
    const int n = static_cast<int>(cost.cols());
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    std::vector<int> way(n + 1, 0);
    s.p[0] = i;
    int j0 = 0;
    do {
        used[j0] = 1;
        const int i0 = s.p[j0];
        int j1 = 0;
        double delta = kInf;
        for (int j = 1; j <= n; ++j) {
            if (used[j]) continue;
            const double c = cost(i0 - 1, j - 1);
            if (c < kInf) {
                const double cur = c - s.u[i0] - s.v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
            }
            if (minv[j] < delta) {
                delta = minv[j];
                j1 = j;
            }
        }
        if (!(delta < kInf)) {
            s.p[0] = 0;
            return false;
        }
        for (int j = 0; j <= n; ++j) {
            if (used[j]) {
                s.u[s.p[j]] += delta;
                s.v[j] -= delta;
            } else {
                minv[j] -= delta;
            }
        }
        j0 = j1;
    } while (s.p[j0] != 0);
    do {
        const int j1 = way[j0];
        s.p[j0] = s.p[j1];
        j0 = j1;
    } while (j0);
    s.p[0] = 0;
    return true;
}

// Full solve; returns false on infeasibility (no complete matching).
bool jv_solve(const Eigen::MatrixXd& cost, std::vector<int>& col_of_row,
              JvState* state_out = nullptr) {
    const int m = static_cast<int>(cost.rows());
    const int n = static_cast<int>(cost.cols());
    if (m > n) return false;
    JvState s;
    s.p.assign(n + 1, 0);
    s.u.assign(m + 1, 0.0);
    s.v.assign(n + 1, 0.0);
    for (int i = 1; i <= m; ++i)
        if (!jv_augment(cost, s, i)) return false;
    col_of_row.assign(m, -1);
    for (int j = 1; j <= n; ++j)
        if (s.p[j] != 0) col_of_row[s.p[j] - 1] = j - 1;
    if (state_out != nullptr) *state_out = std::move(s);
    return true;
}

double matching_cost(const Eigen::MatrixXd& cost, const std::vector<int>& col_of_row) {
    double total = 0.0;
    for (int i = 0; i < static_cast<int>(col_of_row.size()); ++i)
        total += cost(i, col_of_row[i]);
    return total;
}

double cost_tolerance(double reference) {
    return 1e-9 * std::max(1.0, std::abs(reference));
}

// Optimal cost of the subproblem where rows [0, fixed) are pinned to
// `fixed_cols` and the remaining rows are free over the unused columns.
// Returns +inf when infeasible.
double restricted_optimum(const Eigen::MatrixXd& cost, const std::vector<int>& fixed_cols,
                          int fixed) {
    const int m = static_cast<int>(cost.rows());
    const int n = static_cast<int>(cost.cols());
    double base = 0.0;
    std::vector<char> taken(n, 0);
    for (int i = 0; i < fixed; ++i) {
        base += cost(i, fixed_cols[i]);
        taken[fixed_cols[i]] = 1;
    }
    if (fixed == m) return base;
    std::vector<int> col_map;
    for (int j = 0; j < n; ++j)
        if (!taken[j]) col_map.push_back(j);
    Eigen::MatrixXd sub(m - fixed, static_cast<int>(col_map.size()));
    for (int i = fixed; i < m; ++i)
        for (std::size_t j = 0; j < col_map.size(); ++j)
            sub(i - fixed, static_cast<int>(j)) = cost(i, col_map[j]);
    std::vector<int> sol;
    if (!jv_solve(sub, sol)) return kInf;
    return base + matching_cost(sub, sol);
}

// Lexicographically smallest column vector among minimum-cost assignments.
std::vector<int> canonicalize(const Eigen::MatrixXd& cost, double optimal_cost) {
    const int m = static_cast<int>(cost.rows());
    const int n = static_cast<int>(cost.cols());
    const double tol = cost_tolerance(optimal_cost);
    std::vector<int> chosen(m, -1);
    std::vector<char> taken(n, 0);
    for (int i = 0; i < m; ++i) {
        bool fixed = false;
        for (int j = 0; j < n && !fixed; ++j) {
            if (taken[j] || !(cost(i, j) < kInf)) continue;
            chosen[i] = j;
            if (restricted_optimum(cost, chosen, i + 1) <= optimal_cost + tol) {
                taken[j] = 1;
                fixed = true;
            }
        }
        if (!fixed) throw NoFeasibleAssignment();  // cannot happen on a feasible optimum
    }
    return chosen;
}

// True when a second distinct assignment attains the optimal cost. By LP
// duality every optimal assignment lives on the tight subgraph (zero reduced
// cost under the final potentials), so a second optimum exists iff a matched
// row can be rerouted through tight edges: an alternating path reaching a
// free column, or an alternating cycle. Checked by DFS over columns.
bool optimum_is_tied(const Eigen::MatrixXd& cost, const std::vector<int>& solution,
                     const JvState& s, double optimal_cost) {
    const int m = static_cast<int>(cost.rows());
    const int n = static_cast<int>(cost.cols());
    const double tol = cost_tolerance(optimal_cost);

    // arcs[a] = columns reachable by moving the row matched to column a.
    std::vector<std::vector<int>> arcs(n);
    std::vector<char> free_col(n, 1);
    for (int i = 0; i < m; ++i) free_col[solution[i]] = 0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == solution[i]) continue;
            const double c = cost(i, j);
            if (c < kInf && std::abs(c - s.u[i + 1] - s.v[j + 1]) <= tol)
                arcs[solution[i]].push_back(j);
        }
    }
    // DFS from every matched column: a tie exists iff a free column or an
    // already-active column (cycle) is reachable.
    std::vector<char> visited(n, 0), active(n, 0);
    std::vector<std::pair<int, std::size_t>> stack;
    for (int start = 0; start < n; ++start) {
        if (free_col[start] || visited[start]) continue;
        stack.push_back({start, 0});
        active[start] = 1;
        while (!stack.empty()) {
            auto& [col, next] = stack.back();
            if (next == arcs[col].size()) {
                active[col] = 0;
                visited[col] = 1;
                stack.pop_back();
                continue;
            }
            const int to = arcs[col][next++];
            if (free_col[to] || active[to]) return true;
            if (!visited[to]) {
                stack.push_back({to, 0});
                active[to] = 1;
            }
        }
    }
    return false;
}

struct MurtyNode {
    Eigen::MatrixXd cost;     // with partition pins/forbids applied
    std::vector<int> solution;
    double total = 0.0;
    int first_free_row = 0;   // rows before this are pinned in `cost`

    bool operator>(const MurtyNode& o) const {
        if (total != o.total) return total > o.total;
        return solution > o.solution;
    }
};

}  // namespace

Assignment solve_optimal(const CostMatrix& cost) {
    if (cost.rows() == 0) return {{}, 0.0};
    std::vector<int> sol;
    JvState state;
    if (!jv_solve(cost, sol, &state)) throw NoFeasibleAssignment();
    double total = matching_cost(cost, sol);
    if (optimum_is_tied(cost, sol, state, total)) {
        sol = canonicalize(cost, total);
        total = matching_cost(cost, sol);
    }
    return {std::move(sol), total};
}

std::vector<Assignment> solve_k_best(const CostMatrix& cost, int k) {
    if (k < 1) throw std::invalid_argument("solve_k_best: k must be >= 1");
    if (cost.rows() == 0) return {{{}, 0.0}};

    const Assignment best = solve_optimal(cost);  // canonical tie-break at the root

    std::priority_queue<MurtyNode, std::vector<MurtyNode>, std::greater<MurtyNode>> queue;
    queue.push({cost, best.col_of_row, best.cost, 0});

    std::vector<Assignment> out;
    while (!queue.empty() && static_cast<int>(out.size()) < k) {
        MurtyNode node = queue.top();
        queue.pop();
        out.push_back({node.solution, node.total});
        if (static_cast<int>(out.size()) == k) break;  // last node needs no partition

        // Partition: child t forbids the node's choice in free row t and pins
        // all earlier free rows to the node's choices.
        const int m = static_cast<int>(node.solution.size());
        Eigen::MatrixXd child_cost = node.cost;
        for (int t = node.first_free_row; t < m; ++t) {
            if (t > node.first_free_row) {
                for (int j = 0; j < child_cost.cols(); ++j)
                    if (j != node.solution[t - 1]) child_cost(t - 1, j) = kInf;
            }
            const double forbidden = child_cost(t, node.solution[t]);
            child_cost(t, node.solution[t]) = kInf;
            std::vector<int> sol;
            if (jv_solve(child_cost, sol)) {
                MurtyNode child;
                child.cost = child_cost;
                child.solution = std::move(sol);
                child.total = matching_cost(child_cost, child.solution);
                child.first_free_row = t;
                queue.push(std::move(child));
            }
            child_cost(t, node.solution[t]) = forbidden;
        }
    }
    return out;
}

}  // namespace doatrack
