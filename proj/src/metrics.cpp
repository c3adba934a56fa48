#include "doatrack/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "doatrack/assignment.hpp"

namespace doatrack {

GospaResult gospa(const std::vector<Eigen::Vector2d>& truth,
                  const std::vector<Eigen::Vector2d>& estimate, const GospaParams& params) {
    if (!(params.c > 0.0) || !(params.p >= 1.0) || params.alpha != 2.0)
        throw std::invalid_argument("gospa: require c > 0, p >= 1, alpha = 2");
    const int n_t = static_cast<int>(truth.size());
    const int n_e = static_cast<int>(estimate.size());
    const double cp = std::pow(params.c, params.p);
    const double half_cp = cp / 2.0;

    // Rows are truth elements; columns are estimates plus one dummy per row.
    // Matching a pair removes BOTH the missed and the false half-penalty, so
    // against a dummy cost of c^p a pair is worth taking exactly when
    // d^p < c^p; the total is then sum(d^p) - #matched c^p + (n_t+n_e) c^p/2.
    // Pairs at distance >= c are forbidden: matching them ties with leaving
    // both elements unassigned, and the unmatched labeling is the
    // decomposition convention reported here.
    CostMatrix cost = CostMatrix::Constant(n_t, n_e + n_t,
                                           std::numeric_limits<double>::infinity());
    for (int i = 0; i < n_t; ++i) {
        for (int j = 0; j < n_e; ++j) {
            const double d = (truth[i] - estimate[j]).norm();
            if (d < params.c) cost(i, j) = std::pow(d, params.p);
        }
        cost(i, n_e + i) = cp;
    }

    double loc_p = 0.0;
    int missed_count = 0;
    std::vector<char> est_used(n_e, 0);
    if (n_t > 0) {
        const Assignment a = solve_optimal(cost);
        for (int i = 0; i < n_t; ++i) {
            if (a.col_of_row[i] < n_e) {
                loc_p += cost(i, a.col_of_row[i]);
                est_used[a.col_of_row[i]] = 1;
            } else {
                ++missed_count;
            }
        }
    }
    int false_count = 0;
    for (int j = 0; j < n_e; ++j)
        if (!est_used[j]) ++false_count;

    GospaResult out;
    const double missed_p = half_cp * missed_count;
    const double false_p = half_cp * false_count;
    out.localization = std::pow(loc_p, 1.0 / params.p);
    out.missed = std::pow(missed_p, 1.0 / params.p);
    out.false_ = std::pow(false_p, 1.0 / params.p);
    out.total = std::pow(loc_p + missed_p + false_p, 1.0 / params.p);
    return out;
}

double rms_gospa_over_time(const std::vector<GospaResult>& per_step) {
    if (per_step.empty()) throw std::invalid_argument("rms_gospa_over_time: empty input");
    double sum = 0.0;
    for (const auto& g : per_step) sum += g.total * g.total;
    return std::sqrt(sum / static_cast<double>(per_step.size()));
}

}  // namespace doatrack
