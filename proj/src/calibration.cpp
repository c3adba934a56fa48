#include "doatrack/calibration.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "doatrack/assignment.hpp"

namespace doatrack {

namespace {

constexpr double kPdMin = 1e-4;
constexpr double kPdMax = 1.0 - 1e-4;
constexpr double kLambdaMin = 1e-6;

}  // namespace

FrameAssignment associate_frame(const AnnotatedFrame& frame, double pd, double kappa,
                                double lambda_c) {
    if (!(pd > 0.0 && pd < 1.0))
        throw std::invalid_argument("associate_frame: pd must be in (0, 1)");
    if (!(lambda_c > 0.0))
        throw std::invalid_argument("associate_frame: lambda_c must be > 0");
    const int m = static_cast<int>(frame.measured_doas.size());
    const int n = static_cast<int>(frame.truth_doas.size());
    FrameAssignment out;
    out.labels.assign(m, 0);
    if (m == 0) return out;

    const double log_ratio = std::log(pd) - std::log1p(-pd);
    const double log_clutter = std::log(lambda_c) - std::log(clutter_constant(frame.fov));
    CostMatrix cost = CostMatrix::Constant(m, n + m, std::numeric_limits<double>::infinity());
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < n; ++i)
            cost(j, i) =
                -(log_ratio + vmf_log_density(frame.measured_doas[j], {frame.truth_doas[i], kappa}));
        cost(j, n + j) = -log_clutter;
    }
    const Assignment a = solve_optimal(cost);
    for (int j = 0; j < m; ++j) out.labels[j] = a.col_of_row[j] < n ? a.col_of_row[j] + 1 : 0;
    return out;
}

ClosedFormParams closed_form_params(const std::vector<AnnotatedFrame>& frames,
                                    const std::vector<FrameAssignment>& assignments) {
    if (frames.empty() || frames.size() != assignments.size())
        throw std::invalid_argument("closed_form_params: frame/assignment mismatch");
    long clutter_count = 0, detection_count = 0, object_count = 0;
    double dot_sum = 0.0;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const auto& f = frames[k];
        const auto& a = assignments[k].labels;
        object_count += static_cast<long>(f.truth_doas.size());
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (a[j] == 0) {
                ++clutter_count;
            } else {
                ++detection_count;
                dot_sum += f.truth_doas[static_cast<std::size_t>(a[j] - 1)].dot(f.measured_doas[j]);
            }
        }
    }

    ClosedFormParams out;
    out.lambda_c =
        std::max(kLambdaMin, static_cast<double>(clutter_count) / static_cast<double>(frames.size()));
    out.pd = object_count > 0
                 ? static_cast<double>(detection_count) / static_cast<double>(object_count)
                 : 0.0;
    out.pd = std::clamp(out.pd, kPdMin, kPdMax);
    if (detection_count == 0) {
        out.degenerate = true;
        out.r_bar = 0.0;
        out.kappa = 1.0;
        out.kappa_approx = 1.0;
        return out;
    }
    out.r_bar = dot_sum / static_cast<double>(detection_count);
    if (out.r_bar <= 0.0)
        throw std::invalid_argument("closed_form_params: mean resultant length <= 0");
    if (out.r_bar >= 1.0) out.r_bar = 1.0 - 1e-12;
    out.kappa = bessel_ratio_inverse(out.r_bar);
    out.kappa_approx = 1.0 / (1.0 - out.r_bar);
    return out;
}

double log_likelihood(const std::vector<AnnotatedFrame>& frames,
                      const std::vector<FrameAssignment>& assignments, double pd, double kappa,
                      double lambda_c) {
    if (frames.size() != assignments.size())
        throw std::invalid_argument("log_likelihood: frame/assignment mismatch");
    double total = 0.0;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const auto& f = frames[k];
        const auto& a = assignments[k].labels;
        const double log_clutter = std::log(lambda_c) - std::log(clutter_constant(f.fov));
        int detected = 0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (a[j] == 0) {
                total += log_clutter;
            } else {
                ++detected;
                total += std::log(pd) +
                         vmf_log_density(f.measured_doas[j],
                                         {f.truth_doas[static_cast<std::size_t>(a[j] - 1)], kappa});
            }
        }
        const int missed = static_cast<int>(f.truth_doas.size()) - detected;
        if (missed > 0) total += missed * std::log1p(-pd);
    }
    total -= static_cast<double>(frames.size()) * lambda_c;
    return total;
}

CalibrationResult coordinate_ascent(const std::vector<AnnotatedFrame>& frames,
                                    const CalibrationParams& init, int max_rounds, double tol) {
    if (frames.empty()) throw std::invalid_argument("coordinate_ascent: no frames");
    CalibrationResult res;
    double pd = std::clamp(init.pd, kPdMin, kPdMax);
    double kappa = std::max(init.kappa, 1e-6);
    double lambda_c = std::max(init.lambda_c, kLambdaMin);

    double prev_bound = -std::numeric_limits<double>::infinity();
    std::vector<FrameAssignment> prev_assignments;
    for (int round = 0; round < max_rounds; ++round) {
        std::vector<FrameAssignment> assignments;
        assignments.reserve(frames.size());
        for (const auto& f : frames) assignments.push_back(associate_frame(f, pd, kappa, lambda_c));

        const ClosedFormParams p = closed_form_params(frames, assignments);
        pd = p.pd;
        kappa = p.kappa;
        lambda_c = p.lambda_c;
        res.degenerate = p.degenerate;

        const double bound = log_likelihood(frames, assignments, pd, kappa, lambda_c);
        res.bound_trace.push_back(bound);
        res.iterations = round + 1;
        bool converged = false;
        if (round > 0) {
            converged = (bound - prev_bound < tol) || (assignments == prev_assignments);
        }
        res.assignments = std::move(assignments);
        res.lower_bound = bound;
        if (converged || res.degenerate) break;
        prev_bound = bound;
        prev_assignments = res.assignments;
    }
    res.pd = pd;
    res.kappa = kappa;
    res.lambda_c = lambda_c;
    return res;
}

}  // namespace doatrack
