#pragma once

#include <Eigen/Dense>
#include <vector>

#include "doatrack/directional.hpp"

namespace doatrack {

/// One frame of calibration data: ground-truth DOAs (from annotated boxes)
/// and detector DOAs, both in the camera frame and inside the FoV.
struct AnnotatedFrame {
    std::vector<Eigen::Vector3d> truth_doas;
    std::vector<Eigen::Vector3d> measured_doas;
    FovSpec fov;
};

/// Per-measurement auxiliary labels: 0 = clutter, i >= 1 = generated by
/// truth object i. Nonzero labels are distinct within a frame.
struct FrameAssignment {
    std::vector<int> labels;

    bool operator==(const FrameAssignment&) const = default;
};

struct CalibrationParams {
    double pd = 0.9;
    double kappa = 20.0;
    double lambda_c = 0.5;
};

struct ClosedFormParams {
    double lambda_c = 0.0;
    double pd = 0.0;
    double r_bar = 0.0;
    double kappa = 0.0;         // exact Bessel-ratio inverse by bisection
    double kappa_approx = 0.0;  // 1 / (1 - r_bar) cross-check
    bool degenerate = false;    // no detections assigned anywhere
};

struct CalibrationResult {
    double pd = 0.0;
    double kappa = 0.0;
    double lambda_c = 0.0;
    std::vector<FrameAssignment> assignments;
    double lower_bound = 0.0;
    int iterations = 0;
    std::vector<double> bound_trace;  // lower bound after each round
    bool degenerate = false;
};

/// Most likely labeling of one frame's measurements given the parameters:
/// optimal assignment on the m x (n + m) matrix with object columns
/// -ln(pd l(z|y) / (1 - pd)) and a diagonal clutter column -ln(lambda_c/u_C)
/// per measurement. Requires 0 < pd < 1 and lambda_c > 0.
FrameAssignment associate_frame(const AnnotatedFrame& frame, double pd, double kappa,
                                double lambda_c);

/// Exact per-coordinate maximizers of the auxiliary-variable log-likelihood
/// for fixed assignments: clutter count average, empirical detection rate,
/// and kappa from the mean resultant length via Bessel-ratio inversion.
/// Outputs are clamped to the open domain (pd in [1e-4, 1-1e-4],
/// lambda_c >= 1e-6).
ClosedFormParams closed_form_params(const std::vector<AnnotatedFrame>& frames,
                                    const std::vector<FrameAssignment>& assignments);

/// Auxiliary-variable log-likelihood of the data under fixed assignments.
double log_likelihood(const std::vector<AnnotatedFrame>& frames,
                      const std::vector<FrameAssignment>& assignments, double pd, double kappa,
                      double lambda_c);

/// Coordinate ascent alternating associate_frame over all frames with the
/// closed-form parameter step until the lower bound improves by less than
/// `tol`, the assignments stop changing, or `max_rounds` is reached. The
/// bound trace is nondecreasing.
CalibrationResult coordinate_ascent(const std::vector<AnnotatedFrame>& frames,
                                    const CalibrationParams& init, int max_rounds = 100,
                                    double tol = 1e-6);

}  // namespace doatrack
