#pragma once

#include <Eigen/Dense>
#include <vector>

namespace doatrack {

/// GOSPA parameters; alpha is fixed at 2 (the decomposable variant).
struct GospaParams {
    double c = 3.0;   // cutoff, m
    double p = 2.0;   // exponent, >= 1
    double alpha = 2.0;
};

/// GOSPA value with its localization / missed / false decomposition.
/// total^p = localization^p + missed^p + false_^p.
struct GospaResult {
    double total = 0.0;
    double localization = 0.0;
    double missed = 0.0;
    double false_ = 0.0;
};

/// Exact GOSPA between finite sets of planar points: optimal partial
/// assignment with per-pair cost d^p (pairs at distance >= c are counted as
/// one missed plus one false element) and c^p/2 per unassigned element.
GospaResult gospa(const std::vector<Eigen::Vector2d>& truth,
                  const std::vector<Eigen::Vector2d>& estimate, const GospaParams& params);

/// sqrt((1/K) sum d_G^2) over the per-step results.
double rms_gospa_over_time(const std::vector<GospaResult>& per_step);

}  // namespace doatrack
