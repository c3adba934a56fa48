#pragma once

#include <Eigen/Dense>
#include <vector>

#include "doatrack/gaussian.hpp"
#include "doatrack/models.hpp"

namespace doatrack {

inline constexpr int kStateDim = 4;

/// One end-time component of a trajectory density: the probability that the
/// trajectory ends at `end_step`, with a Gaussian over the stacked states.
/// Only the last `window_cov.rows()/4` states keep joint correlations; older
/// states store frozen 4x4 marginal covariances (the L-scan layout).
struct TrajectoryComponent {
    double beta = 1.0;
    int end_step = 0;
    Eigen::VectorXd mean;                 // stacked [x^1; ...; x^len], 4*len
    Eigen::MatrixXd window_cov;           // joint covariance of the last W states
    std::vector<Eigen::Matrix4d> frozen;  // marginals of the len - W oldest states

    int window_len() const { return static_cast<int>(window_cov.rows()) / kStateDim; }
    int length() const { return static_cast<int>(frozen.size()) + window_len(); }

    /// Marginal of the state at step offset `i` (0 = birth step).
    GaussianDensity marginal(int i) const;

    /// Marginal of the final state.
    GaussianDensity last_state() const;
};

/// Trajectory density with a deterministic birth step and a mixture over end
/// times. Beta weights sum to 1.
struct TrajectoryGaussian {
    int birth_step = 0;
    std::vector<TrajectoryComponent> components;  // ascending end_step, unique

    const TrajectoryComponent* component_ending(int step) const;
    TrajectoryComponent* component_ending(int step);
    double alive_mass(int current_step) const;
    void normalize();

    /// Drop components below `min_beta` and renormalize. Keeps at least the
    /// heaviest component.
    void prune_components(double min_beta);
};

/// Single-state trajectory born at `step`.
TrajectoryGaussian make_single_state(int step, const GaussianDensity& g);

/// Survival-weighted prediction at `current_step`: the alive component's
/// mass splits into a dies-here copy (factor 1 - ps) and an extension to
/// current_step + 1 (factor ps) whose stacked density is augmented with the
/// predicted state. Dead components pass through unchanged.
TrajectoryGaussian trajectory_predict(const TrajectoryGaussian& tg, const MotionModel& motion,
                                      int current_step);

/// Condition the alive component's window on a replacement density for its
/// last state block (the IPLF posterior). States outside the window are
/// untouched. Components not ending at `current_step` pass through.
TrajectoryGaussian trajectory_update(const TrajectoryGaussian& tg, int current_step,
                                     const GaussianDensity& posterior_current);

/// L-scan truncation: freeze states older than the last L steps of each
/// component, dropping their cross-covariances and keeping their marginals.
TrajectoryGaussian l_scan_truncate(const TrajectoryGaussian& tg, int window);

}  // namespace doatrack
