#pragma once

#include <Eigen/Dense>

#include "doatrack/directional.hpp"
#include "doatrack/gaussian.hpp"
#include "doatrack/geometry.hpp"

namespace doatrack {

/// Object state is [px, vx, py, vy] in the local ground frame (m, m/s).
using ObjectState = Eigen::Vector4d;

/// Nearly-constant-velocity motion model with survival probability.
struct MotionModel {
    double tau = 0.0;       // s
    double sigma_q2 = 0.0;  // m^2/s^3
    double ps = 1.0;        // survival probability
    Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
    Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
};

/// F = I2 (x) [[1, tau], [0, 1]],
/// Q = sigma_q2 * I2 (x) [[tau^3/3, tau^2/2], [tau^2/2, tau]].
MotionModel build_cv(double tau, double sigma_q2, double ps);

/// Poisson birth rates and the velocity prior variance of new objects.
struct BirthModel {
    double lambda_bar_b = 0.0;          // expected births per step, k >= 1
    double lambda_bar_b_initial = 0.0;  // expected births at step 0
    double sigma_v2 = 0.0;              // m^2/s^2
};

/// DOA sensor model: VMF concentration, detection probability inside the
/// FoV, and clutter rate per frame.
struct MeasurementModel {
    double kappa = 0.0;
    double pd = 1.0;
    double lambda_c = 0.0;
    FovSpec fov;
};

/// Mean measurement direction h(x): the object ground position relative to
/// the drone, rotated into the camera frame and projected onto the sphere.
/// Depends on the positional components of x only. Throws when the object
/// coincides with the drone.
Eigen::Vector3d doa_mean(const ObjectState& x, const CameraPose& pose);

/// log VMF(z; h(x), kappa).
double measurement_log_likelihood(const Eigen::Vector3d& z, const ObjectState& x,
                                  const MeasurementModel& model, const CameraPose& pose);

/// Gaussian birth component for one frame. The angular uniform distribution
/// over the FoV rectangle (covariance diag(fx^2, fy^2)/12) is pushed through
/// the DOA and ground-projection maps with unscented sigma points; the
/// velocity prior is zero-mean with variance sigma_v2 per axis. Throws
/// std::domain_error when any sigma-point ray misses the ground.
struct BirthComponents {
    double lambda_bar = 0.0;
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();
    Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
};

BirthComponents birth_components(const CameraPose& pose, const BirthModel& birth,
                                 bool initial_step, double w0 = 1.0 / 3.0);

}  // namespace doatrack
