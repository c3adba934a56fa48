#pragma once

#include <Eigen/Dense>
#include <functional>

#include "doatrack/gaussian.hpp"
#include "doatrack/models.hpp"

namespace doatrack {

/// Conditional measurement moments E[z|x] and Cov[z|x] at a single state.
struct ConditionalMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// State -> conditional measurement moments.
using MomentMap = std::function<ConditionalMoments(const Eigen::VectorXd&)>;

/// State -> log p(z|x) for a fixed measurement (used by the L1 marginal
/// likelihood correction).
using LogLikelihoodFn = std::function<double(const Eigen::VectorXd&)>;

/// Best affine fit z ~ A x + b with residual covariance Omega of the moment
/// map under `prior`, computed by sigma-point statistical linear regression.
struct LinearizationResult {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::MatrixXd Omega;
};

LinearizationResult slr(const MomentMap& map, const GaussianDensity& prior,
                        double ut_w0 = 1.0 / 3.0);

enum class LikelihoodMode {
    L0,  // Gaussian predicted-measurement density under the final linearization
    L1,  // sigma-point quadrature of the true likelihood against the posterior
};

struct IplfOptions {
    int max_iters = 5;
    LikelihoodMode likelihood = LikelihoodMode::L1;
    double kld_threshold = 1e-2;
    double ut_w0 = 1.0 / 3.0;
};

struct IplfResult {
    GaussianDensity posterior;
    double log_marginal = 0.0;
    int iterations = 0;
    bool diverged = false;
};

/// Iterated posterior linearisation update: statistically linearize at the
/// current posterior iterate, apply the Kalman-form update with (A, b, Omega)
/// against the prior, and stop when KLD(new || old) drops below the threshold
/// or max_iters is reached. max_iters = 1 is the sigma-point Kalman (UKF)
/// update. If the KLD increases three times in a row the best iterate by
/// marginal likelihood is returned with `diverged` set.
///
/// `log_likelihood` is required for L1 mode; with a null function the L0
/// marginal is returned.
IplfResult iplf_update(const GaussianDensity& prior, const Eigen::VectorXd& z,
                       const MomentMap& map, const IplfOptions& opts,
                       const LogLikelihoodFn& log_likelihood = nullptr);

/// Squared Mahalanobis distance of z under the SLR-linearized predicted
/// measurement density at `prior` (the ellipsoidal gating statistic).
double gate_distance2(const GaussianDensity& prior, const Eigen::VectorXd& z,
                      const MomentMap& map, double ut_w0 = 1.0 / 3.0);

/// Moment map of the VMF DOA model: E[z|x] = A3(kappa) h(x) with the VMF
/// covariance at h(x).
MomentMap vmf_moment_map(const MeasurementModel& model, const CameraPose& pose);

/// log VMF(z; h(x), kappa) as a function of the state, for L1 quadrature.
LogLikelihoodFn vmf_log_likelihood_fn(const Eigen::Vector3d& z, const MeasurementModel& model,
                                      const CameraPose& pose);

/// IPLF update against a VMF DOA measurement.
IplfResult iplf_update_vmf(const GaussianDensity& prior, const Eigen::Vector3d& z,
                           const MeasurementModel& model, const CameraPose& pose,
                           const IplfOptions& opts);

}  // namespace doatrack
