#pragma once

#include <Eigen/Dense>
#include <vector>

#include "doatrack/random.hpp"

namespace doatrack {

/// Von Mises-Fisher parameters on the unit sphere S².
struct VmfParams {
    Eigen::Vector3d mu = Eigen::Vector3d::UnitX();  // mean direction, unit norm
    double kappa = 0.0;                              // concentration, >= 0
};

/// Camera field of view, radians. Membership is tested on azimuth/elevation:
/// |az(z)| <= fx/2 and |el(z)| <= fy/2. For fx < pi this implies z_x > 0, so
/// directions behind the camera are excluded by the azimuth bound itself.
struct FovSpec {
    double fx = 0.0;  // 0 < fx <= 2*pi
    double fy = 0.0;  // 0 < fy <= pi

    bool contains(const Eigen::Vector3d& z) const;
};

/// Log of the VMF density with respect to the uniform distribution on S².
/// For S² the density is kappa * exp(kappa * mu'z) / sinh(kappa), with the
/// kappa -> 0 limit equal to 1. Evaluated in log space; finite for kappa up
/// to well beyond 1e6.
double vmf_log_density(const Eigen::Vector3d& z, const VmfParams& params);

double vmf_density(const Eigen::Vector3d& z, const VmfParams& params);

/// i.i.d. VMF samples. Exact inversion sampler: the cosine toward mu is drawn
/// by inverse CDF, w = 1 + log(u + (1-u) e^(-2 kappa)) / kappa, and the
/// tangent direction uniformly. Rejection-free and stable for kappa up to
/// at least 1e5. Deterministic given the stream state.
std::vector<Eigen::Vector3d> vmf_sample(const VmfParams& params, int n, RandomStream& rng);

/// Mean resultant length A3(kappa) = I_{3/2}(kappa) / I_{1/2}(kappa)
///                                 = coth(kappa) - 1/kappa.
/// Strictly increasing from 0 to 1 on (0, inf). Throws for kappa <= 0.
double bessel_ratio(double kappa);

/// Inverse of bessel_ratio by bisection on [1e-6, 1e7] to 1e-8 relative
/// tolerance. Requires 0 < rbar < 1.
double bessel_ratio_inverse(double rbar);

struct SphericalMoments {
    Eigen::Vector3d mean;
    Eigen::Matrix3d cov;
};

/// First two moments of a VMF variate: mean A3(k) mu and covariance
/// (A3/k) I + (1 - 3 A3/k - A3²) mu mu'. At kappa = 0 the moments are those
/// of the uniform sphere (zero mean, covariance I/3).
SphericalMoments vmf_moments(const VmfParams& params);

/// Normalising constant of the uniform distribution on the FoV w.r.t. the
/// uniform distribution on the sphere: u_C = fx sin(fy/2) / (2 pi).
double clutter_constant(const FovSpec& fov);

/// Clutter intensity: lambda_bar / u_C inside the FoV, 0 outside.
double clutter_intensity(const Eigen::Vector3d& z, const FovSpec& fov, double lambda_bar);

/// One uniform draw from the FoV region of the sphere (uniform w.r.t.
/// spherical area). Azimuth uniform, elevation by inverse CDF in sin(el).
Eigen::Vector3d sample_uniform_fov(const FovSpec& fov, RandomStream& rng);

}  // namespace doatrack
