#pragma once

#include <Eigen/Dense>

namespace doatrack {

/// Multivariate Gaussian with symmetric PSD covariance.
struct GaussianDensity {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    int dim() const { return static_cast<int>(mean.size()); }
};

/// Symmetrize and clamp eigenvalues at `floor`. Applied before every
/// inverse or Cholesky so near-singular covariances stay decomposable.
Eigen::MatrixXd regularized_covariance(const Eigen::MatrixXd& m, double floor = 1e-12);

/// Lower-triangular square root of a (possibly rank-deficient) PSD matrix:
/// Cholesky when it succeeds, eigendecomposition square root otherwise.
Eigen::MatrixXd covariance_sqrt(const Eigen::MatrixXd& m);

/// KL divergence KLD(a || b) between Gaussians of equal dimension, >= 0.
double kld_gaussians(const GaussianDensity& a, const GaussianDensity& b);

double gaussian_log_density(const Eigen::VectorXd& x, const GaussianDensity& g);

/// Unscented sigma points: 2d+1 points that reproduce the mean and
/// covariance exactly, with weight w0 at the mean and the remaining mass
/// split equally over the symmetric points at sqrt(d/(1-w0)) scaled
/// covariance square-root columns.
struct SigmaPoints {
    Eigen::MatrixXd points;   // d x (2d+1); column 0 is the mean
    Eigen::VectorXd weights;  // sums to 1
};

SigmaPoints unscented_points(const GaussianDensity& g, double w0 = 1.0 / 3.0);

}  // namespace doatrack
