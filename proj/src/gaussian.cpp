#include "doatrack/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace doatrack {

Eigen::MatrixXd regularized_covariance(const Eigen::MatrixXd& m, double floor) {
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    // Fast path: a positive definite matrix with a healthy smallest pivot
    // needs no clamping. Fall back to the eigenvalue clamp otherwise.
    Eigen::LLT<Eigen::MatrixXd> llt(sym);
    if (llt.info() == Eigen::Success) {
        const Eigen::MatrixXd& l = llt.matrixLLT();
        double min_pivot = l(0, 0);
        for (int i = 1; i < l.rows(); ++i) min_pivot = std::min(min_pivot, l(i, i));
        if (min_pivot * min_pivot > 16.0 * floor) return sym;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("regularized_covariance: eigendecomposition failed");
    if (es.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, es.eigenvalues().maxCoeff()))
        throw std::invalid_argument("regularized_covariance: matrix is not PSD");
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd covariance_sqrt(const Eigen::MatrixXd& m) {
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(sym);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("covariance_sqrt: decomposition failed");
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

double kld_gaussians(const GaussianDensity& a, const GaussianDensity& b) {
    const int d = a.dim();
    if (d != b.dim() || a.cov.rows() != d || b.cov.rows() != d)
        throw std::invalid_argument("kld_gaussians: dimension mismatch");
    const Eigen::MatrixXd pa = regularized_covariance(a.cov);
    const Eigen::MatrixXd pb = regularized_covariance(b.cov);
    Eigen::LLT<Eigen::MatrixXd> llt_b(pb);
    Eigen::LLT<Eigen::MatrixXd> llt_a(pa);
    const Eigen::VectorXd diff = b.mean - a.mean;
    const double quad = diff.dot(llt_b.solve(diff));
    const double trace = llt_b.solve(pa).trace();
    double logdet_b = 0.0, logdet_a = 0.0;
    for (int i = 0; i < d; ++i) {
        logdet_b += 2.0 * std::log(llt_b.matrixL()(i, i));
        logdet_a += 2.0 * std::log(llt_a.matrixL()(i, i));
    }
    return std::max(0.0, 0.5 * (trace + quad - d + logdet_b - logdet_a));
}

double gaussian_log_density(const Eigen::VectorXd& x, const GaussianDensity& g) {
    const int d = g.dim();
    const Eigen::MatrixXd p = regularized_covariance(g.cov);
    Eigen::LLT<Eigen::MatrixXd> llt(p);
    const Eigen::VectorXd diff = x - g.mean;
    double logdet = 0.0;
    for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    const double quad = diff.dot(llt.solve(diff));
    return -0.5 * (d * std::log(2.0 * 3.14159265358979323846) + logdet + quad);
}

SigmaPoints unscented_points(const GaussianDensity& g, double w0) {
    if (!(w0 >= 0.0 && w0 < 1.0))
        throw std::invalid_argument("unscented_points: w0 must be in [0, 1)");
    const int d = g.dim();
    const Eigen::MatrixXd sqrt_cov = covariance_sqrt(g.cov);
    const double scale = std::sqrt(d / (1.0 - w0));
    SigmaPoints sp;
    sp.points.resize(d, 2 * d + 1);
    sp.weights.resize(2 * d + 1);
    sp.points.col(0) = g.mean;
    sp.weights(0) = w0;
    const double wi = (1.0 - w0) / (2.0 * d);
    for (int i = 0; i < d; ++i) {
        const Eigen::VectorXd offset = scale * sqrt_cov.col(i);
        sp.points.col(1 + i) = g.mean + offset;
        sp.points.col(1 + d + i) = g.mean - offset;
        sp.weights(1 + i) = wi;
        sp.weights(1 + d + i) = wi;
    }
    return sp;
}

}  // namespace doatrack
