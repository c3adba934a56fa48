#include "doatrack/models.hpp"

#include <cmath>
#include <stdexcept>

namespace doatrack {

MotionModel build_cv(double tau, double sigma_q2, double ps) {
    if (tau <= 0.0) throw std::invalid_argument("build_cv: tau must be > 0");
    if (!(ps >= 0.0 && ps <= 1.0)) throw std::invalid_argument("build_cv: ps must be in [0, 1]");
    MotionModel m;
    m.tau = tau;
    m.sigma_q2 = sigma_q2;
    m.ps = ps;
    Eigen::Matrix2d f_block;
    f_block << 1.0, tau, 0.0, 1.0;
    Eigen::Matrix2d q_block;
    q_block << tau * tau * tau / 3.0, tau * tau / 2.0, tau * tau / 2.0, tau;
    m.F = Eigen::Matrix4d::Zero();
    m.Q = Eigen::Matrix4d::Zero();
    m.F.block<2, 2>(0, 0) = f_block;
    m.F.block<2, 2>(2, 2) = f_block;
    m.Q.block<2, 2>(0, 0) = sigma_q2 * q_block;
    m.Q.block<2, 2>(2, 2) = sigma_q2 * q_block;
    return m;
}

Eigen::Vector3d doa_mean(const ObjectState& x, const CameraPose& pose) {
    const Eigen::Vector3d p(x(0), x(2), 0.0);
    const Eigen::Vector3d rel = rotation_matrix(pose.quat) * (p - pose.position_local);
    const double n = rel.norm();
    if (n < 1e-9) throw std::domain_error("doa_mean: object coincides with the drone");
    return rel / n;
}

double measurement_log_likelihood(const Eigen::Vector3d& z, const ObjectState& x,
                                  const MeasurementModel& model, const CameraPose& pose) {
    return vmf_log_density(z, {doa_mean(x, pose), model.kappa});
}

BirthComponents birth_components(const CameraPose& pose, const BirthModel& birth,
                                 bool initial_step, double w0) {
    GaussianDensity angular;
    angular.mean = Eigen::Vector2d::Zero();
    angular.cov = Eigen::Vector2d(pose.fov_x * pose.fov_x / 12.0, pose.fov_y * pose.fov_y / 12.0)
                      .asDiagonal();
    const SigmaPoints sp = unscented_points(angular, w0);

    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::MatrixXd ground(2, sp.weights.size());
    for (int i = 0; i < sp.weights.size(); ++i) {
        const Eigen::Vector3d doa = angles_to_doa(sp.points(0, i), sp.points(1, i));
        Eigen::Vector2d p;
        try {
            p = project_doa_to_ground(doa, pose);
        } catch (const std::domain_error&) {
            throw std::domain_error(
                "birth_components: a sigma-point ray misses the ground; re-point the camera");
        }
        ground.col(i) = p;
        mean += sp.weights(i) * p;
    }
    Eigen::Matrix2d pos_cov = Eigen::Matrix2d::Zero();
    for (int i = 0; i < sp.weights.size(); ++i) {
        const Eigen::Vector2d d = ground.col(i) - mean;
        pos_cov += sp.weights(i) * d * d.transpose();
    }

    BirthComponents out;
    out.lambda_bar = initial_step ? birth.lambda_bar_b_initial : birth.lambda_bar_b;
    out.mean << mean.x(), 0.0, mean.y(), 0.0;
    out.cov = Eigen::Matrix4d::Zero();
    out.cov(0, 0) = pos_cov(0, 0);
    out.cov(0, 2) = pos_cov(0, 1);
    out.cov(2, 0) = pos_cov(1, 0);
    out.cov(2, 2) = pos_cov(1, 1);
    out.cov(1, 1) = birth.sigma_v2;
    out.cov(3, 3) = birth.sigma_v2;
    return out;
}

}  // namespace doatrack
