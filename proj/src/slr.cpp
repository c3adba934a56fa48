#include "doatrack/slr.hpp"

#include <cmath>
#include <limits>

namespace doatrack {

namespace {

double log_sum_exp(const Eigen::VectorXd& terms) {
    const double m = terms.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((terms.array() - m).exp().sum());
}

struct KalmanStep {
    GaussianDensity posterior;
    double log_marginal;  // log N(z; A m0 + b, S)
};

KalmanStep kalman_update(const GaussianDensity& prior, const Eigen::VectorXd& z,
                         const LinearizationResult& lin) {
    const Eigen::VectorXd z_pred = lin.A * prior.mean + lin.b;
    const Eigen::MatrixXd s =
        regularized_covariance(lin.A * prior.cov * lin.A.transpose() + lin.Omega);
    const Eigen::LLT<Eigen::MatrixXd> llt(s);
    const Eigen::MatrixXd gain = llt.solve(lin.A * prior.cov).transpose();
    KalmanStep out;
    out.posterior.mean = prior.mean + gain * (z - z_pred);
    Eigen::MatrixXd cov = prior.cov - gain * s * gain.transpose();
    out.posterior.cov = 0.5 * (cov + cov.transpose());
    out.log_marginal = gaussian_log_density(z, {z_pred, s});
    return out;
}

}  // namespace

LinearizationResult slr(const MomentMap& map, const GaussianDensity& prior, double ut_w0) {
    const SigmaPoints sp = unscented_points(prior, ut_w0);
    const int n_pts = static_cast<int>(sp.weights.size());
    const int d = prior.dim();

    std::vector<ConditionalMoments> moments(n_pts);
    int zdim = 0;
    for (int i = 0; i < n_pts; ++i) {
        moments[i] = map(sp.points.col(i));
        zdim = static_cast<int>(moments[i].mean.size());
    }

    Eigen::VectorXd z_bar = Eigen::VectorXd::Zero(zdim);
    for (int i = 0; i < n_pts; ++i) z_bar += sp.weights(i) * moments[i].mean;

    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(d, zdim);      // cross-covariance
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(zdim, zdim);   // total measurement covariance
    for (int i = 0; i < n_pts; ++i) {
        const Eigen::VectorXd dx = sp.points.col(i) - prior.mean;
        const Eigen::VectorXd dz = moments[i].mean - z_bar;
        psi += sp.weights(i) * dx * dz.transpose();
        phi += sp.weights(i) * (dz * dz.transpose() + moments[i].cov);
    }

    const Eigen::MatrixXd sigma = regularized_covariance(prior.cov);
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    LinearizationResult lin;
    lin.A = llt.solve(psi).transpose();
    lin.b = z_bar - lin.A * prior.mean;
    Eigen::MatrixXd omega = phi - lin.A * sigma * lin.A.transpose();
    lin.Omega = 0.5 * (omega + omega.transpose());
    return lin;
}

IplfResult iplf_update(const GaussianDensity& prior, const Eigen::VectorXd& z,
                       const MomentMap& map, const IplfOptions& opts,
                       const LogLikelihoodFn& log_likelihood) {
    GaussianDensity current = prior;
    IplfResult best;
    best.log_marginal = -std::numeric_limits<double>::infinity();

    GaussianDensity iterate = prior;
    double last_log_marginal = 0.0;
    double prev_kld = std::numeric_limits<double>::infinity();
    int rising = 0;
    bool use_best = false;
    int iters = 0;

    for (int it = 0; it < std::max(1, opts.max_iters); ++it) {
        const LinearizationResult lin = slr(map, iterate, opts.ut_w0);
        const KalmanStep step = kalman_update(prior, z, lin);
        ++iters;
        last_log_marginal = step.log_marginal;
        if (step.log_marginal > best.log_marginal) {
            best.posterior = step.posterior;
            best.log_marginal = step.log_marginal;
        }
        const double kld = kld_gaussians(step.posterior, iterate);
        iterate = step.posterior;
        if (kld < opts.kld_threshold) break;
        if (kld > prev_kld) {
            if (++rising >= 3) {
                use_best = true;
                break;
            }
        } else {
            rising = 0;
        }
        prev_kld = kld;
    }

    IplfResult out;
    out.iterations = iters;
    out.diverged = use_best;
    out.posterior = use_best ? best.posterior : iterate;
    out.log_marginal = use_best ? best.log_marginal : last_log_marginal;

    if (opts.likelihood == LikelihoodMode::L1 && log_likelihood) {
        // p(z) = E_q[ p(z|x) p(x) / q(x) ] with q the Gaussian posterior,
        // evaluated by sigma-point quadrature. Exact in the affine limit.
        const SigmaPoints sp = unscented_points(out.posterior, opts.ut_w0);
        Eigen::VectorXd terms(sp.weights.size());
        for (int i = 0; i < sp.weights.size(); ++i) {
            const Eigen::VectorXd x = sp.points.col(i);
            terms(i) = std::log(sp.weights(i)) + log_likelihood(x) +
                       gaussian_log_density(x, prior) - gaussian_log_density(x, out.posterior);
        }
        out.log_marginal = log_sum_exp(terms);
    }
    return out;
}

double gate_distance2(const GaussianDensity& prior, const Eigen::VectorXd& z,
                      const MomentMap& map, double ut_w0) {
    const LinearizationResult lin = slr(map, prior, ut_w0);
    const Eigen::VectorXd innov = z - lin.A * prior.mean - lin.b;
    const Eigen::MatrixXd s =
        regularized_covariance(lin.A * prior.cov * lin.A.transpose() + lin.Omega);
    return innov.dot(Eigen::LLT<Eigen::MatrixXd>(s).solve(innov));
}

MomentMap vmf_moment_map(const MeasurementModel& model, const CameraPose& pose) {
    const double kappa = model.kappa;
    return [kappa, pose](const Eigen::VectorXd& x) {
        const Eigen::Vector3d h = doa_mean(x, pose);
        const SphericalMoments m = vmf_moments({h, kappa});
        return ConditionalMoments{m.mean, m.cov};
    };
}

LogLikelihoodFn vmf_log_likelihood_fn(const Eigen::Vector3d& z, const MeasurementModel& model,
                                      const CameraPose& pose) {
    const double kappa = model.kappa;
    return [z, kappa, pose](const Eigen::VectorXd& x) {
        return vmf_log_density(z, {doa_mean(x, pose), kappa});
    };
}

IplfResult iplf_update_vmf(const GaussianDensity& prior, const Eigen::Vector3d& z,
                           const MeasurementModel& model, const CameraPose& pose,
                           const IplfOptions& opts) {
    return iplf_update(prior, z, vmf_moment_map(model, pose), opts,
                       opts.likelihood == LikelihoodMode::L1
                           ? vmf_log_likelihood_fn(z, model, pose)
                           : LogLikelihoodFn());
}

}  // namespace doatrack
