#include <doctest.h>

#include <cmath>

#include "doatrack/sim.hpp"
#include "doatrack/slr.hpp"
#include "support.hpp"

using namespace doatrack;
using doatrack::testing::random_spd;

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

MomentMap affine_map(const Eigen::MatrixXd& h, const Eigen::VectorXd& c,
                     const Eigen::MatrixXd& r) {
    return [h, c, r](const Eigen::VectorXd& x) { return ConditionalMoments{h * x + c, r}; };
}

// Plain textbook Kalman update, written independently of the library path.
GaussianDensity kalman_reference(const GaussianDensity& prior, const Eigen::VectorXd& z,
                                 const Eigen::MatrixXd& h, const Eigen::VectorXd& c,
                                 const Eigen::MatrixXd& r) {
    const Eigen::MatrixXd s = h * prior.cov * h.transpose() + r;
    const Eigen::MatrixXd k = prior.cov * h.transpose() * s.inverse();
    GaussianDensity out;
    out.mean = prior.mean + k * (z - h * prior.mean - c);
    out.cov = prior.cov - k * s * k.transpose();
    return out;
}

GaussianDensity random_prior(int dim, RandomStream& rng) {
    GaussianDensity g;
    g.mean.resize(dim);
    for (int i = 0; i < dim; ++i) g.mean(i) = rng.normal();
    g.cov = random_spd(dim, rng);
    return g;
}

}  // namespace

TEST_CASE("unscented points in one dimension") {
    GaussianDensity g;
    g.mean = Eigen::VectorXd::Zero(1);
    g.cov = Eigen::MatrixXd::Identity(1, 1);
    const SigmaPoints sp = unscented_points(g, 1.0 / 3.0);
    REQUIRE(sp.weights.size() == 3);
    CHECK(sp.weights(0) == doctest::Approx(1.0 / 3.0));
    CHECK(sp.weights(1) == doctest::Approx(1.0 / 3.0));
    CHECK(sp.points(0, 0) == 0.0);
    CHECK(std::abs(sp.points(0, 1)) == doctest::Approx(std::sqrt(1.5)).epsilon(1e-12));
    CHECK(std::abs(sp.points(0, 2)) == doctest::Approx(std::sqrt(1.5)).epsilon(1e-12));
    double mean = 0.0, var = 0.0;
    for (int i = 0; i < 3; ++i) mean += sp.weights(i) * sp.points(0, i);
    for (int i = 0; i < 3; ++i) var += sp.weights(i) * sp.points(0, i) * sp.points(0, i);
    CHECK(mean == doctest::Approx(0.0));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("unscented points reconstruct random 8-dim Gaussians") {
    RandomStream rng(51);
    for (int trial = 0; trial < 50; ++trial) {
        const GaussianDensity g = random_prior(8, rng);
        const SigmaPoints sp = unscented_points(g);
        CHECK(sp.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(8);
        for (int i = 0; i < sp.weights.size(); ++i) mean += sp.weights(i) * sp.points.col(i);
        CHECK((mean - g.mean).cwiseAbs().maxCoeff() < 1e-11);
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(8, 8);
        for (int i = 0; i < sp.weights.size(); ++i) {
            const Eigen::VectorXd d = sp.points.col(i) - g.mean;
            cov += sp.weights(i) * d * d.transpose();
        }
        CHECK((cov - g.cov).cwiseAbs().maxCoeff() < 1e-10 * g.cov.norm());
    }
}

TEST_CASE("unscented weights follow the stated scheme") {
    GaussianDensity g;
    g.mean = Eigen::VectorXd::Zero(4);
    g.cov = Eigen::MatrixXd::Identity(4, 4);
    const SigmaPoints sp = unscented_points(g, 1.0 / 3.0);
    CHECK(sp.weights(0) == doctest::Approx(1.0 / 3.0));
    for (int i = 1; i < sp.weights.size(); ++i)
        CHECK(sp.weights(i) == doctest::Approx((2.0 / 3.0) / 8.0));
}

TEST_CASE("slr recovers affine maps exactly") {
    RandomStream rng(52);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::MatrixXd h(3, 4);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 4; ++j) h(i, j) = rng.normal();
        Eigen::VectorXd c(3);
        c << rng.normal(), rng.normal(), rng.normal();
        const Eigen::MatrixXd r = random_spd(3, rng);
        const GaussianDensity prior = random_prior(4, rng);
        const LinearizationResult lin = slr(affine_map(h, c, r), prior);
        CHECK((lin.A - h).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((lin.b - c).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((lin.Omega - r).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("slr residual covariance is PSD for the VMF model") {
    RandomStream rng(53);
    const CameraPose pose =
        make_pose_looking_at({0, 0, -25}, {25, 25, 0}, 69 * kDeg, 42.27 * kDeg, 1920, 1080);
    MeasurementModel model;
    model.kappa = 700.0;
    model.fov = {pose.fov_x, pose.fov_y};
    const MomentMap map = vmf_moment_map(model, pose);
    for (int trial = 0; trial < 1000; ++trial) {
        GaussianDensity prior;
        prior.mean = Eigen::Vector4d(rng.uniform(10, 50), rng.normal(), rng.uniform(10, 50),
                                     rng.normal());
        prior.cov = random_spd(4, rng, 0.5);
        const LinearizationResult lin = slr(map, prior);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lin.Omega);
        CHECK(es.eigenvalues().minCoeff() > -1e-10);
    }
}

TEST_CASE("slr matches a Monte Carlo linearization of the VMF model") {
    RandomStream rng(54);
    const CameraPose pose =
        make_pose_looking_at({0, 0, -25}, {25, 25, 0}, 69 * kDeg, 42.27 * kDeg, 1920, 1080);
    MeasurementModel model;
    model.kappa = 700.0;
    model.fov = {pose.fov_x, pose.fov_y};
    const MomentMap map = vmf_moment_map(model, pose);

    GaussianDensity prior;
    prior.mean = Eigen::Vector4d(27.0, 0.5, 23.0, -0.5);
    prior.cov = Eigen::Vector4d(9.0, 1.0, 9.0, 1.0).asDiagonal();
    const LinearizationResult lin = slr(map, prior);

    // Monte Carlo SLR with the same conditional moments.
    const int n = 1'000'000;
    const Eigen::MatrixXd sqrt_cov = covariance_sqrt(prior.cov);
    Eigen::Vector3d z_bar = Eigen::Vector3d::Zero();
    std::vector<Eigen::Vector4d> xs(n);
    std::vector<Eigen::Vector3d> zs(n);
    Eigen::Matrix3d cond_cov_sum = Eigen::Matrix3d::Zero();
    for (int i = 0; i < n; ++i) {
        Eigen::Vector4d noise;
        for (int d = 0; d < 4; ++d) noise(d) = rng.normal();
        xs[i] = prior.mean + sqrt_cov * noise;
        const ConditionalMoments cm = map(xs[i]);
        zs[i] = cm.mean;
        z_bar += cm.mean;
        cond_cov_sum += cm.cov;
    }
    z_bar /= n;
    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(4, 3);
    Eigen::Matrix3d phi = cond_cov_sum / n;
    for (int i = 0; i < n; ++i) {
        psi += (xs[i] - prior.mean) * (zs[i] - z_bar).transpose();
        phi += (1.0 / n) * (zs[i] - z_bar) * (zs[i] - z_bar).transpose();
    }
    psi /= n;
    const Eigen::MatrixXd a_mc = (prior.cov.inverse() * psi).transpose();
    const Eigen::VectorXd b_mc = z_bar - a_mc * prior.mean;
    const Eigen::MatrixXd omega_mc = phi - a_mc * prior.cov * a_mc.transpose();

    CHECK((lin.A - a_mc).norm() / a_mc.norm() < 0.02);
    CHECK((lin.b - b_mc).norm() / b_mc.norm() < 0.02);
    CHECK((lin.Omega - omega_mc).norm() / omega_mc.norm() < 0.02);
}

TEST_CASE("iplf equals the exact Kalman update on an affine stub") {
    RandomStream rng(55);
    for (const int iters : {1, 2, 5, 10}) {
        Eigen::MatrixXd h(3, 4);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 4; ++j) h(i, j) = rng.normal();
        Eigen::VectorXd c(3);
        c << rng.normal(), rng.normal(), rng.normal();
        const Eigen::MatrixXd r = random_spd(3, rng);
        const GaussianDensity prior = random_prior(4, rng);
        Eigen::VectorXd z(3);
        z << rng.normal(), rng.normal(), rng.normal();

        IplfOptions opts;
        opts.max_iters = iters;
        opts.likelihood = LikelihoodMode::L0;
        opts.kld_threshold = 0.0;  // force all iterations
        const IplfResult res = iplf_update(prior, z, affine_map(h, c, r), opts);
        const GaussianDensity ref = kalman_reference(prior, z, h, c, r);
        CHECK((res.posterior.mean - ref.mean).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((res.posterior.cov - ref.cov).cwiseAbs().maxCoeff() < 1e-10);
        CHECK_FALSE(res.diverged);

        // L1 equals L0 in the affine case: the quadrature is exact.
        IplfOptions l1 = opts;
        l1.likelihood = LikelihoodMode::L1;
        const IplfResult res_l1 =
            iplf_update(prior, z, affine_map(h, c, r), l1, [&](const Eigen::VectorXd& x) {
                return gaussian_log_density(z, {h * x + c, r});
            });
        CHECK(res_l1.log_marginal == doctest::Approx(res.log_marginal).epsilon(1e-8));
    }
}

TEST_CASE("one-iteration iplf is the sigma-point Kalman update") {
    RandomStream rng(56);
    const CameraPose pose =
        make_pose_looking_at({0, 0, -25}, {25, 25, 0}, 69 * kDeg, 42.27 * kDeg, 1920, 1080);
    MeasurementModel model;
    model.kappa = 700.0;
    model.fov = {pose.fov_x, pose.fov_y};
    const MomentMap map = vmf_moment_map(model, pose);

    GaussianDensity prior;
    prior.mean = Eigen::Vector4d(27.0, 0.0, 23.0, 0.0);
    prior.cov = Eigen::Vector4d(25.0, 4.0, 25.0, 4.0).asDiagonal();
    const Eigen::Vector3d z = doa_mean(Eigen::Vector4d(24.0, 0, 26.0, 0), pose);

    IplfOptions opts;
    opts.max_iters = 1;
    opts.likelihood = LikelihoodMode::L0;
    const IplfResult res = iplf_update(prior, z, map, opts);

    // Reference UKF step assembled by hand from the same linearization.
    const LinearizationResult lin = slr(map, prior);
    const GaussianDensity ref = kalman_reference(prior, z, lin.A, lin.b, lin.Omega);
    CHECK((res.posterior.mean - ref.mean).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((res.posterior.cov - ref.cov).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(res.iterations == 1);
}

TEST_CASE("iplf posterior agrees with a dense-grid Bayes update") {
    const CameraPose pose =
        make_pose_looking_at({0, 0, -25}, {25, 25, 0}, 69 * kDeg, 42.27 * kDeg, 1920, 1080);
    MeasurementModel model;
    model.kappa = 700.0;
    model.fov = {pose.fov_x, pose.fov_y};

    GaussianDensity prior;
    prior.mean = Eigen::Vector4d(27.0, 0.0, 23.0, 0.0);
    prior.cov = Eigen::Vector4d(9.0, 1e-12, 9.0, 1e-12).asDiagonal();
    const Eigen::Vector3d z = doa_mean(Eigen::Vector4d(25.5, 0, 24.5, 0), pose);

    IplfOptions opts;
    opts.max_iters = 5;
    opts.likelihood = LikelihoodMode::L1;
    const IplfResult res = iplf_update(prior, z, vmf_moment_map(model, pose), opts,
                                       vmf_log_likelihood_fn(z, model, pose));

    // Grid Bayes rule over the 2-D position slice (velocities pinned).
    const int grid = 400;
    double wx = 0.0, wy = 0.0, wsum = 0.0;
    for (int ix = 0; ix < grid; ++ix) {
        for (int iy = 0; iy < grid; ++iy) {
            const double px = prior.mean(0) - 12.0 + 24.0 * (ix + 0.5) / grid;
            const double py = prior.mean(2) - 12.0 + 24.0 * (iy + 0.5) / grid;
            const double log_prior = -0.5 * ((px - prior.mean(0)) * (px - prior.mean(0)) +
                                             (py - prior.mean(2)) * (py - prior.mean(2))) /
                                     9.0;
            const double log_lik =
                vmf_log_density(z, {doa_mean(Eigen::Vector4d(px, 0, py, 0), pose), model.kappa});
            const double w = std::exp(log_prior + log_lik);
            wx += w * px;
            wy += w * py;
            wsum += w;
        }
    }
    CHECK(std::abs(res.posterior.mean(0) - wx / wsum) < 0.1);
    CHECK(std::abs(res.posterior.mean(2) - wy / wsum) < 0.1);
    CHECK(res.posterior.cov.trace() <= prior.cov.trace());
}

TEST_CASE("kld_gaussians properties") {
    GaussianDensity a, b;
    a.mean = Eigen::VectorXd::Zero(1);
    a.cov = Eigen::MatrixXd::Identity(1, 1);
    b = a;
    CHECK(kld_gaussians(a, b) == 0.0);
    b.mean(0) = 1.0;
    CHECK(kld_gaussians(a, b) == doctest::Approx(0.5).epsilon(1e-12));

    RandomStream rng(57);
    for (int trial = 0; trial < 100; ++trial) {
        GaussianDensity x, y;
        x.mean = Eigen::VectorXd::Zero(3);
        y.mean = Eigen::VectorXd::Zero(3);
        for (int i = 0; i < 3; ++i) {
            x.mean(i) = rng.normal();
            y.mean(i) = rng.normal();
        }
        x.cov = random_spd(3, rng);
        y.cov = random_spd(3, rng);
        CHECK(kld_gaussians(x, y) >= 0.0);
    }

    GaussianDensity wrong;
    wrong.mean = Eigen::VectorXd::Zero(2);
    wrong.cov = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(kld_gaussians(a, wrong), std::invalid_argument);
}
