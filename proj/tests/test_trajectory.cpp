#include <doctest.h>

#include <cmath>

#include "doatrack/trajectory.hpp"
#include "support.hpp"

using namespace doatrack;
using doatrack::testing::random_spd;

namespace {

GaussianDensity random_state(RandomStream& rng) {
    GaussianDensity g;
    g.mean = Eigen::Vector4d(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    g.cov = random_spd(4, rng);
    return g;
}

// Kalman update of a 4-dim state with z = H x + v, v ~ N(0, R).
GaussianDensity linear_update(const GaussianDensity& prior, const Eigen::VectorXd& z,
                              const Eigen::MatrixXd& h, const Eigen::MatrixXd& r) {
    const Eigen::MatrixXd s = h * prior.cov * h.transpose() + r;
    const Eigen::MatrixXd k = prior.cov * h.transpose() * s.inverse();
    GaussianDensity out;
    out.mean = prior.mean + k * (z - h * prior.mean);
    out.cov = prior.cov - k * s * k.transpose();
    return out;
}

struct RtsResult {
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> covs;
};

// Classic forward KF + backward Rauch-Tung-Striebel smoother.
RtsResult rts_smoother(const GaussianDensity& prior, const MotionModel& motion,
                       const std::vector<Eigen::VectorXd>& zs, const Eigen::MatrixXd& h,
                       const Eigen::MatrixXd& r) {
    const int n = static_cast<int>(zs.size());
    std::vector<GaussianDensity> filtered(n), predicted(n);
    GaussianDensity cur = prior;
    for (int k = 0; k < n; ++k) {
        if (k > 0) {
            cur.mean = motion.F * cur.mean;
            cur.cov = motion.F * cur.cov * motion.F.transpose() + motion.Q;
        }
        predicted[k] = cur;
        cur = linear_update(cur, zs[k], h, r);
        filtered[k] = cur;
    }
    RtsResult out;
    out.means.resize(n);
    out.covs.resize(n);
    out.means[n - 1] = filtered[n - 1].mean;
    out.covs[n - 1] = filtered[n - 1].cov;
    for (int k = n - 2; k >= 0; --k) {
        const Eigen::MatrixXd g =
            filtered[k].cov * motion.F.transpose() * predicted[k + 1].cov.inverse();
        out.means[k] = filtered[k].mean + g * (out.means[k + 1] - predicted[k + 1].mean);
        out.covs[k] =
            filtered[k].cov + g * (out.covs[k + 1] - predicted[k + 1].cov) * g.transpose();
    }
    return out;
}

}  // namespace

TEST_CASE("trajectory_predict splits mass by survival") {
    RandomStream rng(61);
    const MotionModel certain = build_cv(0.5, 0.1, 1.0);
    TrajectoryGaussian tg = make_single_state(3, random_state(rng));
    TrajectoryGaussian next = trajectory_predict(tg, certain, 3);
    REQUIRE(next.components.size() == 1);
    CHECK(next.components[0].end_step == 4);
    CHECK(next.components[0].beta == 1.0);

    const MotionModel ps99 = build_cv(0.5, 0.1, 0.99);
    next = trajectory_predict(tg, ps99, 3);
    next = trajectory_predict(next, ps99, 4);
    REQUIRE(next.components.size() == 3);
    double dead = 0.0;
    for (const auto& c : next.components)
        if (c.end_step < 5) dead += c.beta;
    CHECK(dead == doctest::Approx(1.0 - 0.99 * 0.99).epsilon(1e-12));
    double total = 0.0;
    for (const auto& c : next.components) total += c.beta;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("trajectory_predict builds the joint two-step covariance") {
    RandomStream rng(62);
    const MotionModel motion = build_cv(1.0 / 6.0, 0.5, 1.0);
    const GaussianDensity g = random_state(rng);
    TrajectoryGaussian tg = make_single_state(0, g);
    const TrajectoryGaussian next = trajectory_predict(tg, motion, 0);
    const TrajectoryComponent& c = next.components.front();
    REQUIRE(c.window_len() == 2);
    // Explicit joint construction: Cov([x1; F x1 + w]).
    Eigen::MatrixXd expected(8, 8);
    expected.topLeftCorner(4, 4) = g.cov;
    expected.topRightCorner(4, 4) = g.cov * motion.F.transpose();
    expected.bottomLeftCorner(4, 4) = motion.F * g.cov;
    expected.bottomRightCorner(4, 4) = motion.F * g.cov * motion.F.transpose() + motion.Q;
    CHECK((c.window_cov - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((c.mean.tail<4>() - motion.F * g.mean).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("trajectory_update touches only the window") {
    RandomStream rng(63);
    const MotionModel motion = build_cv(0.5, 0.3, 1.0);
    TrajectoryGaussian tg = make_single_state(0, random_state(rng));
    for (int k = 0; k < 4; ++k) tg = trajectory_predict(tg, motion, k);
    tg = l_scan_truncate(tg, 1);  // window holds only the last state
    const TrajectoryGaussian before = tg;
    GaussianDensity post;
    post.mean = Eigen::Vector4d(1, 2, 3, 4);
    post.cov = Eigen::Matrix4d::Identity() * 0.05;
    const TrajectoryGaussian after = trajectory_update(tg, 4, post);
    const auto& cb = before.components.front();
    const auto& ca = after.components.front();
    CHECK((ca.mean.head(16) - cb.mean.head(16)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ca.mean.tail<4>() - post.mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ca.window_cov - post.cov).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("trajectory_update is idempotent on the stored last block") {
    RandomStream rng(64);
    const MotionModel motion = build_cv(0.5, 0.3, 1.0);
    TrajectoryGaussian tg = make_single_state(0, random_state(rng));
    for (int k = 0; k < 3; ++k) tg = trajectory_predict(tg, motion, k);
    const GaussianDensity last = tg.components.front().last_state();
    const TrajectoryGaussian same = trajectory_update(tg, 3, last);
    const auto& a = tg.components.front();
    const auto& b = same.components.front();
    CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((a.window_cov - b.window_cov).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("full-window trajectory updates equal the RTS smoother") {
    RandomStream rng(65);
    const MotionModel motion = build_cv(0.5, 0.4, 1.0);
    Eigen::MatrixXd h(2, 4);
    h << 1, 0, 0, 0, 0, 0, 1, 0;
    const Eigen::MatrixXd r = 0.25 * Eigen::MatrixXd::Identity(2, 2);

    const GaussianDensity prior = random_state(rng);
    std::vector<Eigen::VectorXd> zs;
    for (int k = 0; k < 5; ++k) {
        Eigen::VectorXd z(2);
        z << rng.normal() * 2.0, rng.normal() * 2.0;
        zs.push_back(z);
    }

    // Trajectory route: predict + update the last block + condition the window.
    TrajectoryGaussian tg = make_single_state(0, prior);
    for (int k = 0; k < 5; ++k) {
        if (k > 0) tg = trajectory_predict(tg, motion, k - 1);
        const GaussianDensity last = tg.components.front().last_state();
        tg = trajectory_update(tg, k, linear_update(last, zs[k], h, r));
    }

    const RtsResult ref = rts_smoother(prior, motion, zs, h, r);
    const TrajectoryComponent& c = tg.components.front();
    for (int k = 0; k < 5; ++k) {
        const GaussianDensity marg = c.marginal(k);
        CHECK((marg.mean - ref.means[k]).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((marg.cov - ref.covs[k]).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("l_scan_truncate preserves marginals and caps storage") {
    RandomStream rng(66);
    const MotionModel motion = build_cv(0.5, 0.4, 1.0);
    TrajectoryGaussian tg = make_single_state(0, random_state(rng));
    for (int k = 0; k < 7; ++k) tg = trajectory_predict(tg, motion, k);

    const TrajectoryGaussian same = l_scan_truncate(tg, 100);
    CHECK(same.components.front().window_len() == 8);

    const TrajectoryGaussian cut = l_scan_truncate(tg, 3);
    const auto& full = tg.components.front();
    const auto& trunc = cut.components.front();
    CHECK(trunc.window_len() == 3);
    CHECK(static_cast<int>(trunc.window_cov.rows()) == 3 * kStateDim);
    for (int k = 0; k < 8; ++k) {
        const GaussianDensity a = full.marginal(k);
        const GaussianDensity b = trunc.marginal(k);
        CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a.cov - b.cov).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("short L-scan windows leave the recent marginals intact") {
    RandomStream rng(67);
    const MotionModel motion = build_cv(0.5, 0.4, 1.0);
    Eigen::MatrixXd h(2, 4);
    h << 1, 0, 0, 0, 0, 0, 1, 0;
    const Eigen::MatrixXd r = 0.5 * Eigen::MatrixXd::Identity(2, 2);
    const GaussianDensity prior = random_state(rng);

    std::vector<Eigen::VectorXd> zs;
    for (int k = 0; k < 20; ++k) {
        Eigen::VectorXd z(2);
        z << rng.normal() * 3.0, rng.normal() * 3.0;
        zs.push_back(z);
    }

    auto run = [&](int lscan) {
        TrajectoryGaussian tg = make_single_state(0, prior);
        for (int k = 0; k < 20; ++k) {
            if (k > 0) tg = trajectory_predict(tg, motion, k - 1);
            const GaussianDensity last = tg.components.front().last_state();
            tg = trajectory_update(tg, k, linear_update(last, zs[k], h, r));
            tg = l_scan_truncate(tg, lscan);
        }
        return tg;
    };

    const TrajectoryGaussian l5 = run(5);
    const TrajectoryGaussian l100 = run(100);
    const GaussianDensity a = l5.components.front().marginal(19);
    const GaussianDensity b = l100.components.front().marginal(19);
    CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((a.cov - b.cov).cwiseAbs().maxCoeff() < 1e-9);
}
