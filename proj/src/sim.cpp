#include "doatrack/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "doatrack/gaussian.hpp"

namespace doatrack {

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

const CameraPose& pose_at(const ScenarioConfig& cfg, int step) {
    return cfg.poses.size() == 1 ? cfg.poses.front()
                                 : cfg.poses[static_cast<std::size_t>(step)];
}

/// VMF draw conditioned on landing inside the FoV. The truth directions sit
/// well inside the FoV in every scenario here, so the loop essentially never
/// repeats; the cap guards pathological configurations.
Eigen::Vector3d sample_detection(const Eigen::Vector3d& mean, double kappa, const FovSpec& fov,
                                 RandomStream& rng) {
    VmfParams params{mean, kappa};
    for (int attempt = 0; attempt < 100; ++attempt) {
        const Eigen::Vector3d z = vmf_sample(params, 1, rng).front();
        if (fov.contains(z)) return z;
    }
    throw std::runtime_error("sim: detection sampling cannot reach the FoV");
}

struct LiveObject {
    int id;
    int birth_step;
    Eigen::Vector4d state;
};

}  // namespace

CameraPose make_pose_looking_at(const Eigen::Vector3d& drone_position,
                                const Eigen::Vector3d& target, double fov_x, double fov_y,
                                int image_w, int image_h) {
    const Eigen::Vector3d x_cam = (target - drone_position).normalized();
    Eigen::Vector3d y_cam = Eigen::Vector3d::UnitZ().cross(x_cam);
    if (y_cam.norm() < 1e-9)
        throw std::invalid_argument("make_pose_looking_at: camera pointing straight down/up "
                                    "leaves the roll undefined; offset the target");
    y_cam.normalize();
    const Eigen::Vector3d z_cam = x_cam.cross(y_cam);
    Eigen::Matrix3d r;
    r.row(0) = x_cam;
    r.row(1) = y_cam;
    r.row(2) = z_cam;
    CameraPose pose;
    pose.position_local = drone_position;
    pose.quat = quaternion_from_rotation(r);
    pose.fov_x = fov_x;
    pose.fov_y = fov_y;
    pose.image_w = image_w;
    pose.image_h = image_h;
    pose.validate();
    return pose;
}

SimOutput generate(const ScenarioConfig& cfg, RandomStream& rng) {
    if (cfg.steps < 1) throw std::invalid_argument("generate: steps must be >= 1");
    if (cfg.poses.empty() ||
        (cfg.poses.size() != 1 && static_cast<int>(cfg.poses.size()) != cfg.steps))
        throw std::invalid_argument("generate: pose script must have 1 or `steps` entries");
    const MotionModel motion = build_cv(cfg.tau, cfg.sigma_q2, cfg.ps);
    const Eigen::Matrix4d q_sqrt = covariance_sqrt(motion.Q);

    if (cfg.mode == TruthMode::Scripted) {
        for (const auto& t : cfg.scripted) {
            const CameraPose& pose = pose_at(cfg, t.birth_step);
            if (!cfg.sensor.fov.contains(doa_mean(t.initial, pose)))
                throw std::invalid_argument("generate: scripted object outside FoV at birth");
        }
    }

    SimOutput out;
    out.frames.reserve(static_cast<std::size_t>(cfg.steps));
    std::vector<LiveObject> live;
    int next_id = 0;

    for (int k = 0; k < cfg.steps; ++k) {
        const CameraPose& pose = pose_at(cfg, k);

        if (cfg.mode == TruthMode::Scripted) {
            live.clear();
            for (std::size_t i = 0; i < cfg.scripted.size(); ++i) {
                const auto& t = cfg.scripted[i];
                if (k < t.birth_step || k >= t.death_step) continue;
                Eigen::Vector4d x = t.initial;
                const double dt = (k - t.birth_step) * cfg.tau;
                x(0) += dt * x(1);
                x(2) += dt * x(3);
                live.push_back({static_cast<int>(i), t.birth_step, x});
            }
        } else {
            // survival and motion
            std::vector<LiveObject> survivors;
            for (auto& obj : live) {
                if (rng.uniform() >= cfg.ps) continue;
                Eigen::Vector4d noise;
                for (int d = 0; d < 4; ++d) noise(d) = rng.normal();
                obj.state = motion.F * obj.state + q_sqrt * noise;
                survivors.push_back(obj);
            }
            live = std::move(survivors);
            // births
            const BirthComponents bc = birth_components(pose, cfg.birth, k == 0);
            const Eigen::Matrix4d b_sqrt = covariance_sqrt(bc.cov);
            const int n_births = rng.poisson(bc.lambda_bar);
            for (int b = 0; b < n_births; ++b) {
                Eigen::Vector4d noise;
                for (int d = 0; d < 4; ++d) noise(d) = rng.normal();
                live.push_back({next_id++, k, bc.mean + b_sqrt * noise});
            }
        }

        FrameRecord frame;
        frame.step = k;
        frame.pose = pose;
        for (const auto& obj : live) {
            frame.truth_states.push_back(obj.state);
            frame.truth_ids.push_back(obj.id);
            const Eigen::Vector3d h = doa_mean(obj.state, pose);
            if (!cfg.sensor.fov.contains(h)) continue;  // outside the image: undetectable
            if (rng.uniform() < cfg.sensor.pd)
                frame.measurements.push_back(
                    sample_detection(h, cfg.sensor.kappa, cfg.sensor.fov, rng));
        }
        const int n_clutter = rng.poisson(cfg.sensor.lambda_c);
        for (int c = 0; c < n_clutter; ++c)
            frame.measurements.push_back(sample_uniform_fov(cfg.sensor.fov, rng));

        for (const auto& obj : live) {
            auto it = std::find_if(out.truth.begin(), out.truth.end(),
                                   [&](const GroundTruthTrack& t) { return t.id == obj.id; });
            if (it == out.truth.end()) {
                out.truth.push_back({obj.id, k, {}});
                it = std::prev(out.truth.end());
            }
            it->states.push_back(obj.state);
        }
        out.frames.push_back(std::move(frame));
    }
    return out;
}

ScenarioConfig default_paper_scenario() {
    ScenarioConfig cfg;
    cfg.steps = 101;
    cfg.tau = 1.0 / 6.0;
    cfg.sigma_q2 = 0.5;
    cfg.ps = 0.99;
    cfg.birth.lambda_bar_b_initial = 1.0;
    cfg.birth.lambda_bar_b = 0.025;
    cfg.birth.sigma_v2 = 20.0 * 20.0;
    cfg.sensor.kappa = 700.0;
    cfg.sensor.pd = 0.9;
    cfg.sensor.lambda_c = 5.0;
    cfg.sensor.fov = {69.0 * kDeg, 42.27 * kDeg};
    cfg.poses.push_back(make_pose_looking_at({0.0, 0.0, -25.0}, {25.0, 25.0, 0.0},
                                             cfg.sensor.fov.fx, cfg.sensor.fov.fy, 1920, 1080));
    cfg.mode = TruthMode::Scripted;
    // Four constant-velocity objects converging near the aim point (25, 25)
    // around steps 40-56 with ~3 m miss distances (the measurement clouds
    // overlap heavily there), then separating; the fourth disappears at
    // step 50.
    cfg.scripted = {
        {0, 101, {13.0, 1.5, 23.0, 0.0}},
        {0, 101, {37.0, -1.5, 27.0, 0.0}},
        {0, 101, {27.0, 0.0, 13.0, 1.5}},
        {0, 50, {23.0, 0.0, 37.0, -1.5}},
    };
    cfg.seed = 0;
    return cfg;
}

std::vector<AnnotatedFrame> make_calibration_frames(double pd, double kappa, double lambda_c,
                                                    const FovSpec& fov, int objects_per_frame,
                                                    int steps, RandomStream& rng) {
    std::vector<AnnotatedFrame> frames;
    frames.reserve(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k) {
        AnnotatedFrame f;
        f.fov = fov;
        for (int i = 0; i < objects_per_frame; ++i) {
            const double az = rng.uniform(-0.4 * fov.fx, 0.4 * fov.fx);
            const double el = rng.uniform(-0.4 * fov.fy, 0.4 * fov.fy);
            f.truth_doas.push_back(angles_to_doa(az, el));
        }
        for (const auto& y : f.truth_doas) {
            if (rng.uniform() < pd)
                f.measured_doas.push_back(sample_detection(y, kappa, fov, rng));
        }
        const int n_clutter = rng.poisson(lambda_c);
        for (int c = 0; c < n_clutter; ++c)
            f.measured_doas.push_back(sample_uniform_fov(fov, rng));
        frames.push_back(std::move(f));
    }
    return frames;
}

}  // namespace doatrack
