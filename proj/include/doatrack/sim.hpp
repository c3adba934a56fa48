#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "doatrack/calibration.hpp"
#include "doatrack/directional.hpp"
#include "doatrack/geometry.hpp"
#include "doatrack/models.hpp"
#include "doatrack/random.hpp"

namespace doatrack {

/// Deterministic constant-velocity ground-truth track. Alive on steps
/// [birth_step, death_step).
struct ScriptedTrack {
    int birth_step = 0;
    int death_step = 0;
    Eigen::Vector4d initial = Eigen::Vector4d::Zero();
};

enum class TruthMode { Scripted, Sampled };

struct ScenarioConfig {
    int steps = 0;
    double tau = 1.0;
    double sigma_q2 = 0.0;
    double ps = 1.0;
    BirthModel birth;
    MeasurementModel sensor;
    std::vector<CameraPose> poses;  // one static pose or one per step
    TruthMode mode = TruthMode::Scripted;
    std::vector<ScriptedTrack> scripted;
    std::uint64_t seed = 0;
};

/// What the tracker sees for one frame, plus the evaluation ground truth.
struct FrameRecord {
    int step = 0;
    CameraPose pose;
    std::vector<Eigen::Vector3d> measurements;
    std::vector<Eigen::Vector4d> truth_states;  // alive objects this step
    std::vector<int> truth_ids;
};

struct GroundTruthTrack {
    int id = 0;
    int birth_step = 0;
    std::vector<Eigen::Vector4d> states;  // one per alive step
};

struct SimOutput {
    std::vector<FrameRecord> frames;
    std::vector<GroundTruthTrack> truth;
};

/// Generate a scenario: ground truth (scripted constant-velocity paths or
/// births/motions/deaths sampled from the generative model), then per frame
/// VMF detections of alive in-FoV objects (detection probability pd,
/// samples re-drawn until inside the FoV) and Poisson clutter uniform on
/// the FoV. Deterministic given the stream state.
SimOutput generate(const ScenarioConfig& cfg, RandomStream& rng);

/// The synthetic benchmark configuration: 101 steps, four constant-velocity
/// objects converging near the camera aim point and separating, one death at
/// step 50; drone static at the origin, 25 m up, camera aimed at (25, 25, 0);
/// kappa = 700, clutter rate 5, ps = 0.99, tau = 1/6 s.
ScenarioConfig default_paper_scenario();

/// Camera pose at `drone_position` aimed at `target` (ground point), with
/// the image right axis horizontal.
CameraPose make_pose_looking_at(const Eigen::Vector3d& drone_position,
                                const Eigen::Vector3d& target, double fov_x, double fov_y,
                                int image_w, int image_h);

/// Synthetic calibration data: per frame, `objects_per_frame` truth DOAs
/// placed uniformly in the central portion of the FoV rectangle, detector
/// DOAs VMF-distributed around them with probability pd, plus uniform
/// Poisson clutter.
std::vector<AnnotatedFrame> make_calibration_frames(double pd, double kappa, double lambda_c,
                                                    const FovSpec& fov, int objects_per_frame,
                                                    int steps, RandomStream& rng);

}  // namespace doatrack
