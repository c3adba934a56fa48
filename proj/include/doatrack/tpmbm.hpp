#pragma once

#include <Eigen/Dense>
#include <vector>

#include "doatrack/models.hpp"
#include "doatrack/slr.hpp"
#include "doatrack/trajectory.hpp"

namespace doatrack {

enum class FilterMode { Pmbm, Tpmbm };

struct FilterConfig {
    FilterMode mode = FilterMode::Tpmbm;
    int lscan = 5;
    IplfOptions iplf;
    double gate_threshold = 50.0;
    int max_globals = 100;
    double prune_bernoulli_r = 1e-4;
    double prune_global_w = 1e-4;
    double prune_ppp_w = 1e-5;
    double estimator_r_threshold = 0.5;
    double gamma_absent = 1e-3;  // alive-mass floor below which a track stops branching
};

/// Poisson component over undetected (alive) trajectories.
struct PppComponent {
    double weight = 0.0;
    TrajectoryGaussian tg;
};

/// Bernoulli local hypothesis for one track.
struct BernoulliComponent {
    double r = 0.0;
    TrajectoryGaussian tg;
};

struct Track {
    long id = 0;
    std::vector<BernoulliComponent> locals;
};

/// One global data association hypothesis: a weight plus, per track, the
/// index of the selected local hypothesis (-1 when the track is absent).
struct GlobalHypothesis {
    double weight = 0.0;
    std::vector<int> locals;
};

struct PmbmPosterior {
    std::vector<PppComponent> ppp;
    std::vector<Track> tracks;
    std::vector<GlobalHypothesis> globals;
    int step = -1;
    long next_track_id = 0;
};

/// Posterior before any data: empty PPP, no tracks, a single empty global.
PmbmPosterior empty_posterior();

struct FrameInput {
    CameraPose pose;
    std::vector<Eigen::Vector3d> measurements;
};

/// Prediction to the next step: every PPP component and Bernoulli local is
/// advanced (trajectory extension in TPMBM mode; current-state marginal with
/// r *= ps in PMBM mode) and the frame's birth component joins the PPP.
PmbmPosterior predict(const PmbmPosterior& post, const MotionModel& motion,
                      const BirthComponents& birth, const FilterConfig& cfg);

/// Measurement update with Murty k-best association per parent hypothesis.
PmbmPosterior update(const PmbmPosterior& post, const std::vector<Eigen::Vector3d>& measurements,
                     const MeasurementModel& model, const CameraPose& pose,
                     const FilterConfig& cfg);

/// Ellipsoidal gate: true iff the SLR-linearized squared Mahalanobis
/// distance of z from the predicted measurement density is <= threshold.
bool gate(const GaussianDensity& end_state, const Eigen::Vector3d& z,
          const MeasurementModel& model, const CameraPose& pose, double threshold);

/// Drop sub-threshold PPP components, global hypotheses and unreferenced
/// Bernoulli locals; cap globals at cfg.max_globals; renormalize.
PmbmPosterior prune(const PmbmPosterior& post, const FilterConfig& cfg);

struct TrajectoryEstimate {
    long track_id = 0;
    int birth_step = 0;
    int end_step = 0;
    std::vector<Eigen::Vector4d> states;  // one per step in [birth_step, end_step]
};

/// MAP-style estimator on the highest-weight global hypothesis: tracks with
/// existence above cfg.estimator_r_threshold report the mean sequence of
/// their most probable end time. In PMBM mode only the current state is
/// meaningful (birth_step == end_step == posterior step).
std::vector<TrajectoryEstimate> estimate(const PmbmPosterior& post, const FilterConfig& cfg);

/// One filter recursion: predict, update, prune, L-scan truncation.
PmbmPosterior step(const PmbmPosterior& post, const FrameInput& frame, const MotionModel& motion,
                   const BirthModel& birth, const MeasurementModel& model,
                   const FilterConfig& cfg);

/// Convenience wrapper around the recursion that also maintains the per-track
/// dossier of reported current states needed by the PMBM-mode estimator.
class Filter {
public:
    Filter(MotionModel motion, BirthModel birth, MeasurementModel model, FilterConfig cfg);

    /// Advance by one frame. A `gap` > 1 means gap - 1 frames were dropped
    /// before this one: the filter predicts through them (no update) using
    /// this frame's pose for the birth construction.
    void process(const FrameInput& frame, int gap = 1);
    const PmbmPosterior& posterior() const { return posterior_; }

    /// Trajectory estimates at the current step: posterior trajectories in
    /// TPMBM mode, accumulated per-track dossier segments in PMBM mode.
    std::vector<TrajectoryEstimate> estimates() const;

private:
    MotionModel motion_;
    BirthModel birth_;
    MeasurementModel model_;
    FilterConfig cfg_;
    PmbmPosterior posterior_;

    struct DossierEntry {
        int step;
        Eigen::Vector4d state;
    };
    std::vector<std::pair<long, std::vector<DossierEntry>>> dossier_;  // by track id

    void append_dossier();
};

}  // namespace doatrack
