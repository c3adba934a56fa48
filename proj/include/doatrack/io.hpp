#pragma once

#include <optional>
#include <string>
#include <vector>

#include "doatrack/geometry.hpp"
#include "doatrack/sim.hpp"
#include "doatrack/tpmbm.hpp"

namespace doatrack {

/// Input error carrying the offending line number (0 = whole file).
struct IoError : std::runtime_error {
    int line;
    IoError(int line_number, const std::string& message)
        : std::runtime_error("line " + std::to_string(line_number) + ": " + message),
          line(line_number) {}
};

/// One line of a detection frame file. Exactly one of `geo`/`local_xyz`
/// (consistent across the file) and exactly one of `boxes`/`doas`.
/// Angles are degrees on disk, radians in memory everywhere else.
struct DetectionFrame {
    int frame = 0;
    double time_s = 0.0;
    std::optional<GeoCoordinate> geo;  // lat/lon in radians after parsing
    std::optional<Eigen::Vector3d> local_xyz;
    Quaternion quat;
    double fov_deg_x = 0.0;
    double fov_deg_y = 0.0;
    int image_w = 0;
    int image_h = 0;
    std::optional<std::vector<BoundingBox>> boxes;
    std::optional<std::vector<Eigen::Vector3d>> doas;
};

std::vector<DetectionFrame> read_detection_frames(const std::string& path);
void write_detection_frames(const std::string& path, const std::vector<DetectionFrame>& frames);

/// Resolve a parsed frame sequence into tracker inputs: geodetic poses are
/// anchored to a local frame at the first frame's latitude/longitude on the
/// ground, boxes become DOAs through the bounding-box center and the chosen
/// pixel conversion method.
std::vector<FrameInput> to_frame_inputs(const std::vector<DetectionFrame>& frames,
                                        PixelMethod method = PixelMethod::Pinhole);

/// Ground-truth states file: one JSON object per line,
/// {"frame": k, "objects": [{"id": n, "state": [px, vx, py, vy]}, ...]}.
struct TruthFrame {
    int frame = 0;
    std::vector<int> ids;
    std::vector<Eigen::Vector4d> states;
};

std::vector<TruthFrame> read_truth_frames(const std::string& path);
void write_truth_frames(const std::string& path, const std::vector<TruthFrame>& frames);

/// Trajectory estimates document. States are serialized [px, py, vx, vy].
void write_estimates(const std::string& path, const std::vector<TrajectoryEstimate>& estimates);
std::vector<TrajectoryEstimate> read_estimates(const std::string& path);

}  // namespace doatrack
