#include "doatrack/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace doatrack {

namespace {

using nlohmann::json;

constexpr double kDeg = 3.14159265358979323846 / 180.0;

json parse_line(const std::string& text, int line_no) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(line_no, std::string("invalid JSON: ") + e.what());
    }
}

double number_at(const json& j, const char* key, int line_no) {
    if (!j.contains(key) || !j[key].is_number())
        throw IoError(line_no, std::string("missing or non-numeric field '") + key + "'");
    return j[key].get<double>();
}

}  // namespace

std::vector<DetectionFrame> read_detection_frames(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(0, "cannot open " + path);
    std::vector<DetectionFrame> out;
    std::string text;
    int line_no = 0;
    int last_frame = -1;
    int pose_form = 0;  // 1 = geodetic, 2 = local
    while (std::getline(in, text)) {
        ++line_no;
        if (text.empty()) continue;
        const json j = parse_line(text, line_no);
        DetectionFrame f;
        f.frame = static_cast<int>(number_at(j, "frame", line_no));
        if (f.frame <= last_frame) throw IoError(line_no, "frame numbers must strictly increase");
        last_frame = f.frame;
        f.time_s = number_at(j, "time_s", line_no);

        if (!j.contains("drone") || !j["drone"].is_object())
            throw IoError(line_no, "missing 'drone' pose object");
        const json& drone = j["drone"];
        if (drone.contains("local_xyz_m")) {
            const auto v = drone["local_xyz_m"].get<std::vector<double>>();
            if (v.size() != 3) throw IoError(line_no, "local_xyz_m must have 3 entries");
            f.local_xyz = Eigen::Vector3d(v[0], v[1], v[2]);
            if (pose_form == 1) throw IoError(line_no, "mixed geodetic/local pose forms");
            pose_form = 2;
        } else if (drone.contains("lat_deg")) {
            GeoCoordinate g;
            g.latitude = number_at(drone, "lat_deg", line_no) * kDeg;
            g.longitude = number_at(drone, "lon_deg", line_no) * kDeg;
            g.altitude = number_at(drone, "alt_m", line_no);
            f.geo = g;
            if (pose_form == 2) throw IoError(line_no, "mixed geodetic/local pose forms");
            pose_form = 1;
        } else {
            throw IoError(line_no, "drone pose needs lat_deg/lon_deg/alt_m or local_xyz_m");
        }

        const auto q = j.value("quat", std::vector<double>{});
        if (q.size() != 4) throw IoError(line_no, "quat must have 4 entries");
        f.quat = {q[0], q[1], q[2], q[3]};
        const auto fov = j.value("fov_deg", std::vector<double>{});
        if (fov.size() != 2) throw IoError(line_no, "fov_deg must have 2 entries");
        f.fov_deg_x = fov[0];
        f.fov_deg_y = fov[1];
        const auto img = j.value("image_px", std::vector<int>{});
        if (img.size() != 2) throw IoError(line_no, "image_px must have 2 entries");
        f.image_w = img[0];
        f.image_h = img[1];

        const bool has_boxes = j.contains("boxes");
        const bool has_doas = j.contains("doas");
        if (has_boxes == has_doas)
            throw IoError(line_no, "exactly one of 'boxes' or 'doas' is required");
        if (has_boxes) {
            std::vector<BoundingBox> boxes;
            for (const auto& b : j["boxes"]) {
                const auto v = b.get<std::vector<double>>();
                if (v.size() != 4) throw IoError(line_no, "each box must have 4 entries");
                boxes.push_back({v[0], v[1], v[2], v[3]});
            }
            f.boxes = std::move(boxes);
        } else {
            std::vector<Eigen::Vector3d> doas;
            for (const auto& d : j["doas"]) {
                const auto v = d.get<std::vector<double>>();
                if (v.size() != 3) throw IoError(line_no, "each doa must have 3 entries");
                Eigen::Vector3d z(v[0], v[1], v[2]);
                if (std::abs(z.norm() - 1.0) > 1e-6)
                    throw IoError(line_no, "doa entries must be unit vectors");
                doas.push_back(z);
            }
            f.doas = std::move(doas);
        }
        out.push_back(std::move(f));
    }
    return out;
}

void write_detection_frames(const std::string& path, const std::vector<DetectionFrame>& frames) {
    std::ofstream out(path);
    if (!out) throw IoError(0, "cannot write " + path);
    for (const auto& f : frames) {
        json j;
        j["frame"] = f.frame;
        j["time_s"] = f.time_s;
        if (f.local_xyz) {
            j["drone"]["local_xyz_m"] = {f.local_xyz->x(), f.local_xyz->y(), f.local_xyz->z()};
        } else if (f.geo) {
            j["drone"]["lat_deg"] = f.geo->latitude / kDeg;
            j["drone"]["lon_deg"] = f.geo->longitude / kDeg;
            j["drone"]["alt_m"] = f.geo->altitude;
        }
        j["quat"] = {f.quat.q1, f.quat.q2, f.quat.q3, f.quat.q4};
        j["fov_deg"] = {f.fov_deg_x, f.fov_deg_y};
        j["image_px"] = {f.image_w, f.image_h};
        if (f.boxes) {
            json boxes = json::array();
            for (const auto& b : *f.boxes) boxes.push_back({b.bx, b.by, b.bw, b.bh});
            j["boxes"] = std::move(boxes);
        }
        if (f.doas) {
            json doas = json::array();
            for (const auto& d : *f.doas) doas.push_back({d.x(), d.y(), d.z()});
            j["doas"] = std::move(doas);
        }
        out << j.dump() << '\n';
    }
}

std::vector<FrameInput> to_frame_inputs(const std::vector<DetectionFrame>& frames,
                                        PixelMethod method) {
    std::vector<FrameInput> out;
    out.reserve(frames.size());
    std::optional<GeoCoordinate> origin;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const DetectionFrame& f = frames[i];
        FrameInput input;
        input.pose.quat = f.quat;
        input.pose.fov_x = f.fov_deg_x * kDeg;
        input.pose.fov_y = f.fov_deg_y * kDeg;
        input.pose.image_w = f.image_w;
        input.pose.image_h = f.image_h;
        if (f.local_xyz) {
            input.pose.position_local = *f.local_xyz;
        } else {
            if (!origin) origin = GeoCoordinate{f.geo->latitude, f.geo->longitude, 0.0};
            input.pose.position_local = wgs84_to_local(*f.geo, *origin);
        }
        input.pose.validate();
        if (f.doas) {
            input.measurements = *f.doas;
        } else {
            for (const auto& b : *f.boxes)
                input.measurements.push_back(
                    angles_to_doa(pixel_to_angles(bbox_center(b), input.pose, method)));
        }
        out.push_back(std::move(input));
    }
    return out;
}

std::vector<TruthFrame> read_truth_frames(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(0, "cannot open " + path);
    std::vector<TruthFrame> out;
    std::string text;
    int line_no = 0;
    while (std::getline(in, text)) {
        ++line_no;
        if (text.empty()) continue;
        const json j = parse_line(text, line_no);
        TruthFrame f;
        f.frame = static_cast<int>(number_at(j, "frame", line_no));
        if (!j.contains("objects") || !j["objects"].is_array())
            throw IoError(line_no, "missing 'objects' array");
        for (const auto& o : j["objects"]) {
            const auto s = o.value("state", std::vector<double>{});
            if (s.size() != 4) throw IoError(line_no, "object state must have 4 entries");
            f.ids.push_back(o.value("id", -1));
            f.states.push_back(Eigen::Vector4d(s[0], s[1], s[2], s[3]));
        }
        out.push_back(std::move(f));
    }
    return out;
}

void write_truth_frames(const std::string& path, const std::vector<TruthFrame>& frames) {
    std::ofstream out(path);
    if (!out) throw IoError(0, "cannot write " + path);
    for (const auto& f : frames) {
        json objects = json::array();
        for (std::size_t i = 0; i < f.states.size(); ++i) {
            json o;
            o["id"] = i < f.ids.size() ? f.ids[i] : -1;
            o["state"] = {f.states[i](0), f.states[i](1), f.states[i](2), f.states[i](3)};
            objects.push_back(std::move(o));
        }
        json j;
        j["frame"] = f.frame;
        j["objects"] = std::move(objects);
        out << j.dump() << '\n';
    }
}

void write_estimates(const std::string& path, const std::vector<TrajectoryEstimate>& estimates) {
    std::ofstream out(path);
    if (!out) throw IoError(0, "cannot write " + path);
    json trajectories = json::array();
    for (const auto& est : estimates) {
        json t;
        t["track_id"] = est.track_id;
        t["birth_step"] = est.birth_step;
        t["end_step"] = est.end_step;
        json states = json::array();
        for (const auto& x : est.states) states.push_back({x(0), x(2), x(1), x(3)});
        t["states"] = std::move(states);
        trajectories.push_back(std::move(t));
    }
    json doc;
    doc["trajectories"] = std::move(trajectories);
    out << doc.dump(2) << '\n';
}

std::vector<TrajectoryEstimate> read_estimates(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(0, "cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw IoError(0, std::string("invalid JSON: ") + e.what());
    }
    std::vector<TrajectoryEstimate> out;
    for (const auto& t : doc.value("trajectories", json::array())) {
        TrajectoryEstimate est;
        est.track_id = t.value("track_id", 0L);
        est.birth_step = t.value("birth_step", 0);
        est.end_step = t.value("end_step", 0);
        for (const auto& s : t["states"]) {
            const auto v = s.get<std::vector<double>>();
            if (v.size() != 4) throw IoError(0, "trajectory state must have 4 entries");
            est.states.push_back(Eigen::Vector4d(v[0], v[2], v[1], v[3]));
        }
        out.push_back(std::move(est));
    }
    return out;
}

}  // namespace doatrack
