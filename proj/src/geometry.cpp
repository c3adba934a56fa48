#include "doatrack/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace doatrack {

namespace {

constexpr double kPi = 3.14159265358979323846;

// WGS84 ellipsoid.
constexpr double kWgs84A = 6378137.0;
constexpr double kWgs84F = 1.0 / 298.257223563;
constexpr double kWgs84E2 = kWgs84F * (2.0 - kWgs84F);

Eigen::Vector3d geodetic_to_ecef(const GeoCoordinate& g) {
    const double sin_lat = std::sin(g.latitude);
    const double cos_lat = std::cos(g.latitude);
    const double n = kWgs84A / std::sqrt(1.0 - kWgs84E2 * sin_lat * sin_lat);
    return {(n + g.altitude) * cos_lat * std::cos(g.longitude),
            (n + g.altitude) * cos_lat * std::sin(g.longitude),
            (n * (1.0 - kWgs84E2) + g.altitude) * sin_lat};
}

}  // namespace

double Quaternion::norm() const {
    return std::sqrt(q1 * q1 + q2 * q2 + q3 * q3 + q4 * q4);
}

Quaternion Quaternion::normalized() const {
    const double n = norm();
    if (n <= 0.0) throw std::invalid_argument("Quaternion: cannot normalize zero quaternion");
    return {q1 / n, q2 / n, q3 / n, q4 / n};
}

Quaternion Quaternion::operator*(const Quaternion& o) const {
    return {q1 * o.q1 - q2 * o.q2 - q3 * o.q3 - q4 * o.q4,
            q1 * o.q2 + q2 * o.q1 + q3 * o.q4 - q4 * o.q3,
            q1 * o.q3 - q2 * o.q4 + q3 * o.q1 + q4 * o.q2,
            q1 * o.q4 + q2 * o.q3 - q3 * o.q2 + q4 * o.q1};
}

void CameraPose::validate() const {
    if (!(fov_x > 0.0 && fov_x < 2.0 * kPi))
        throw std::invalid_argument("CameraPose: fov_x must be in (0, 2*pi)");
    if (!(fov_y > 0.0 && fov_y < kPi))
        throw std::invalid_argument("CameraPose: fov_y must be in (0, pi)");
    if (image_w <= 0 || image_h <= 0 || image_w % 2 != 0 || image_h % 2 != 0)
        throw std::invalid_argument("CameraPose: image size must be positive and even");
    if (std::abs(quat.norm() - 1.0) > 1e-6)
        throw std::invalid_argument("CameraPose: quaternion must have unit norm");
}

Eigen::Matrix3d rotation_matrix(const Quaternion& q) {
    if (std::abs(q.norm() - 1.0) > 1e-6)
        throw std::invalid_argument("rotation_matrix: quaternion must have unit norm");
    const double q1 = q.q1, q2 = q.q2, q3 = q.q3, q4 = q.q4;
    Eigen::Matrix3d r;
    r << 2 * q1 * q1 - 1 + 2 * q2 * q2, 2 * q2 * q3 + 2 * q1 * q4, 2 * q2 * q4 - 2 * q1 * q3,
         2 * q2 * q3 - 2 * q1 * q4, 2 * q1 * q1 - 1 + 2 * q3 * q3, 2 * q3 * q4 + 2 * q1 * q2,
         2 * q2 * q4 + 2 * q1 * q3, 2 * q3 * q4 - 2 * q1 * q2, 2 * q1 * q1 - 1 + 2 * q4 * q4;
    return r;
}

Quaternion quaternion_from_rotation(const Eigen::Matrix3d& r) {
    // Shepperd's method on the transposed (vector-rotation) matrix, since
    // rotation_matrix uses the frame-rotation convention.
    const Eigen::Matrix3d m = r.transpose();
    const double trace = m.trace();
    Quaternion q;
    if (trace > 0.0) {
        double s = std::sqrt(trace + 1.0) * 2.0;
        q.q1 = 0.25 * s;
        q.q2 = (m(2, 1) - m(1, 2)) / s;
        q.q3 = (m(0, 2) - m(2, 0)) / s;
        q.q4 = (m(1, 0) - m(0, 1)) / s;
    } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
        double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2.0;
        q.q1 = (m(2, 1) - m(1, 2)) / s;
        q.q2 = 0.25 * s;
        q.q3 = (m(0, 1) + m(1, 0)) / s;
        q.q4 = (m(0, 2) + m(2, 0)) / s;
    } else if (m(1, 1) > m(2, 2)) {
        double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2.0;
        q.q1 = (m(0, 2) - m(2, 0)) / s;
        q.q2 = (m(0, 1) + m(1, 0)) / s;
        q.q3 = 0.25 * s;
        q.q4 = (m(1, 2) + m(2, 1)) / s;
    } else {
        double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2.0;
        q.q1 = (m(1, 0) - m(0, 1)) / s;
        q.q2 = (m(0, 2) + m(2, 0)) / s;
        q.q3 = (m(1, 2) + m(2, 1)) / s;
        q.q4 = 0.25 * s;
    }
    return q.normalized();
}

Eigen::Vector2d focal_length_pixels_xy(const CameraPose& pose) {
    if (pose.fov_x >= kPi || pose.fov_y >= kPi)
        throw std::invalid_argument("focal_length_pixels: FoV must be below pi");
    return {pose.image_w / (2.0 * std::tan(pose.fov_x / 2.0)),
            pose.image_h / (2.0 * std::tan(pose.fov_y / 2.0))};
}

double focal_length_pixels(const CameraPose& pose) {
    const Eigen::Vector2d f = focal_length_pixels_xy(pose);
    return 0.5 * (f.x() + f.y());
}

Angles pixel_to_angles(const PixelPoint& p, const CameraPose& pose, PixelMethod method) {
    const double cx = pose.image_w / 2.0;
    const double cy = pose.image_h / 2.0;
    if (method == PixelMethod::FovLinear) {
        return {(p.ix - cx) / pose.image_w * pose.fov_x,
                (p.iy - cy) / pose.image_h * pose.fov_y};
    }
    const double f_i = focal_length_pixels(pose);
    return {std::atan((p.ix - cx) / f_i), std::atan((p.iy - cy) / f_i)};
}

Eigen::Vector3d angles_to_doa(double azimuth, double elevation) {
    const double ce = std::cos(elevation);
    return {std::cos(azimuth) * ce, std::sin(azimuth) * ce, std::sin(elevation)};
}

Angles doa_to_angles(const Eigen::Vector3d& z) {
    const double n = z.norm();
    if (n < 1e-12) throw std::invalid_argument("doa_to_angles: zero-norm input");
    const Eigen::Vector3d u = z / n;
    const double el = std::asin(std::clamp(u.z(), -1.0, 1.0));
    // Azimuth is undefined at the poles; return 0 there for determinism.
    if (std::abs(u.x()) < 1e-15 && std::abs(u.y()) < 1e-15) return {0.0, el};
    return {std::atan2(u.y(), u.x()), el};
}

Eigen::Vector2d project_doa_to_ground(const Eigen::Vector3d& doa_camera, const CameraPose& pose) {
    const Eigen::Matrix3d r = rotation_matrix(pose.quat);
    const Eigen::Vector3d nu = r.transpose() * doa_camera;  // camera -> local
    // The ray s + t*nu meets z = 0 at t = -s_z / nu_z, which must be positive
    // (drone above ground, ray pointing down).
    if (nu.z() <= 1e-9)
        throw std::domain_error("project_doa_to_ground: ray does not reach the ground plane");
    const double scale = pose.position_local.z() / nu.z();
    return {pose.position_local.x() - scale * nu.x(),
            pose.position_local.y() - scale * nu.y()};
}

Eigen::Vector3d wgs84_to_local(const GeoCoordinate& geo, const GeoCoordinate& origin) {
    const Eigen::Vector3d d = geodetic_to_ecef(geo) - geodetic_to_ecef(origin);
    const double sin_lat = std::sin(origin.latitude), cos_lat = std::cos(origin.latitude);
    const double sin_lon = std::sin(origin.longitude), cos_lon = std::cos(origin.longitude);
    const double east = -sin_lon * d.x() + cos_lon * d.y();
    const double north = -sin_lat * cos_lon * d.x() - sin_lat * sin_lon * d.y() + cos_lat * d.z();
    const double up = cos_lat * cos_lon * d.x() + cos_lat * sin_lon * d.y() + sin_lat * d.z();
    return {east, north, -up};
}

PixelPoint bbox_center(const BoundingBox& b) {
    if (b.bw <= 0.0 || b.bh <= 0.0)
        throw std::invalid_argument("bbox_center: box width and height must be positive");
    return {b.bx + b.bw / 2.0, b.by + b.bh / 2.0};
}

}  // namespace doatrack
