#pragma once

#include <Eigen/Dense>

namespace doatrack {

/// Unit quaternion, scalar-first: q = q1 + q2 i + q3 j + q4 k.
struct Quaternion {
    double q1 = 1.0;
    double q2 = 0.0;
    double q3 = 0.0;
    double q4 = 0.0;

    double norm() const;
    Quaternion normalized() const;
    Quaternion conjugate() const { return {q1, -q2, -q3, -q4}; }

    /// Hamilton product this ⊗ other.
    Quaternion operator*(const Quaternion& other) const;
};

/// Drone camera pose for one frame: position of the optical center in the
/// local ground frame (x East, y North, z down), the camera-frame attitude
/// quaternion, the field of view [fx, fy] in radians and the image size in
/// pixels (even, so the center pixel is well defined).
struct CameraPose {
    Eigen::Vector3d position_local = Eigen::Vector3d::Zero();
    Quaternion quat;
    double fov_x = 0.0;   // radians, 0 < fov_x < 2*pi
    double fov_y = 0.0;   // radians, 0 < fov_y < pi
    int image_w = 0;      // pixels, positive and even
    int image_h = 0;

    void validate() const;  // throws std::invalid_argument on violation
};

/// WGS84 geodetic coordinate, angles in radians, ellipsoidal altitude in m.
struct GeoCoordinate {
    double latitude = 0.0;
    double longitude = 0.0;
    double altitude = 0.0;
};

/// Continuous (sub-pixel) image coordinate.
struct PixelPoint {
    double ix = 0.0;
    double iy = 0.0;
};

/// Detector bounding box: upper-left corner plus width/height, pixels.
struct BoundingBox {
    double bx = 0.0;
    double by = 0.0;
    double bw = 0.0;
    double bh = 0.0;
};

/// Azimuth/elevation pair in the camera frame, radians.
struct Angles {
    double azimuth = 0.0;
    double elevation = 0.0;
};

enum class PixelMethod {
    FovLinear = 1,  // centered pixel scaled by FoV
    Pinhole = 2,    // arctangent of centered pixel over the pinhole focal length
};

/// Rotation matrix of a unit quaternion. Maps vectors expressed in the local
/// frame to the camera frame (v_cam = R * v_local). Throws if the quaternion
/// deviates from unit norm by more than 1e-6.
Eigen::Matrix3d rotation_matrix(const Quaternion& q);

/// Inverse of rotation_matrix: quaternion whose rotation_matrix equals R
/// (up to global sign). R must be a proper rotation.
Quaternion quaternion_from_rotation(const Eigen::Matrix3d& r);

/// Pinhole focal length in pixels, averaged over the two image axes:
/// f_I = (w / (2 tan(fx/2)) + h / (2 tan(fy/2))) / 2.
double focal_length_pixels(const CameraPose& pose);

/// Per-axis pinhole focal lengths (w / (2 tan(fx/2)), h / (2 tan(fy/2))).
Eigen::Vector2d focal_length_pixels_xy(const CameraPose& pose);

/// Convert an image pixel to camera-frame azimuth/elevation. Off-image
/// pixels are accepted and extrapolate.
Angles pixel_to_angles(const PixelPoint& p, const CameraPose& pose, PixelMethod method);

/// Spherical angles to DOA unit vector:
/// z = (cos(az) cos(el), sin(az) cos(el), sin(el)).
Eigen::Vector3d angles_to_doa(double azimuth, double elevation);
inline Eigen::Vector3d angles_to_doa(const Angles& a) { return angles_to_doa(a.azimuth, a.elevation); }

/// Inverse of angles_to_doa. At the poles (|elevation| = pi/2) the azimuth is
/// undefined; 0 is returned there. Throws on (near-)zero-norm input.
Angles doa_to_angles(const Eigen::Vector3d& z);

/// Intersect the ray from the drone along a camera-frame DOA with the ground
/// plane z = 0 and return the (px, py) hit point. Throws std::domain_error
/// if the ray is parallel to or points away from the ground.
Eigen::Vector2d project_doa_to_ground(const Eigen::Vector3d& doa_camera, const CameraPose& pose);

/// Geodetic coordinate to the local tangent frame (x East, y North, z down)
/// anchored at `origin` on the ground. Exact geodetic -> ECEF -> tangent
/// rotation; intended for points within a few tens of km of the origin.
Eigen::Vector3d wgs84_to_local(const GeoCoordinate& geo, const GeoCoordinate& origin);

/// Center of a bounding box. Throws on non-positive width or height.
PixelPoint bbox_center(const BoundingBox& b);

}  // namespace doatrack
