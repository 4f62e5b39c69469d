// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <numbers>
#include <optional>
#include <vector>

namespace mdpano {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Pinhole intrinsics. Pixel (i, j) has its centre at continuous coordinate (i, j).
struct Intrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    /// Throws CalibrationError when the intrinsics cannot be inverted.
    void validate() const;
    double horizontalFov() const;

    /// Centered camera with the given horizontal field of view in radians.
    static Intrinsics fromFov(int width, int height, double horizontalFov);

    /// 4x4 homogeneous lifting (x, y, z, 1) -> (fx x/z + cx, fy y/z + cy, 1/z, 1) up to scale.
    Mat4 homogeneous() const;
};

/// Rigid transform mapping world coordinates into the local frame: x_local = R x_world + t.
struct Extrinsics {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    void validate() const;

    Vec3 apply(const Vec3 &world) const { return rotation * world + translation; }
    Vec3 applyInverse(const Vec3 &local) const { return rotation.transpose() * (local - translation); }

    /// Position of the frame origin expressed in world coordinates.
    Vec3 center() const { return -rotation.transpose() * translation; }
    /// Local +z axis expressed in world coordinates.
    Vec3 forward() const { return rotation.row(2).transpose(); }

    Mat4 matrix() const;

    /// Frame centred at `center` whose local axes, in world coordinates, are the rows of `rotation`.
    static Extrinsics fromCenter(const Mat3 &rotation, const Vec3 &center);
    /// Camera at `center` looking along `forward` with +y of the image pointing towards `down`.
    static Extrinsics lookAt(const Vec3 &center, const Vec3 &forward, const Vec3 &up = Vec3::UnitZ());
    static Extrinsics identity() { return {}; }
};

struct Camera {
    Intrinsics intrinsics;
    Extrinsics extrinsics;
};

struct CameraRig {
    std::vector<Camera> cameras;
    Extrinsics rigCenter;

    std::size_t size() const { return cameras.size(); }

    /// Checks k >= 2, every camera's calibration, and that every camera centre lies within
    /// `maxRadius` of the rig centre.
    void validate(double maxRadius = 1.0) const;

    /// Outward-facing horizontal ring of `count` cameras, camera v looking along azimuth
    /// v * 2pi / count, centres at `ringRadius` from the rig centre.
    static CameraRig ring(int count, double ringRadius, const Intrinsics &intrinsics);
};

struct CylCoord {
    double rho = 0.0;
    double phi = 0.0;
    double z = 0.0;
};

/// Continuous panorama pixel coordinates. Pixel (i, j) has its centre at (i + 0.5, j + 0.5).
struct PanoPixel {
    double col = 0.0;
    double row = 0.0;
};

/// Cylindrical panorama pixel mapping: column <-> azimuth, row <-> h = z / rho.
struct PanoMapping {
    int width = 2560;
    int height = 640;
    double vFovSlope = 1.0;

    void validate() const;

    double colOfPhi(double phi) const;
    double rowOfSlope(double h) const;
    double phiOfCol(double col) const;
    double slopeOfRow(double row) const;

    /// Azimuth / slope at the centre of integer pixel (i, j).
    double phiAtPixel(int col) const { return phiOfCol(col + 0.5); }
    double slopeAtPixel(int row) const { return slopeOfRow(row + 0.5); }

    friend bool operator==(const PanoMapping &, const PanoMapping &) = default;
};

/// World point of MPI pixel (xs, ys) on the plane with inverse depth `invDepth`, expressed in the
/// rig-centred frame: E_w E_v^-1 I_v^-1 [xs, ys, 1/d, 1].
Vec3 unprojectMpiPixel(double xs, double ys, double invDepth, const Camera &cam, const Extrinsics &rigCenter);

CylCoord toCylindrical(const Vec3 &p);
Vec3 fromCylindrical(const CylCoord &c);

/// Continuous panorama coordinates of `c`, or nullopt when |z/rho| exceeds the vertical coverage.
/// Throws UndefinedAzimuthError for rho == 0.
std::optional<PanoPixel> panoPixelOf(const CylCoord &c, const PanoMapping &mapping);

/// Wraps an angle into [-pi, pi).
double wrapAngle(double phi);

/// Rotation matrix (camera <- world) from a unit quaternion (w, x, y, z) describing the camera
/// orientation in the world.
Mat3 rotationFromQuaternion(double w, double x, double y, double z);

} // namespace mdpano
