// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#include "mdpano/geometry.hpp"

#include "mdpano/error.hpp"

#include <cmath>
#include <string>

namespace mdpano {

namespace {
constexpr double kPi = std::numbers::pi;
}

void Intrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
        throw CalibrationError("focal lengths must be positive and finite");
    }
    if (!std::isfinite(cx) || !std::isfinite(cy)) {
        throw CalibrationError("principal point must be finite");
    }
    if (width < 1 || height < 1) {
        throw CalibrationError("image size must be at least 1x1");
    }
}

double Intrinsics::horizontalFov() const { return 2.0 * std::atan(width / (2.0 * fx)); }

Intrinsics Intrinsics::fromFov(int width, int height, double horizontalFov) {
    Intrinsics k;
    k.width = width;
    k.height = height;
    k.fx = width / (2.0 * std::tan(horizontalFov / 2.0));
    k.fy = k.fx;
    k.cx = (width - 1) / 2.0;
    k.cy = (height - 1) / 2.0;
    return k;
}

Mat4 Intrinsics::homogeneous() const {
    Mat4 m = Mat4::Zero();
    m(0, 0) = fx;
    m(0, 2) = cx;
    m(1, 1) = fy;
    m(1, 2) = cy;
    m(2, 3) = 1.0;
    m(3, 2) = 1.0;
    return m;
}

void Extrinsics::validate() const {
    if (!rotation.allFinite() || !translation.allFinite()) {
        throw CalibrationError("extrinsics contain non-finite values");
    }
    const double orthoErr = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (orthoErr > 1e-6) {
        throw CalibrationError("rotation is not orthonormal (error " + std::to_string(orthoErr) + ")");
    }
    if (std::abs(rotation.determinant() - 1.0) > 1e-6) {
        throw CalibrationError("rotation determinant is not +1");
    }
}

Mat4 Extrinsics::matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = translation;
    return m;
}

Extrinsics Extrinsics::fromCenter(const Mat3 &rotation, const Vec3 &center) {
    Extrinsics e;
    e.rotation = rotation;
    e.translation = -rotation * center;
    return e;
}

Extrinsics Extrinsics::lookAt(const Vec3 &center, const Vec3 &forward, const Vec3 &up) {
    const Vec3 f = forward.normalized();
    Vec3 right = f.cross(up);
    if (right.norm() < 1e-12) {
        throw CalibrationError("lookAt: forward is parallel to up");
    }
    right.normalize();
    const Vec3 down = f.cross(right);
    Mat3 r;
    r.row(0) = right.transpose();
    r.row(1) = down.transpose();
    r.row(2) = f.transpose();
    return fromCenter(r, center);
}

void CameraRig::validate(double maxRadius) const {
    if (cameras.size() < 2) {
        throw CalibrationError("a rig needs at least two cameras");
    }
    rigCenter.validate();
    const Vec3 origin = rigCenter.center();
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        try {
            cameras[i].intrinsics.validate();
            cameras[i].extrinsics.validate();
        } catch (const CalibrationError &e) {
            throw CalibrationError("camera " + std::to_string(i) + ": " + e.what());
        }
        if ((cameras[i].extrinsics.center() - origin).norm() > maxRadius) {
            throw CalibrationError("camera " + std::to_string(i) + " lies outside the rig radius bound");
        }
    }
}

CameraRig CameraRig::ring(int count, double ringRadius, const Intrinsics &intrinsics) {
    CameraRig rig;
    rig.cameras.reserve(count);
    for (int v = 0; v < count; ++v) {
        const double theta = 2.0 * kPi * v / count;
        const Vec3 dir(std::cos(theta), std::sin(theta), 0.0);
        rig.cameras.push_back({intrinsics, Extrinsics::lookAt(ringRadius * dir, dir)});
    }
    return rig;
}

void PanoMapping::validate() const {
    if (width < 1 || height < 1 || !(vFovSlope > 0.0) || !std::isfinite(vFovSlope)) {
        throw CalibrationError("invalid panorama mapping");
    }
}

double PanoMapping::colOfPhi(double phi) const { return (phi + kPi) / (2.0 * kPi) * width; }

double PanoMapping::rowOfSlope(double h) const { return (1.0 - h / vFovSlope) / 2.0 * height; }

double PanoMapping::phiOfCol(double col) const { return col / width * 2.0 * kPi - kPi; }

double PanoMapping::slopeOfRow(double row) const { return vFovSlope * (1.0 - 2.0 * row / height); }

Vec3 unprojectMpiPixel(double xs, double ys, double invDepth, const Camera &cam, const Extrinsics &rigCenter) {
    const Intrinsics &k = cam.intrinsics;
    if (!(k.fx > 0.0) || !(k.fy > 0.0)) {
        throw CalibrationError("intrinsics are not invertible");
    }
    if (!(invDepth > 0.0)) {
        throw NumericDegeneracyError("inverse depth must be positive");
    }
    const double depth = 1.0 / invDepth;
    const Vec3 local((xs - k.cx) / k.fx * depth, (ys - k.cy) / k.fy * depth, depth);
    return rigCenter.apply(cam.extrinsics.applyInverse(local));
}

CylCoord toCylindrical(const Vec3 &p) {
    CylCoord c;
    c.rho = std::hypot(p.x(), p.y());
    c.phi = c.rho > 0.0 ? wrapAngle(std::atan2(p.y(), p.x())) : 0.0;
    c.z = p.z();
    return c;
}

Vec3 fromCylindrical(const CylCoord &c) { return {c.rho * std::cos(c.phi), c.rho * std::sin(c.phi), c.z}; }

double wrapAngle(double phi) {
    if (phi >= -kPi && phi < kPi) {
        return phi;
    }
    double w = std::fmod(phi + kPi, 2.0 * kPi);
    if (w < 0.0) {
        w += 2.0 * kPi;
    }
    w -= kPi;
    return w >= kPi ? -kPi : w;
}

std::optional<PanoPixel> panoPixelOf(const CylCoord &c, const PanoMapping &mapping) {
    if (!(c.rho > 0.0)) {
        throw UndefinedAzimuthError("azimuth is undefined on the cylinder axis");
    }
    const double h = c.z / c.rho;
    if (std::abs(h) > mapping.vFovSlope) {
        return std::nullopt;
    }
    double col = mapping.colOfPhi(wrapAngle(c.phi));
    if (col >= mapping.width) {
        col -= mapping.width;
    }
    if (col < 0.0) {
        col += mapping.width;
    }
    return PanoPixel{col, mapping.rowOfSlope(h)};
}

Mat3 rotationFromQuaternion(double w, double x, double y, double z) {
    const Eigen::Quaterniond q(w, x, y, z);
    return q.normalized().toRotationMatrix().transpose();
}

} // namespace mdpano
