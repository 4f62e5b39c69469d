// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdpano/geometry.hpp"
#include "mdpano/image.hpp"
#include "mdpano/renderer.hpp"

#include <array>
#include <numbers>
#include <optional>
#include <vector>

namespace mdpano {

enum class TextureKind { Solid, Checker, Gradient, Smooth };

/// Procedural albedo. Checker mixes a 3D checkerboard of cell size `scale` with a finer sinusoidal
/// pattern so that no region is textureless; Gradient ramps from color to color2 over height;
/// Smooth mixes the two colours by a sum of incommensurate sinusoids of period about `scale`,
/// which bilinear resampling reproduces closely.
struct Material {
    std::array<float, 3> color{0.8f, 0.8f, 0.8f};
    std::array<float, 3> color2{0.2f, 0.2f, 0.2f};
    TextureKind texture = TextureKind::Checker;
    double scale = 0.5;

    std::array<float, 3> albedo(const Vec3 &p) const;
};

/// Finite vertical cylinder (axis parallel to z), visible from inside and outside. Only the arc
/// with azimuth (about its own axis) in [phiMin, phiMax] exists.
struct Cylinder {
    double cx = 0.0;
    double cy = 0.0;
    double radius = 1.0;
    double zMin = -1.0;
    double zMax = 1.0;
    double phiMin = -std::numbers::pi;
    double phiMax = std::numbers::pi;
    Material material;
};

struct Sphere {
    Vec3 center = Vec3::Zero();
    double radius = 1.0;
    Material material;
};

struct Box {
    Vec3 min = Vec3::Constant(-0.5);
    Vec3 max = Vec3::Constant(0.5);
    Material material;
};

/// Rectangular mirror: centre, unit normal and in-plane axis `uAxis`; reflects once.
struct MirrorPatch {
    Vec3 center = Vec3::Zero();
    Vec3 normal = Vec3::UnitX();
    Vec3 uAxis = Vec3::UnitY();
    double halfWidth = 0.5;
    double halfHeight = 0.5;
    std::array<float, 3> tint{0.9f, 0.9f, 0.9f};
};

struct SyntheticScene {
    std::vector<Cylinder> cylinders;
    std::vector<Sphere> spheres;
    std::vector<Box> boxes;
    std::optional<MirrorPatch> mirror;
    std::array<float, 3> background{0.0f, 0.0f, 0.0f};

    /// Largest distance of any primitive point from the z axis (mirror excluded).
    double maxRadius() const;
};

struct Hit {
    double t = 0.0;
    Vec3 point = Vec3::Zero();
    std::array<float, 3> color{0, 0, 0};
    bool viaMirror = false;
};

/// Nearest intersection along origin + t dir (t > 1e-9, dir need not be unit). A mirror hit
/// continues along the reflected ray; the reported t and point are those of the mirror.
std::optional<Hit> traceRay(const SyntheticScene &scene, const Vec3 &origin, const Vec3 &dir);

struct RaycastImage {
    ImageF rgb;   ///< W x H x 3, linear
    ImageD depth; ///< z depth for perspective targets, cylindrical radius for panoramas; 0 = miss
};

/// One ray per pixel centre, nearest hit wins, no antialiasing.
RaycastImage raycastRender(const SyntheticScene &scene, const TargetCamera &camera);

/// Ray-cast image of every rig camera (colours in linear [0,1]).
std::vector<ImageF> renderRigViews(const SyntheticScene &scene, const CameraRig &rig);

/// Desk-scale evaluation scene: a textured room cylinder, boxes and spheres spread over
/// 2-12 m, and a near pillar that produces disocclusions under translation.
SyntheticScene standardScene();

/// Concentric textured cylinders at the given radii, each open over a different azimuth window
/// so that outer shells stay visible from the centre.
SyntheticScene concentricCylindersScene(const std::vector<double> &radii);

} // namespace mdpano
