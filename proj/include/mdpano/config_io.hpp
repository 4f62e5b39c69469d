// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdpano/experiments.hpp"
#include "mdpano/mdp.hpp"
#include "mdpano/renderer.hpp"
#include "mdpano/scene.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mdpano {

/// Version written into, and required from, every JSON document below.
inline constexpr int kJsonFormatVersion = 1;

struct EvalSettings {
    std::vector<int> layerCounts{1, 2, 3, 4, 5};
    std::vector<double> translations{0.0, 0.15, 0.3};
    int poseCount = 4;
    double targetRadius = 0.3; ///< layer sweep targets lie within this radius of the rig centre
    std::uint64_t seed = 7;
};

/// Every tunable of the pipeline, renderer and harness.
struct AppConfig {
    PipelineConfig pipeline;
    SoftZConfig render;
    int threads = 0; ///< 0 = hardware concurrency
    RingRigSpec rig;
    EvalSettings eval;
    int maxFramePixels = 4096 * 2048; ///< largest image the server renders
};

/// Desk-scale evaluation settings: 640x320 panoramas, shells over 1.5-15 m, 16 cameras at 256 px.
AppConfig deskEvalConfig();

/// Parse failures throw ParseError, unsupported versions FormatVersionError, unreadable files
/// IoError. Unknown keys are rejected so that typos do not silently fall back to defaults.
AppConfig parseConfig(const std::string &text);
AppConfig loadConfig(const std::filesystem::path &path);
std::string configToJson(const AppConfig &config);

/// Rig documents: {"version", "cameras": [{fx, fy, cx, cy, width, height, rotation[9], translation[3]}],
/// "rig_center": {rotation, translation}}. Rotations are row-major camera <- world. Any failure to
/// obtain a valid calibration, including a missing file, throws CalibrationError.
CameraRig parseRig(const std::string &text);
CameraRig loadRig(const std::filesystem::path &path);
std::string rigToJson(const CameraRig &rig);

SyntheticScene parseScene(const std::string &text);
SyntheticScene loadScene(const std::filesystem::path &path);
std::string sceneToJson(const SyntheticScene &scene);

/// One requested viewpoint. Panorama targets without an explicit size use the MDP's mapping.
struct PoseSpec {
    Vec3 position = Vec3::Zero();
    double orientation[4] = {1.0, 0.0, 0.0, 0.0}; ///< unit quaternion (w, x, y, z), camera in world
    TargetCamera::Mode mode = TargetCamera::Mode::Panorama;
    int width = 0;
    int height = 0;
    double fovDeg = 90.0;              ///< perspective horizontal field of view
    std::optional<double> vFovSlope;   ///< panorama vertical coverage, defaults to the MDP's

    int pixelCount(const PanoMapping &mdpMapping) const;
    TargetCamera target(const PanoMapping &mdpMapping) const;
};

/// {"version", "poses": [pose...]} where each pose has "position", "orientation" and optionally
/// "mode" ("panorama" | "perspective"), "width", "height", "fov_deg", "v_fov_slope".
std::vector<PoseSpec> parsePoses(const std::string &text);
std::vector<PoseSpec> loadPoses(const std::filesystem::path &path);
std::string posesToJson(const std::vector<PoseSpec> &poses);

std::string readTextFile(const std::filesystem::path &path);
void writeTextFile(const std::filesystem::path &path, const std::string &text);

} // namespace mdpano
