// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdpano/image.hpp"
#include "mdpano/mdp.hpp"
#include "mdpano/renderer.hpp"

namespace mdpano {

/// A single RGBD panorama with opacity: every MPI point of every view composited into one
/// cylindrical image, with radii limited to [rhoMin, rhoMax]. This is the representation a
/// one-shell MDP must reduce to; it is built here without any shell machinery.
struct RgbdPanorama {
    PanoMapping mapping;
    double rhoMin = 1.0;
    double rhoMax = 100.0;
    ImageF color; ///< W x H x 3
    ImageF depth; ///< W x H x 1
    ImageF alpha; ///< W x H x 1
};

RgbdPanorama buildRgbdPanorama(const CameraRig &rig, const std::vector<ImageF> &images, const PipelineConfig &config,
                               const MpiEstimator *estimator = nullptr);

/// Splats the panorama into the target with the soft z-buffer; premultiplied RGBA.
ImageD renderRgbdPanorama(const RgbdPanorama &pano, const TargetCamera &target, const SoftZConfig &config);

} // namespace mdpano
