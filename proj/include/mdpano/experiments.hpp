// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdpano/metrics.hpp"
#include "mdpano/mdp.hpp"
#include "mdpano/renderer.hpp"
#include "mdpano/scene.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mdpano {

/// Outward ring rig description used by the evaluation harness.
struct RingRigSpec {
    int cameras = 16;
    double ringRadius = 0.3;
    double fovDeg = 100.0;
    int resolution = 256; ///< square images

    CameraRig build() const;
};

struct ExperimentRow {
    double parameter = 0.0; ///< layer count or translation magnitude
    std::vector<MetricsReport> frames;
    MetricsReport aggregate;
};

struct ExperimentTable {
    std::string name;
    std::string parameterName;
    std::vector<ExperimentRow> rows;

    /// Machine-readable JSON rendering of the table.
    std::string toJson() const;
};

/// Renders `mdp` into each target, composites over the scene background and scores it against the
/// ray-cast ground truth.
ExperimentRow evaluateTargets(const Mdp &mdp, const SyntheticScene &scene, std::span<const TargetCamera> targets,
                              const SoftZConfig &render);

/// Layer-count sweep: one global MDP per entry of `layerCounts` (the per-view MPIs are shared),
/// each rendered into every target.
ExperimentTable layerSweepExperiment(const SyntheticScene &scene, const CameraRig &rig, const PipelineConfig &config,
                                     std::span<const int> layerCounts, std::span<const TargetCamera> targets,
                                     const SoftZConfig &render);

/// Translation sweep: a single MDP rendered from panoramas displaced from the rig centre by each
/// magnitude along each of the given horizontal directions.
ExperimentTable disparitySweepExperiment(const SyntheticScene &scene, const CameraRig &rig,
                                         const PipelineConfig &config, std::span<const double> magnitudes,
                                         std::span<const Vec3> directions, const SoftZConfig &render);

/// Panorama targets with the MDP mapping at `count` seeded random horizontal positions of radius
/// at most `maxRadius` around the rig centre, identity orientation.
std::vector<TargetCamera> randomPanoramaTargets(const PanoMapping &mapping, int count, double maxRadius,
                                                std::uint64_t seed);

/// `count` seeded unit vectors in the horizontal plane.
std::vector<Vec3> randomHorizontalDirections(int count, std::uint64_t seed);

} // namespace mdpano
