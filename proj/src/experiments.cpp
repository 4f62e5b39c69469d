// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#include "mdpano/experiments.hpp"

#include "mdpano/error.hpp"

#include <json.hpp>

#include <cmath>
#include <numbers>
#include <random>

namespace mdpano {

CameraRig RingRigSpec::build() const {
    if (cameras < 2 || resolution < 2 || !(fovDeg > 0.0 && fovDeg < 180.0)) {
        throw CalibrationError("ring rig: need >= 2 cameras, resolution >= 2 and 0 < fov < 180 degrees");
    }
    const Intrinsics k = Intrinsics::fromFov(resolution, resolution, fovDeg * std::numbers::pi / 180.0);
    return CameraRig::ring(cameras, ringRadius, k);
}

std::string ExperimentTable::toJson() const {
    nlohmann::ordered_json rowsJson = nlohmann::ordered_json::array();
    auto report = [](const MetricsReport &m) {
        return nlohmann::ordered_json{{"psnr", m.psnr}, {"ssim", m.ssim}, {"l1", m.l1}};
    };
    for (const ExperimentRow &row : rows) {
        nlohmann::ordered_json frames = nlohmann::ordered_json::array();
        for (const MetricsReport &f : row.frames) {
            frames.push_back(report(f));
        }
        rowsJson.push_back({{parameterName, row.parameter}, {"aggregate", report(row.aggregate)}, {"frames", frames}});
    }
    nlohmann::ordered_json j{{"table", name}, {"parameter", parameterName}, {"rows", rowsJson}};
    return j.dump(2);
}

ExperimentRow evaluateTargets(const Mdp &mdp, const SyntheticScene &scene, std::span<const TargetCamera> targets,
                              const SoftZConfig &render) {
    ExperimentRow row;
    const RenderSource source = RenderSource::fromMdp(mdp);
    for (const TargetCamera &target : targets) {
        const ImageF rgb = toRgb(mdpano::render(source, target, render).rgba, scene.background.data());
        const RaycastImage truth = raycastRender(scene, target);
        row.frames.push_back(computeMetrics(rgb, truth.rgb));
    }
    row.aggregate = aggregateMetrics(row.frames);
    return row;
}

ExperimentTable layerSweepExperiment(const SyntheticScene &scene, const CameraRig &rig, const PipelineConfig &config,
                                     std::span<const int> layerCounts, std::span<const TargetCamera> targets,
                                     const SoftZConfig &render) {
    const std::vector<ImageF> views = renderRigViews(scene, rig);
    const std::vector<Mdp> mdps = buildGlobalMdps(rig, views, config, layerCounts);
    ExperimentTable table{"layer_sweep", "layers", {}};
    for (std::size_t i = 0; i < mdps.size(); ++i) {
        ExperimentRow row = evaluateTargets(mdps[i], scene, targets, render);
        row.parameter = layerCounts[i];
        table.rows.push_back(std::move(row));
    }
    return table;
}

ExperimentTable disparitySweepExperiment(const SyntheticScene &scene, const CameraRig &rig,
                                         const PipelineConfig &config, std::span<const double> magnitudes,
                                         std::span<const Vec3> directions, const SoftZConfig &render) {
    const std::vector<ImageF> views = renderRigViews(scene, rig);
    const Mdp mdp = buildGlobalMdp(rig, views, config);
    ExperimentTable table{"disparity_sweep", "translation", {}};
    for (double magnitude : magnitudes) {
        std::vector<TargetCamera> targets;
        for (const Vec3 &dir : directions) {
            targets.push_back(TargetCamera::panorama(mdp.mapping, Extrinsics::fromCenter(Mat3::Identity(), magnitude * dir)));
        }
        ExperimentRow row = evaluateTargets(mdp, scene, targets, render);
        row.parameter = magnitude;
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::vector<Vec3> randomHorizontalDirections(int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::vector<Vec3> out;
    for (int i = 0; i < count; ++i) {
        const double a = angle(rng);
        out.emplace_back(std::cos(a), std::sin(a), 0.0);
    }
    return out;
}

std::vector<TargetCamera> randomPanoramaTargets(const PanoMapping &mapping, int count, double maxRadius,
                                                std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<TargetCamera> out;
    for (int i = 0; i < count; ++i) {
        const double a = angle(rng);
        const double r = maxRadius * std::sqrt(unit(rng));
        const Vec3 center(r * std::cos(a), r * std::sin(a), 0.0);
        out.push_back(TargetCamera::panorama(mapping, Extrinsics::fromCenter(Mat3::Identity(), center)));
    }
    return out;
}

} // namespace mdpano
