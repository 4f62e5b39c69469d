// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

// Fixtures shared by the unit and acceptance tests.

#pragma once

#include "mdpano/geometry.hpp"
#include "mdpano/image.hpp"
#include "mdpano/mdp.hpp"
#include "mdpano/psv.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <random>
#include <span>

namespace mdpano::testing {

inline Mat3 randomRotation(std::mt19937_64 &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    return q.normalized().toRotationMatrix();
}

inline Vec3 randomVec(std::mt19937_64 &rng, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    return {u(rng), u(rng), u(rng)};
}

/// Random MDP with layers ordered by shell, depths inside each shell's radius range.
inline Mdp randomMdp(std::mt19937_64 &rng, const PanoMapping &mapping, const ShellPartition &partition,
                     double alphaLo = 0.0, double alphaHi = 1.0) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::uniform_real_distribution<double> a(alphaLo, alphaHi);
    Mdp mdp = Mdp::empty(mapping, partition);
    const std::vector<double> b = partition.boundaries();
    for (int m = 0; m < partition.count; ++m) {
        MdpLayer &layer = mdp.layers[m];
        std::uniform_real_distribution<double> d(b[m], b[m + 1]);
        for (int y = 0; y < mapping.height; ++y) {
            for (int x = 0; x < mapping.width; ++x) {
                for (int c = 0; c < 3; ++c) {
                    layer.color.at(x, y, c) = u(rng);
                }
                layer.depth.at(x, y) = static_cast<float>(d(rng));
                layer.alpha.at(x, y) = static_cast<float>(a(rng));
            }
        }
    }
    return mdp;
}

/// Camera `count` views looking along +x from centres spread along y, used for plane scenes.
inline CameraRig lateralRig(int count, double spacing, const Intrinsics &k) {
    CameraRig rig;
    for (int i = 0; i < count; ++i) {
        const double y = (i - (count - 1) / 2.0) * spacing;
        rig.cameras.push_back({k, Extrinsics::lookAt(Vec3(0.0, y, 0.0), Vec3::UnitX())});
    }
    return rig;
}

} // namespace mdpano::testing

#include "mdpano/renderer.hpp"
#include "mdpano/scene.hpp"

namespace mdpano::testing {

/// Random 16x16x8 MPI seen by a camera at the rig centre, collapsed into `shells` shells and
/// rendered from the centre. Returns the largest premultiplied RGBA difference, over all MPI
/// rays, between the render and direct over-compositing of the full MPI along that ray.
double collapseAssociativityError(std::uint64_t seed, int shells);

struct GradientCheck {
    double maxRelativeError = 0.0; ///< |analytic - numeric| / max(|analytic|, |numeric|, floor)
    std::size_t entries = 0;
    std::size_t nonZero = 0; ///< entries with a numeric gradient above the floor
};

/// Relative-error floor of the gradient check: entries smaller than this are compared absolutely.
inline constexpr double kGradientFloor = 1e-4;

/// Random 8x8 two-shell MDP and random panorama pose; compares renderBackward against central
/// finite differences with step 1e-4 on every colour, depth and alpha entry.
GradientCheck gradientCheck(std::uint64_t seed);

/// Largest |soft - hard| channel difference for two contributions with inverse depths `gap`
/// apart at tau = 1000, over `trials` random colours, alphas and weights.
double softZHardGapError(std::uint64_t seed, double gap, int trials);

/// Small ring rig and scene used for pipeline-level checks (runs in well under a second).
struct MiniPipeline {
    CameraRig rig;
    SyntheticScene scene;
    std::vector<ImageF> images;
    PipelineConfig config;
};
MiniPipeline miniPipeline();

struct RoundTripCheck {
    int exact = 0;              ///< MDPs whose decoded copy equals the original bit for bit
    int checksumRejected = 0;   ///< corrupted payloads rejected with ChecksumError
};

/// Encodes and decodes `count` random MDPs of random shapes, then flips one payload byte of each
/// encoding and decodes again.
RoundTripCheck serializationRoundTrips(std::uint64_t seed, int count);

/// Builds the mini pipeline with one shell and with the dedicated RGBD panorama path and renders
/// both from `targets`. True when every frame is bit-identical.
bool singleShellMatchesRgbdPath(const MiniPipeline &p, std::span<const TargetCamera> targets);

/// Builds and renders the mini pipeline with each worker count. True when every MDP and every
/// frame is bit-identical to the first.
bool deterministicAcrossWorkers(const MiniPipeline &p, std::span<const int> workerCounts);

/// Largest relative error of unprojectMpiPixel against the homogeneous 4x4 chain
/// E_rig E_cam^-1 I_cam^-1 over `count` random intrinsics, poses, pixels and inverse depths.
double unprojectOracleError(std::uint64_t seed, int count);

/// Largest relative error of toCylindrical and fromCylindrical against direct trigonometry
/// (rho = sqrt(x^2 + y^2), phi = atan2(y, x), x = rho cos phi, y = rho sin phi) over `count`
/// random points.
double cylindricalOracleError(std::uint64_t seed, int count);

/// Largest |soft - weighted mean| channel difference for contributions sharing one inverse depth.
double softZEqualDepthError(std::uint64_t seed, int trials);

/// True when the float payloads of two MDPs and their layouts are bit-identical.
bool bitIdentical(const Mdp &a, const Mdp &b);
bool bitIdentical(const ImageD &a, const ImageD &b);

} // namespace mdpano::testing
