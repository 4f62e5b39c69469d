// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdpano/geometry.hpp"
#include "mdpano/image.hpp"
#include "mdpano/mdp.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mdpano {

/// Novel-view camera in the rig-centred frame: a pinhole image or a cylindrical panorama whose
/// axis is the camera's local z axis.
struct TargetCamera {
    enum class Mode { Perspective, Panorama };

    Mode mode = Mode::Panorama;
    Intrinsics intrinsics;
    PanoMapping mapping;
    Extrinsics pose;

    int width() const { return mode == Mode::Perspective ? intrinsics.width : mapping.width; }
    int height() const { return mode == Mode::Perspective ? intrinsics.height : mapping.height; }
    void validate() const;

    static TargetCamera perspective(const Intrinsics &k, const Extrinsics &pose);
    static TargetCamera panorama(const PanoMapping &m, const Extrinsics &pose);
};

struct SoftZConfig {
    double tau = 50.0;      ///< sharpness, multiplies inverse depth in 1/m
    double epsilon = 1e-12; ///< floor of the weight sum

    void validate() const;
};

struct SoftZContribution {
    double color[3] = {0, 0, 0};
    double alpha = 0.0;
    double invDepth = 0.0;
    double weight = 1.0; ///< splat weight, multiplies the exponential term
};

struct SoftZResult {
    double color[3] = {0, 0, 0};
    double alpha = 0.0;
};

/// Soft z-buffer: Σ w C e^{(d - d_max) τ} / max(Σ w e^{(d - d_max) τ}, ε), likewise for alpha,
/// with d_max over the contributions of positive weight.
SoftZResult softZResolve(std::span<const SoftZContribution> contributions, const SoftZConfig &config);

/// Double-precision copy of an MDP's channels, the differentiable input of the renderer.
struct RenderSource {
    struct Layer {
        std::vector<double> color; ///< [pixel][3], straight
        std::vector<double> depth;
        std::vector<double> alpha;
    };
    PanoMapping mapping;
    ShellPartition partition;
    std::vector<Layer> layers;

    static RenderSource fromMdp(const Mdp &mdp);
};

struct RenderResult {
    ImageD rgba; ///< premultiplied, W x H x 4
    bool orderingViolation = false;
    double motionBound = 0.0;
    std::uint64_t footprintSignature = 0; ///< hash of every discrete splat decision
};

/// Largest radius around the rig axis a target camera may move to before it enters the innermost
/// occupied shell. Infinite for an empty MDP.
double motionBound(const RenderSource &source);
double motionBound(const Mdp &mdp);

/// Forward splatting of every layer with a 2x2 bilinear kernel, soft z-buffering inside each layer,
/// then back-to-front over compositing from the outermost shell inwards.
RenderResult render(const RenderSource &source, const TargetCamera &target, const SoftZConfig &config);
RenderResult render(const Mdp &mdp, const TargetCamera &target, const SoftZConfig &config);

/// Splat-and-resolve of one layer: premultiplied RGBA layer map, W x H x 4.
ImageD splatLayer(const RenderSource::Layer &layer, const PanoMapping &mapping, const TargetCamera &target,
                  const SoftZConfig &config);

struct RenderGradients {
    std::vector<std::vector<double>> color; ///< per layer, [pixel][3]
    std::vector<std::vector<double>> depth;
    std::vector<std::vector<double>> alpha;
};

/// Gradient of Σ outputGradient · render(source) with respect to every layer colour, depth and
/// alpha, holding the bilinear footprints and d_max of the forward pass fixed.
RenderGradients renderBackward(const RenderSource &source, const TargetCamera &target, const SoftZConfig &config,
                               const ImageD &outputGradient);

struct TimedFrame {
    RenderResult result;
    double seconds = 0.0;
};

std::vector<TimedFrame> renderSequence(const Mdp &mdp, std::span<const TargetCamera> targets,
                                       const SoftZConfig &config);

/// Straight RGB over a background colour from a premultiplied RGBA render.
ImageF toRgb(const ImageD &rgba, const float background[3] = nullptr);

/// `count` copies of `base` on a horizontal circle of `radius` around the rig axis, the k-th
/// yawed by 2pi k / count about the world z axis.
std::vector<TargetCamera> orbitPoses(const TargetCamera &base, int count, double radius);

/// Target-image coordinates of a world point, pixel centres at integers, plus its inverse depth.
struct TargetProjection {
    double u = 0.0;
    double v = 0.0;
    double invDepth = 0.0;
};
std::optional<TargetProjection> projectToTarget(const TargetCamera &target, const Vec3 &world);

} // namespace mdpano
