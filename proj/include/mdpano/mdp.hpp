// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdpano/geometry.hpp"
#include "mdpano/image.hpp"
#include "mdpano/psv.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace mdpano {

enum class PartitionMode : std::uint32_t {
    EquidistantRadius = 0,
    EquidistantInverseRadius = 1,
};

/// M radius ranges covering [rhoMin, rhoMax]. Bin m is the half-open range
/// [boundary(m), boundary(m+1)); radii outside the cover clamp to the first/last bin.
struct ShellPartition {
    double rhoMin = 1.0;
    double rhoMax = 100.0;
    int count = 5;
    PartitionMode mode = PartitionMode::EquidistantRadius;

    void validate() const;
    /// count + 1 strictly increasing boundaries, first = rhoMin, last = rhoMax.
    std::vector<double> boundaries() const;
    int binOf(double rho) const;

    friend bool operator==(const ShellPartition &, const ShellPartition &) = default;
};

/// One RGBDα shell: straight colour, radius and opacity per panorama pixel. Where alpha is 0 the
/// colour and depth are 0.
struct MdpLayer {
    int shell = 0;
    ImageF color; ///< W x H x 3
    ImageF depth; ///< W x H x 1, cylindrical radius in metres
    ImageF alpha; ///< W x H x 1

    MdpLayer() = default;
    MdpLayer(int shellIndex, int width, int height)
        : shell(shellIndex), color(width, height, 3), depth(width, height, 1), alpha(width, height, 1) {}

    friend bool operator==(const MdpLayer &, const MdpLayer &) = default;
};

/// Multi depth panorama: layers ordered by increasing shell radius.
struct Mdp {
    PanoMapping mapping;
    ShellPartition partition;
    std::vector<MdpLayer> layers;

    int layerCount() const { return static_cast<int>(layers.size()); }
    void validate() const;
    /// Bytes of the float32 payload: M * 5 * W * H * 4.
    std::uint64_t payloadBytes() const;

    /// Empty (fully transparent) MDP with the given layout.
    static Mdp empty(const PanoMapping &mapping, const ShellPartition &partition);

    friend bool operator==(const Mdp &, const Mdp &) = default;
};

/// Payload footprint of a W x H x M panorama stack with five float32 channels.
std::uint64_t mdpPayloadBytes(int width, int height, int layers);

struct CylPoint {
    CylCoord position;
    float color[3] = {0, 0, 0}; ///< straight colour
    float alpha = 0.0f;
    float weight = 0.0f; ///< cosine of the angle between the pixel ray and the optical axis
    int view = 0;
    int layer = 0; ///< source MPI layer, larger = nearer
};

struct CylPointCloud {
    std::vector<CylPoint> points;
};

/// Every MPI pixel with alpha > alphaCull as a point in the rig's cylindrical frame.
CylPointCloud mpiToCylPoints(const Mpi &mpi, const Camera &cam, const Extrinsics &rigCenter, double alphaCull = 1e-4);

/// Splits the cloud into partition.count bins by radius, preserving point order inside each bin.
std::vector<CylPointCloud> binPoints(const CylPointCloud &cloud, const ShellPartition &partition);

/// Result of collapsing one bin: the RGBDα layer plus its per-pixel view weight map.
struct CollapsedLayer {
    MdpLayer layer;
    ImageF weight; ///< W x H x 1
};

struct RadiusRange {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
};

/// Collapses one bin into a single RGBDα panorama. Points land in the panorama pixel containing
/// them; points of the same source layer in one pixel are averaged, then layers are
/// over-composited back-to-front (premultiplied). Depth and view weight are composited with the
/// colour weights and normalised by the final alpha. Point radii are clamped into `range`.
CollapsedLayer collapseBin(std::span<const CylPoint> points, const PanoMapping &mapping, int shell,
                           RadiusRange range = {});

struct PerViewMdp {
    Mdp mdp;
    std::vector<ImageF> weights; ///< one W x H x 1 map per layer
};

struct MdpParams {
    int layerCount = 5;
    PartitionMode mode = PartitionMode::EquidistantRadius;
    std::optional<double> rhoMin; ///< defaults to the sweep near depth
    std::optional<double> rhoMax; ///< defaults to the sweep far depth
    double alphaCull = 1e-4;
    PanoMapping mapping{640, 320, 1.0};
};

/// Per-view MDP: project, bin and collapse one MPI.
PerViewMdp buildPerViewMdp(const Mpi &mpi, const Camera &cam, const Extrinsics &rigCenter,
                           const PanoMapping &mapping, const ShellPartition &partition, double alphaCull);

/// Running form of the weighted blend: per layer and pixel, sums of w α (C, D, α) and of w α.
class MdpBlender {
public:
    MdpBlender(const PanoMapping &mapping, const ShellPartition &partition);
    void add(const PerViewMdp &view);
    Mdp finish() const;

private:
    PanoMapping mapping_;
    ShellPartition partition_;
    std::vector<std::vector<double>> sums_; ///< per layer: [pixel][r, g, b, D, α, wα]
};

/// Blended global MDP: (C, D, α) = Σ_v w α (C, D, α) / Σ_v w α per layer and pixel.
Mdp blendMdps(std::span<const PerViewMdp> perView);

struct PipelineConfig {
    PsvParams psv;
    PhotoconsistencyParams estimator;
    MdpParams mdp;

    ShellPartition partition() const;
};

/// Runs plane sweep, estimation, projection, binning, collapse and blending for every view.
/// A null estimator selects the photoconsistency estimator configured in `config`.
Mdp buildGlobalMdp(const CameraRig &rig, const std::vector<ImageF> &images, const PipelineConfig &config,
                   const MpiEstimator *estimator = nullptr);

/// Builds one global MDP per entry of `layerCounts` while estimating each view's MPI only once.
std::vector<Mdp> buildGlobalMdps(const CameraRig &rig, const std::vector<ImageF> &images, const PipelineConfig &config,
                                 std::span<const int> layerCounts, const MpiEstimator *estimator = nullptr);

} // namespace mdpano
