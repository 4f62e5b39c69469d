// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdpano/geometry.hpp"
#include "mdpano/image.hpp"

#include <memory>
#include <vector>

namespace mdpano {

/// Plane-sweep volume for one reference view.
///
/// Layer index 0 is the farthest plane; disparities increase strictly with the index. The volume
/// stores, for every (layer, y, x), the bilinearly warped RGB of each neighbour and a validity
/// flag that is 0 where the warp left the neighbour image or went behind it.
struct Psv {
    int refView = 0;
    std::vector<int> neighbors;
    std::vector<double> disparities; ///< 1/d_l, strictly increasing
    int width = 0;
    int height = 0;
    ImageF reference; ///< the reference image itself (identity warp), RGB
    std::vector<float> volume;       ///< [L][H][W][N*3]
    std::vector<std::uint8_t> valid; ///< [L][H][W][N]

    int layerCount() const { return static_cast<int>(disparities.size()); }
    int neighborCount() const { return static_cast<int>(neighbors.size()); }
    double depth(int layer) const { return 1.0 / disparities[layer]; }

    std::size_t sampleIndex(int layer, int x, int y) const {
        return (static_cast<std::size_t>(layer) * height + y) * width + x;
    }
    const float *colors(int layer, int x, int y) const {
        return volume.data() + sampleIndex(layer, x, y) * neighbors.size() * 3;
    }
    const std::uint8_t *validity(int layer, int x, int y) const {
        return valid.data() + sampleIndex(layer, x, y) * neighbors.size();
    }
};

/// Per-view multiplane image: L RGBA planes (straight colour, alpha in [0,1]), back-to-front by
/// index, sharing the disparities of the source Psv.
struct Mpi {
    int view = 0;
    std::vector<double> disparities;
    std::vector<ImageF> layers; ///< each W x H x 4

    int layerCount() const { return static_cast<int>(layers.size()); }
    int width() const { return layers.empty() ? 0 : layers.front().width(); }
    int height() const { return layers.empty() ? 0 : layers.front().height(); }
};

/// Estimator slot: anything that turns a plane-sweep volume into an MPI.
class MpiEstimator {
public:
    virtual ~MpiEstimator() = default;
    virtual Mpi estimate(const Psv &psv) const = 0;
};

struct PhotoconsistencyParams {
    double sigma0 = 0.05;    ///< variance softness, colour units
    double alphaMin = 0.999; ///< total opacity of pixels with any valid sample
};

/// Non-learned estimator: per (layer, pixel) mean colour and inter-view variance over the
/// reference and valid neighbour samples; alpha follows a softmax of -variance / sigma0^2 over
/// layers, converted to per-layer opacities whose front-to-back compositing weights reproduce the
/// softmax scaled by alphaMin.
class PhotoconsistencyEstimator final : public MpiEstimator {
public:
    explicit PhotoconsistencyEstimator(PhotoconsistencyParams params = {}) : params_(params) {}
    Mpi estimate(const Psv &psv) const override;
    const PhotoconsistencyParams &params() const { return params_; }

private:
    PhotoconsistencyParams params_;
};

/// The n cameras whose optical axes are angularly closest to `view`'s (ties by index).
std::vector<int> nearestNeighbors(const CameraRig &rig, int view, int n);

/// L disparities linear between 1/far (index 0) and 1/near (index L-1).
std::vector<double> sweepDisparities(double nearDepth, double farDepth, int layerCount);

/// 3x3 homography mapping reference pixels to neighbour pixels for the fronto-parallel reference
/// plane with the given disparity (disparity 0 gives the rotation-induced homography).
Mat3 planeHomography(const Camera &ref, const Camera &neighbor, double disparity);

struct PsvParams {
    double nearDepth = 1.0;
    double farDepth = 100.0;
    int layerCount = 32;
    int neighborCount = 4;
};

/// Builds the plane-sweep volume of `view` from RGB images (W x H x 3, linear) calibrated to `rig`.
Psv buildPsv(const CameraRig &rig, const std::vector<ImageF> &images, int view, const PsvParams &params);

/// Bilinear lookup of an RGB image at continuous (x, y), integer coordinates at pixel centres.
/// Returns false when (x, y) is outside [0, W-1] x [0, H-1].
bool sampleBilinear(const ImageF &image, double x, double y, float *out);

Mpi estimateMpi(const Psv &psv, const MpiEstimator &estimator);

/// Back-to-front over compositing of the MPI seen from its own camera; returns W x H x 4
/// premultiplied RGBA.
ImageF compositeMpi(const Mpi &mpi);

} // namespace mdpano
