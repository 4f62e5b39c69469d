// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#include "mdpano/rgbd_panorama.hpp"

#include "mdpano/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mdpano {

namespace {

// Per-pixel sums over views: w α (r, g, b, D, α) and w α.
using BlendSums = std::vector<double>;

void accumulateView(const CylPointCloud &cloud, const PanoMapping &mapping, double rhoMin, double rhoMax,
                    BlendSums &sums) {
    const int w = mapping.width;
    const int h = mapping.height;
    struct Keyed {
        std::int64_t pixel;
        int layer;
        std::uint32_t index;
    };
    std::vector<Keyed> keyed;
    keyed.reserve(cloud.points.size());
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const CylCoord &c = cloud.points[i].position;
        if (!(c.rho > 0.0)) {
            continue;
        }
        const auto px = panoPixelOf(c, mapping);
        if (!px) {
            continue;
        }
        const int col = std::clamp(static_cast<int>(std::floor(px->col)), 0, w - 1);
        const int row = std::clamp(static_cast<int>(std::floor(px->row)), 0, h - 1);
        keyed.push_back({static_cast<std::int64_t>(row) * w + col, cloud.points[i].layer, static_cast<std::uint32_t>(i)});
    }
    std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed &a, const Keyed &b) {
        return a.pixel != b.pixel ? a.pixel < b.pixel : a.layer < b.layer;
    });

    for (std::size_t i = 0; i < keyed.size();) {
        const std::int64_t pixel = keyed[i].pixel;
        double acc[6] = {0, 0, 0, 0, 0, 0}; // premultiplied r g b, alpha, alpha*rho, alpha*weight
        while (i < keyed.size() && keyed[i].pixel == pixel) {
            const int layer = keyed[i].layer;
            double group[6] = {0, 0, 0, 0, 0, 0};
            int n = 0;
            for (; i < keyed.size() && keyed[i].pixel == pixel && keyed[i].layer == layer; ++i, ++n) {
                const CylPoint &pt = cloud.points[keyed[i].index];
                const double a = pt.alpha;
                const double rho = std::clamp(pt.position.rho, rhoMin, rhoMax);
                group[0] += a * pt.color[0];
                group[1] += a * pt.color[1];
                group[2] += a * pt.color[2];
                group[3] += a;
                group[4] += a * rho;
                group[5] += a * pt.weight;
            }
            const double ga = group[3] / n;
            for (int c = 0; c < 6; ++c) {
                acc[c] = group[c] / n + (1.0 - ga) * acc[c];
            }
        }
        const double a = acc[3];
        if (!(a > 0.0)) {
            continue;
        }
        // Quantise to the stored float representation before blending.
        const float color[3] = {static_cast<float>(std::clamp(acc[0] / a, 0.0, 1.0)),
                                static_cast<float>(std::clamp(acc[1] / a, 0.0, 1.0)),
                                static_cast<float>(std::clamp(acc[2] / a, 0.0, 1.0))};
        const float alpha = static_cast<float>(std::min(a, 1.0));
        const float depth = static_cast<float>(std::clamp(acc[4] / a, rhoMin, rhoMax));
        const float weight = static_cast<float>(acc[5] / a);

        const double av = alpha;
        const double wa = static_cast<double>(weight) * av;
        if (!(wa > 0.0)) {
            continue;
        }
        double *s = &sums[static_cast<std::size_t>(pixel) * 6];
        s[0] += wa * color[0];
        s[1] += wa * color[1];
        s[2] += wa * color[2];
        s[3] += wa * depth;
        s[4] += wa * av;
        s[5] += wa;
    }
}

} // namespace

RgbdPanorama buildRgbdPanorama(const CameraRig &rig, const std::vector<ImageF> &images, const PipelineConfig &config,
                               const MpiEstimator *estimator) {
    rig.validate();
    const PanoMapping &mapping = config.mdp.mapping;
    mapping.validate();
    const PhotoconsistencyEstimator fallback(config.estimator);
    const MpiEstimator &est = estimator ? *estimator : fallback;

    RgbdPanorama pano;
    pano.mapping = mapping;
    pano.rhoMin = config.mdp.rhoMin.value_or(config.psv.nearDepth);
    pano.rhoMax = config.mdp.rhoMax.value_or(config.psv.farDepth);
    if (!(pano.rhoMin > 0.0) || !(pano.rhoMax > pano.rhoMin)) {
        throw IncompatibleMdpError("RGBD panorama requires 0 < rho_min < rho_max");
    }
    const std::size_t pixels = static_cast<std::size_t>(mapping.width) * mapping.height;
    BlendSums sums(pixels * 6, 0.0);
    for (int v = 0; v < static_cast<int>(rig.size()); ++v) {
        const Mpi mpi = estimateMpi(buildPsv(rig, images, v, config.psv), est);
        accumulateView(mpiToCylPoints(mpi, rig.cameras[v], rig.rigCenter, config.mdp.alphaCull), mapping, pano.rhoMin,
                       pano.rhoMax, sums);
    }

    pano.color = ImageF(mapping.width, mapping.height, 3);
    pano.depth = ImageF(mapping.width, mapping.height, 1);
    pano.alpha = ImageF(mapping.width, mapping.height, 1);
    for (std::size_t p = 0; p < pixels; ++p) {
        const double *s = &sums[p * 6];
        if (!(s[5] > 0.0)) {
            continue;
        }
        for (int c = 0; c < 3; ++c) {
            pano.color.data()[p * 3 + c] = static_cast<float>(s[c] / s[5]);
        }
        pano.depth.data()[p] = static_cast<float>(s[3] / s[5]);
        pano.alpha.data()[p] = static_cast<float>(std::min(s[4] / s[5], 1.0));
    }
    return pano;
}

ImageD renderRgbdPanorama(const RgbdPanorama &pano, const TargetCamera &target, const SoftZConfig &config) {
    target.validate();
    config.validate();
    RenderSource::Layer layer;
    layer.color.assign(pano.color.data().begin(), pano.color.data().end());
    layer.depth.assign(pano.depth.data().begin(), pano.depth.data().end());
    layer.alpha.assign(pano.alpha.data().begin(), pano.alpha.data().end());
    return splatLayer(layer, pano.mapping, target, config);
}

} // namespace mdpano
