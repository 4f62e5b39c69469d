// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#include "mdpano/mdp.hpp"

#include "mdpano/error.hpp"
#include "mdpano/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mdpano {

void ShellPartition::validate() const {
    if (!(rhoMin > 0.0) || !(rhoMax > rhoMin) || !std::isfinite(rhoMax) || count < 1) {
        throw IncompatibleMdpError("shell partition requires 0 < rho_min < rho_max and at least one shell");
    }
}

std::vector<double> ShellPartition::boundaries() const {
    validate();
    std::vector<double> b(count + 1);
    for (int m = 0; m <= count; ++m) {
        const double t = static_cast<double>(m) / count;
        if (mode == PartitionMode::EquidistantRadius) {
            b[m] = rhoMin + (rhoMax - rhoMin) * t;
        } else {
            b[m] = 1.0 / (1.0 / rhoMin + (1.0 / rhoMax - 1.0 / rhoMin) * t);
        }
    }
    b.front() = rhoMin;
    b.back() = rhoMax;
    return b;
}

int ShellPartition::binOf(double rho) const {
    const std::vector<double> b = boundaries();
    if (rho < b.front()) {
        return 0;
    }
    const auto it = std::upper_bound(b.begin(), b.end(), rho);
    const int m = static_cast<int>(it - b.begin()) - 1;
    return std::clamp(m, 0, count - 1);
}

void Mdp::validate() const {
    mapping.validate();
    partition.validate();
    if (layerCount() != partition.count) {
        throw IncompatibleMdpError("layer count does not match the shell partition");
    }
    for (int m = 0; m < layerCount(); ++m) {
        const MdpLayer &l = layers[m];
        if (l.shell != m || l.color.width() != mapping.width || l.color.height() != mapping.height ||
            l.color.channels() != 3 || !l.depth.sameShape(l.alpha) || l.depth.width() != mapping.width ||
            l.depth.height() != mapping.height || l.depth.channels() != 1) {
            throw IncompatibleMdpError("layer " + std::to_string(m) + " does not match the panorama mapping");
        }
    }
}

std::uint64_t mdpPayloadBytes(int width, int height, int layers) {
    return static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height) * static_cast<std::uint64_t>(layers) *
           5u * sizeof(float);
}

std::uint64_t Mdp::payloadBytes() const { return mdpPayloadBytes(mapping.width, mapping.height, layerCount()); }

Mdp Mdp::empty(const PanoMapping &mapping, const ShellPartition &partition) {
    mapping.validate();
    partition.validate();
    Mdp mdp;
    mdp.mapping = mapping;
    mdp.partition = partition;
    for (int m = 0; m < partition.count; ++m) {
        mdp.layers.emplace_back(m, mapping.width, mapping.height);
    }
    return mdp;
}

CylPointCloud mpiToCylPoints(const Mpi &mpi, const Camera &cam, const Extrinsics &rigCenter, double alphaCull) {
    const Intrinsics &k = cam.intrinsics;
    k.validate();
    if (mpi.width() != k.width || mpi.height() != k.height) {
        throw DimensionMismatchError("MPI size does not match the camera intrinsics");
    }
    const int layers = mpi.layerCount();
    std::vector<std::vector<CylPoint>> perLayer(layers);
    parallelFor(0, static_cast<std::size_t>(layers), [&](std::size_t li) {
        const int l = static_cast<int>(li);
        const ImageF &plane = mpi.layers[l];
        auto &out = perLayer[l];
        for (int y = 0; y < plane.height(); ++y) {
            for (int x = 0; x < plane.width(); ++x) {
                const float *px = &plane.at(x, y, 0);
                if (!(px[3] > alphaCull)) {
                    continue;
                }
                CylPoint p;
                p.position = toCylindrical(unprojectMpiPixel(x, y, mpi.disparities[l], cam, rigCenter));
                p.color[0] = px[0];
                p.color[1] = px[1];
                p.color[2] = px[2];
                p.alpha = px[3];
                const double rx = (x - k.cx) / k.fx;
                const double ry = (y - k.cy) / k.fy;
                p.weight = static_cast<float>(1.0 / std::sqrt(1.0 + rx * rx + ry * ry));
                p.view = mpi.view;
                p.layer = l;
                out.push_back(p);
            }
        }
    });
    CylPointCloud cloud;
    std::size_t total = 0;
    for (const auto &v : perLayer) {
        total += v.size();
    }
    cloud.points.reserve(total);
    for (const auto &v : perLayer) {
        cloud.points.insert(cloud.points.end(), v.begin(), v.end());
    }
    return cloud;
}

std::vector<CylPointCloud> binPoints(const CylPointCloud &cloud, const ShellPartition &partition) {
    const std::vector<double> b = partition.boundaries();
    std::vector<CylPointCloud> bins(partition.count);
    for (const CylPoint &p : cloud.points) {
        int m = 0;
        if (p.position.rho >= b.front()) {
            m = static_cast<int>(std::upper_bound(b.begin(), b.end(), p.position.rho) - b.begin()) - 1;
            m = std::clamp(m, 0, partition.count - 1);
        }
        bins[m].points.push_back(p);
    }
    return bins;
}

CollapsedLayer collapseBin(std::span<const CylPoint> points, const PanoMapping &mapping, int shell, RadiusRange range) {
    mapping.validate();
    const int w = mapping.width;
    const int h = mapping.height;
    const std::size_t pixels = static_cast<std::size_t>(w) * h;

    // Bucket every point by the panorama pixel that contains it (stable counting sort).
    std::vector<std::int64_t> bucketOf(points.size(), -1);
    std::vector<std::size_t> start(pixels + 1, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const CylCoord &c = points[i].position;
        if (!(c.rho > 0.0)) {
            continue;
        }
        const auto px = panoPixelOf(c, mapping);
        if (!px) {
            continue;
        }
        const int col = std::clamp(static_cast<int>(std::floor(px->col)), 0, w - 1);
        const int row = std::clamp(static_cast<int>(std::floor(px->row)), 0, h - 1);
        bucketOf[i] = static_cast<std::int64_t>(row) * w + col;
        ++start[bucketOf[i] + 1];
    }
    for (std::size_t p = 0; p < pixels; ++p) {
        start[p + 1] += start[p];
    }
    std::vector<std::uint32_t> order(start[pixels]);
    {
        std::vector<std::size_t> fill(start.begin(), start.end() - 1);
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (bucketOf[i] >= 0) {
                order[fill[bucketOf[i]]++] = static_cast<std::uint32_t>(i);
            }
        }
    }

    CollapsedLayer out{MdpLayer(shell, w, h), ImageF(w, h, 1)};
    parallelFor(0, static_cast<std::size_t>(h), [&](std::size_t row) {
        for (int col = 0; col < w; ++col) {
            const std::size_t p = row * w + col;
            const auto first = order.begin() + static_cast<std::ptrdiff_t>(start[p]);
            const auto last = order.begin() + static_cast<std::ptrdiff_t>(start[p + 1]);
            if (first == last) {
                continue;
            }
            std::stable_sort(first, last, [&](std::uint32_t a, std::uint32_t b) {
                return points[a].layer < points[b].layer;
            });
            // acc: premultiplied r, g, b, alpha, alpha*rho, alpha*weight
            double acc[6] = {0, 0, 0, 0, 0, 0};
            for (auto it = first; it != last;) {
                const int layer = points[*it].layer;
                double group[6] = {0, 0, 0, 0, 0, 0};
                int n = 0;
                for (; it != last && points[*it].layer == layer; ++it, ++n) {
                    const CylPoint &pt = points[*it];
                    const double a = pt.alpha;
                    const double rho = std::clamp(pt.position.rho, range.lo, range.hi);
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
            for (int c = 0; c < 3; ++c) {
                out.layer.color.at(col, static_cast<int>(row), c) = static_cast<float>(std::clamp(acc[c] / a, 0.0, 1.0));
            }
            out.layer.alpha.at(col, static_cast<int>(row)) = static_cast<float>(std::min(a, 1.0));
            out.layer.depth.at(col, static_cast<int>(row)) =
                static_cast<float>(std::clamp(acc[4] / a, range.lo, range.hi));
            out.weight.at(col, static_cast<int>(row)) = static_cast<float>(acc[5] / a);
        }
    });
    return out;
}

namespace {

PerViewMdp collapseCloud(const CylPointCloud &cloud, const PanoMapping &mapping, const ShellPartition &partition) {
    const std::vector<CylPointCloud> bins = binPoints(cloud, partition);
    const std::vector<double> b = partition.boundaries();
    PerViewMdp out;
    out.mdp.mapping = mapping;
    out.mdp.partition = partition;
    for (int m = 0; m < partition.count; ++m) {
        CollapsedLayer c = collapseBin(bins[m].points, mapping, m, {b[m], b[m + 1]});
        out.mdp.layers.push_back(std::move(c.layer));
        out.weights.push_back(std::move(c.weight));
    }
    return out;
}

} // namespace

PerViewMdp buildPerViewMdp(const Mpi &mpi, const Camera &cam, const Extrinsics &rigCenter, const PanoMapping &mapping,
                           const ShellPartition &partition, double alphaCull) {
    return collapseCloud(mpiToCylPoints(mpi, cam, rigCenter, alphaCull), mapping, partition);
}

MdpBlender::MdpBlender(const PanoMapping &mapping, const ShellPartition &partition)
    : mapping_(mapping), partition_(partition) {
    mapping.validate();
    partition.validate();
    sums_.assign(partition.count, std::vector<double>(static_cast<std::size_t>(mapping.width) * mapping.height * 6, 0.0));
}

void MdpBlender::add(const PerViewMdp &view) {
    if (!(view.mdp.mapping == mapping_) || !(view.mdp.partition == partition_)) {
        throw IncompatibleMdpError("per-view MDP mapping or partition differs from the blend target");
    }
    view.mdp.validate();
    if (view.weights.size() != view.mdp.layers.size()) {
        throw IncompatibleMdpError("per-view MDP is missing weight maps");
    }
    const std::size_t pixels = static_cast<std::size_t>(mapping_.width) * mapping_.height;
    parallelFor(0, sums_.size(), [&](std::size_t m) {
        const MdpLayer &layer = view.mdp.layers[m];
        const ImageF &weight = view.weights[m];
        if (!weight.sameShape(layer.alpha)) {
            throw IncompatibleMdpError("weight map does not match its layer");
        }
        double *s = sums_[m].data();
        for (std::size_t p = 0; p < pixels; ++p, s += 6) {
            const double a = layer.alpha.data()[p];
            const double wa = static_cast<double>(weight.data()[p]) * a;
            if (!(wa > 0.0)) {
                continue;
            }
            s[0] += wa * layer.color.data()[p * 3 + 0];
            s[1] += wa * layer.color.data()[p * 3 + 1];
            s[2] += wa * layer.color.data()[p * 3 + 2];
            s[3] += wa * layer.depth.data()[p];
            s[4] += wa * a;
            s[5] += wa;
        }
    });
}

Mdp MdpBlender::finish() const {
    Mdp out = Mdp::empty(mapping_, partition_);
    const std::size_t pixels = static_cast<std::size_t>(mapping_.width) * mapping_.height;
    parallelFor(0, sums_.size(), [&](std::size_t m) {
        MdpLayer &layer = out.layers[m];
        const double *s = sums_[m].data();
        for (std::size_t p = 0; p < pixels; ++p, s += 6) {
            if (!(s[5] > 0.0)) {
                continue;
            }
            for (int c = 0; c < 3; ++c) {
                layer.color.data()[p * 3 + c] = static_cast<float>(s[c] / s[5]);
            }
            layer.depth.data()[p] = static_cast<float>(s[3] / s[5]);
            layer.alpha.data()[p] = static_cast<float>(std::min(s[4] / s[5], 1.0));
        }
    });
    return out;
}

Mdp blendMdps(std::span<const PerViewMdp> perView) {
    if (perView.empty()) {
        throw IncompatibleMdpError("nothing to blend");
    }
    MdpBlender blender(perView.front().mdp.mapping, perView.front().mdp.partition);
    for (const PerViewMdp &v : perView) {
        blender.add(v);
    }
    return blender.finish();
}

ShellPartition PipelineConfig::partition() const {
    ShellPartition p;
    p.rhoMin = mdp.rhoMin.value_or(psv.nearDepth);
    p.rhoMax = mdp.rhoMax.value_or(psv.farDepth);
    p.count = mdp.layerCount;
    p.mode = mdp.mode;
    p.validate();
    return p;
}

std::vector<Mdp> buildGlobalMdps(const CameraRig &rig, const std::vector<ImageF> &images, const PipelineConfig &config,
                                 std::span<const int> layerCounts, const MpiEstimator *estimator) {
    rig.validate();
    config.mdp.mapping.validate();
    const PhotoconsistencyEstimator fallback(config.estimator);
    const MpiEstimator &est = estimator ? *estimator : fallback;

    std::vector<ShellPartition> partitions;
    std::vector<MdpBlender> blenders;
    for (int m : layerCounts) {
        PipelineConfig c = config;
        c.mdp.layerCount = m;
        partitions.push_back(c.partition());
        blenders.emplace_back(config.mdp.mapping, partitions.back());
    }

    for (int v = 0; v < static_cast<int>(rig.size()); ++v) {
        Mpi mpi;
        {
            const Psv psv = buildPsv(rig, images, v, config.psv);
            mpi = estimateMpi(psv, est);
        }
        const CylPointCloud cloud = mpiToCylPoints(mpi, rig.cameras[v], rig.rigCenter, config.mdp.alphaCull);
        for (std::size_t i = 0; i < partitions.size(); ++i) {
            blenders[i].add(collapseCloud(cloud, config.mdp.mapping, partitions[i]));
        }
    }

    std::vector<Mdp> out;
    for (const MdpBlender &b : blenders) {
        out.push_back(b.finish());
    }
    return out;
}

Mdp buildGlobalMdp(const CameraRig &rig, const std::vector<ImageF> &images, const PipelineConfig &config,
                   const MpiEstimator *estimator) {
    const int counts[] = {config.mdp.layerCount};
    return std::move(buildGlobalMdps(rig, images, config, counts, estimator).front());
}

} // namespace mdpano
