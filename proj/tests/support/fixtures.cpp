// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#include "test_support.hpp"

#include "mdpano/error.hpp"
#include "mdpano/mdp_io.hpp"
#include "mdpano/parallel.hpp"
#include "mdpano/rgbd_panorama.hpp"

#include <algorithm>
#include <cstring>
#include <numbers>
#include <optional>

namespace mdpano::testing {

double collapseAssociativityError(std::uint64_t seed, int shells) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    const Intrinsics k = Intrinsics::fromFov(16, 16, std::numbers::pi / 3);
    const Camera cam{k, Extrinsics::lookAt(Vec3::Zero(), Vec3::UnitX())};
    Mpi mpi;
    mpi.disparities = sweepDisparities(1.0, 10.0, 8);
    for (int l = 0; l < 8; ++l) {
        ImageF layer(16, 16, 4);
        for (float &v : layer.data()) {
            v = u(rng);
        }
        mpi.layers.push_back(layer);
    }
    // Much finer than the MPI's angular sampling, so every MPI ray owns its panorama pixel.
    const PanoMapping mapping{256, 128, 1.0};
    const ShellPartition partition{0.5, 20.0, shells, PartitionMode::EquidistantRadius};
    const PerViewMdp pv = buildPerViewMdp(mpi, cam, Extrinsics::identity(), mapping, partition, 0.0);
    const RenderResult r = render(pv.mdp, TargetCamera::panorama(mapping, Extrinsics::identity()), SoftZConfig{});

    double worst = 0.0;
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
            double acc[4] = {0, 0, 0, 0};
            for (int l = 0; l < 8; ++l) {
                const double a = mpi.layers[l].at(x, y, 3);
                for (int c = 0; c < 3; ++c) {
                    acc[c] = a * mpi.layers[l].at(x, y, c) + (1.0 - a) * acc[c];
                }
                acc[3] = a + (1.0 - a) * acc[3];
            }
            const auto px = panoPixelOf(toCylindrical(unprojectMpiPixel(x, y, 1.0, cam, Extrinsics::identity())), mapping);
            const int col = static_cast<int>(px->col);
            const int row = static_cast<int>(px->row);
            for (int c = 0; c < 4; ++c) {
                worst = std::max(worst, std::abs(r.rgba.at(col, row, c) - acc[c]));
            }
        }
    }
    return worst;
}

GradientCheck gradientCheck(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const PanoMapping mapping{8, 8, 1.0};
    const ShellPartition partition{1.0, 3.0, 2, PartitionMode::EquidistantRadius};
    const Mdp mdp = randomMdp(rng, mapping, partition, 0.05, 0.95);
    RenderSource source = RenderSource::fromMdp(mdp);

    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Mat3 rot = Eigen::AngleAxisd(0.3 * u(rng), Vec3(u(rng), u(rng), 1.0).normalized()).toRotationMatrix();
    const Vec3 center(0.3 * u(rng), 0.3 * u(rng), 0.1 * u(rng));
    // Coarser than the source, so target pixels gather several contributions.
    const TargetCamera target = TargetCamera::panorama(PanoMapping{6, 6, 1.0}, Extrinsics::fromCenter(rot, center));
    const SoftZConfig cfg{};

    ImageD grad(target.width(), target.height(), 4);
    for (double &g : grad.data()) {
        g = u(rng);
    }
    auto loss = [&](const RenderSource &s) {
        const ImageD out = render(s, target, cfg).rgba;
        double total = 0.0;
        for (std::size_t i = 0; i < out.data().size(); ++i) {
            total += out.data()[i] * grad.data()[i];
        }
        return total;
    };
    const RenderGradients analytic = renderBackward(source, target, cfg, grad);

    GradientCheck result;
    const double h = 1e-4;
    auto compare = [&](double &value, double a) {
        const double saved = value;
        value = saved + h;
        const double up = loss(source);
        value = saved - h;
        const double down = loss(source);
        value = saved;
        const double n = (up - down) / (2.0 * h);
        const double scale = std::max({std::abs(a), std::abs(n), kGradientFloor});
        result.maxRelativeError = std::max(result.maxRelativeError, std::abs(a - n) / scale);
        ++result.entries;
        result.nonZero += std::abs(n) > kGradientFloor;
    };
    for (int m = 0; m < partition.count; ++m) {
        auto &layer = source.layers[m];
        for (std::size_t p = 0; p < layer.alpha.size(); ++p) {
            for (int c = 0; c < 3; ++c) {
                compare(layer.color[p * 3 + c], analytic.color[m][p * 3 + c]);
            }
            compare(layer.depth[p], analytic.depth[m][p]);
            compare(layer.alpha[p], analytic.alpha[m][p]);
        }
    }
    return result;
}

double softZHardGapError(std::uint64_t seed, double gap, int trials) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const SoftZConfig cfg{1000.0, 1e-12};
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        SoftZContribution a, b;
        for (int c = 0; c < 3; ++c) {
            a.color[c] = u(rng);
            b.color[c] = u(rng);
        }
        a.alpha = u(rng);
        b.alpha = u(rng);
        a.weight = 0.05 + 0.95 * u(rng);
        b.weight = 0.05 + 0.95 * u(rng);
        a.invDepth = 0.05 + 2.0 * u(rng);
        b.invDepth = a.invDepth + gap * (1.0 + u(rng));
        const SoftZContribution both[] = {a, b};
        const SoftZResult soft = softZResolve(both, cfg);
        // Hard z-buffer: the contribution with the largest inverse depth (nearest) wins outright.
        for (int c = 0; c < 3; ++c) {
            worst = std::max(worst, std::abs(soft.color[c] - b.color[c]));
        }
        worst = std::max(worst, std::abs(soft.alpha - b.alpha));
    }
    return worst;
}

MiniPipeline miniPipeline() {
    MiniPipeline p;
    p.rig = CameraRig::ring(8, 0.2, Intrinsics::fromFov(48, 48, 100.0 * std::numbers::pi / 180.0));
    p.scene = standardScene();
    p.images = renderRigViews(p.scene, p.rig);
    p.config.psv = {1.5, 15.0, 12, 2};
    p.config.mdp.layerCount = 3;
    p.config.mdp.mapping = PanoMapping{96, 48, 1.0};
    return p;
}

double unprojectOracleError(std::uint64_t seed, int count) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < count; ++i) {
        const Intrinsics k{200.0 + 400.0 * u(rng), 200.0 + 400.0 * u(rng), 300.0 * u(rng), 200.0 * u(rng), 640, 480};
        const Camera cam{k, Extrinsics::fromCenter(randomRotation(rng), randomVec(rng, 0.5))};
        const Extrinsics rig = Extrinsics::fromCenter(randomRotation(rng), randomVec(rng, 0.2));
        const double xs = 640.0 * u(rng);
        const double ys = 480.0 * u(rng);
        const double inv = 0.01 + u(rng);
        const Mat4 chain = rig.matrix() * cam.extrinsics.matrix().inverse() * cam.intrinsics.homogeneous().inverse();
        const Eigen::Vector4d h = chain * Eigen::Vector4d(xs, ys, inv, 1.0);
        const Vec3 expected = h.head<3>() / h.w();
        const Vec3 got = unprojectMpiPixel(xs, ys, inv, cam, rig);
        worst = std::max(worst, (got - expected).norm() / expected.norm());
    }
    return worst;
}

double cylindricalOracleError(std::uint64_t seed, int count) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    double worst = 0.0;
    for (int i = 0; i < count; ++i) {
        const Vec3 p(u(rng), u(rng), u(rng));
        const double rho = std::sqrt(p.x() * p.x() + p.y() * p.y());
        const double phi = std::atan2(p.y(), p.x());
        const CylCoord c = toCylindrical(p);
        worst = std::max(worst, std::abs(c.rho - rho) / rho);
        // Angles compared on the unit circle so that -pi and pi agree.
        worst = std::max(worst, std::hypot(std::cos(c.phi) - std::cos(phi), std::sin(c.phi) - std::sin(phi)));
        worst = std::max(worst, std::abs(c.z - p.z()) / std::max(std::abs(p.z()), 1e-300));
        const Vec3 back = fromCylindrical({rho, phi, p.z()});
        const Vec3 trig(rho * std::cos(phi), rho * std::sin(phi), p.z());
        worst = std::max(worst, (back - trig).norm() / trig.norm());
        worst = std::max(worst, (fromCylindrical(c) - p).norm() / p.norm());
    }
    return worst;
}

double softZEqualDepthError(std::uint64_t seed, int trials) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const double d = 0.05 + u(rng);
        std::vector<SoftZContribution> cs(2 + t % 6);
        double num[4] = {0, 0, 0, 0};
        double den = 0.0;
        for (auto &c : cs) {
            for (double &v : c.color) {
                v = u(rng);
            }
            c.alpha = u(rng);
            c.invDepth = d;
            c.weight = 0.01 + u(rng);
            for (int k = 0; k < 3; ++k) {
                num[k] += c.weight * c.color[k];
            }
            num[3] += c.weight * c.alpha;
            den += c.weight;
        }
        for (double tau : {1.0, 50.0, 1000.0}) {
            const SoftZResult r = softZResolve(cs, SoftZConfig{tau, 1e-12});
            for (int k = 0; k < 3; ++k) {
                worst = std::max(worst, std::abs(r.color[k] - num[k] / den));
            }
            worst = std::max(worst, std::abs(r.alpha - num[3] / den));
        }
    }
    return worst;
}

bool bitIdentical(const ImageD &a, const ImageD &b) {
    return a.width() == b.width() && a.height() == b.height() && a.channels() == b.channels() &&
           std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(double)) == 0;
}

bool bitIdentical(const Mdp &a, const Mdp &b) {
    const auto ea = encodeMdp(a);
    const auto eb = encodeMdp(b);
    return ea == eb;
}

RoundTripCheck serializationRoundTrips(std::uint64_t seed, int count) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> size(1, 24);
    std::uniform_int_distribution<int> layers(1, 6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RoundTripCheck out;
    for (int i = 0; i < count; ++i) {
        const PanoMapping m{size(rng), size(rng), 0.2 + 2.0 * u(rng)};
        const double lo = 0.5 + u(rng);
        const ShellPartition part{lo, lo + 1.0 + 50.0 * u(rng), layers(rng),
                                  u(rng) < 0.5 ? PartitionMode::EquidistantRadius
                                               : PartitionMode::EquidistantInverseRadius};
        const Mdp mdp = randomMdp(rng, m, part);
        auto bytes = encodeMdp(mdp);
        if (bitIdentical(decodeMdp(bytes), mdp)) {
            ++out.exact;
        }
        const std::size_t payload = bytes.size() - kMdpHeaderBytes - kMdpTrailerBytes;
        const std::size_t at = kMdpHeaderBytes + std::uniform_int_distribution<std::size_t>(0, payload - 1)(rng);
        bytes[at] ^= static_cast<std::uint8_t>(1u << std::uniform_int_distribution<int>(0, 7)(rng));
        try {
            decodeMdp(bytes);
        } catch (const ChecksumError &) {
            ++out.checksumRejected;
        }
    }
    return out;
}

bool singleShellMatchesRgbdPath(const MiniPipeline &p, std::span<const TargetCamera> targets) {
    PipelineConfig config = p.config;
    config.mdp.layerCount = 1;
    const Mdp mdp = buildGlobalMdp(p.rig, p.images, config);
    const RgbdPanorama pano = buildRgbdPanorama(p.rig, p.images, config);
    const SoftZConfig soft;
    for (const TargetCamera &t : targets) {
        if (!bitIdentical(render(mdp, t, soft).rgba, renderRgbdPanorama(pano, t, soft))) {
            return false;
        }
    }
    return true;
}

bool deterministicAcrossWorkers(const MiniPipeline &p, std::span<const int> workerCounts) {
    const TargetCamera target = TargetCamera::panorama(p.config.mdp.mapping,
                                                       Extrinsics::fromCenter(Mat3::Identity(), Vec3(0.05, -0.03, 0.01)));
    std::optional<Mdp> firstMdp;
    std::optional<ImageD> firstFrame;
    for (int workers : workerCounts) {
        ScopedWorkerCount scope(workers);
        const Mdp mdp = buildGlobalMdp(p.rig, p.images, p.config);
        const ImageD frame = render(mdp, target, SoftZConfig{}).rgba;
        if (!firstMdp) {
            firstMdp = mdp;
            firstFrame = frame;
        } else if (!bitIdentical(mdp, *firstMdp) || !bitIdentical(frame, *firstFrame)) {
            return false;
        }
    }
    return true;
}

} // namespace mdpano::testing
