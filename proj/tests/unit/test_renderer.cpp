// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#include "mdpano/config_io.hpp"
#include "mdpano/error.hpp"
#include "mdpano/experiments.hpp"
#include "mdpano/parallel.hpp"
#include "mdpano/renderer.hpp"

#include "../support/test_support.hpp"

#include <gtest/gtest.h>

#include <numbers>

namespace mdpano {
namespace {

constexpr double kPi = std::numbers::pi;

SoftZContribution contribution(double r, double g, double b, double a, double d, double w = 1.0) {
    SoftZContribution c;
    c.color[0] = r;
    c.color[1] = g;
    c.color[2] = b;
    c.alpha = a;
    c.invDepth = d;
    c.weight = w;
    return c;
}

TEST(SoftZ, EmptyAndZeroWeightGiveZero) {
    const SoftZResult empty = softZResolve({}, SoftZConfig{});
    EXPECT_EQ(empty.alpha, 0.0);
    const std::vector<SoftZContribution> zero{contribution(1, 1, 1, 1, 0.5, 0.0)};
    EXPECT_EQ(softZResolve(zero, SoftZConfig{}).alpha, 0.0);
    EXPECT_EQ(softZResolve(zero, SoftZConfig{}).color[0], 0.0);
}

TEST(SoftZ, SingleContributionPassesThrough) {
    const std::vector<SoftZContribution> one{contribution(0.2, 0.4, 0.6, 0.7, 0.3, 0.25)};
    const SoftZResult r = softZResolve(one, SoftZConfig{});
    EXPECT_NEAR(r.color[0], 0.2, 1e-12);
    EXPECT_NEAR(r.color[2], 0.6, 1e-12);
    EXPECT_NEAR(r.alpha, 0.7, 1e-12);
}

TEST(SoftZ, EqualDepthsGiveWeightedMean) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double d = u(rng);
        std::vector<SoftZContribution> cs;
        double num[4] = {0, 0, 0, 0};
        double den = 0.0;
        for (int i = 0; i < 5; ++i) {
            cs.push_back(contribution(u(rng), u(rng), u(rng), u(rng), d, 0.05 + u(rng)));
            for (int c = 0; c < 3; ++c) {
                num[c] += cs.back().weight * cs.back().color[c];
            }
            num[3] += cs.back().weight * cs.back().alpha;
            den += cs.back().weight;
        }
        const SoftZResult r = softZResolve(cs, SoftZConfig{1000.0, 1e-12});
        for (int c = 0; c < 3; ++c) {
            EXPECT_NEAR(r.color[c], num[c] / den, 1e-9);
        }
        EXPECT_NEAR(r.alpha, num[3] / den, 1e-9);
    }
}

TEST(SoftZ, LargeTauMatchesHardZBuffer) {
    for (double gap : {0.1, 0.2, 0.5}) {
        EXPECT_LT(testing::softZHardGapError(21, gap, 500), 1e-3) << gap;
    }
}

TEST(SoftZ, OrderAndTranslationInvariance) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<SoftZContribution> cs;
    for (int i = 0; i < 6; ++i) {
        cs.push_back(contribution(u(rng), u(rng), u(rng), u(rng), 0.1 + u(rng), u(rng)));
    }
    const SoftZConfig cfg{30.0, 1e-12};
    const SoftZResult a = softZResolve(cs, cfg);
    std::vector<SoftZContribution> shuffled(cs.rbegin(), cs.rend());
    std::vector<SoftZContribution> shifted = cs;
    for (auto &c : shifted) {
        c.invDepth += 0.37;
    }
    for (const auto &other : {softZResolve(shuffled, cfg), softZResolve(shifted, cfg)}) {
        for (int c = 0; c < 3; ++c) {
            EXPECT_NEAR(a.color[c], other.color[c], 1e-12);
        }
        EXPECT_NEAR(a.alpha, other.alpha, 1e-12);
    }
}

TEST(SoftZ, RejectsInvalidConfig) {
    EXPECT_THROW((SoftZConfig{0.0, 1e-12}.validate()), Error);
    EXPECT_THROW((SoftZConfig{10.0, 0.0}.validate()), Error);
}

/// Direct per-pixel over-compositing of an MDP from the outermost shell inwards, premultiplied.
ImageD compositeInPlace(const Mdp &mdp) {
    const int w = mdp.mapping.width;
    const int h = mdp.mapping.height;
    ImageD out(w, h, 4, 0.0);
    for (std::size_t p = 0; p < static_cast<std::size_t>(w) * h; ++p) {
        double acc[4] = {0, 0, 0, 0};
        for (int m = mdp.layerCount() - 1; m >= 0; --m) {
            const auto &l = mdp.layers[m];
            const double a = l.alpha.data()[p];
            for (int c = 0; c < 3; ++c) {
                acc[c] = a * l.color.data()[p * 3 + c] + (1.0 - a) * acc[c];
            }
            acc[3] = a + (1.0 - a) * acc[3];
        }
        for (int c = 0; c < 4; ++c) {
            out.data()[p * 4 + c] = acc[c];
        }
    }
    return out;
}

TEST(Render, CentreViewReproducesTheMdp) {
    std::mt19937_64 rng(12);
    const PanoMapping m{48, 24, 1.0};
    const Mdp mdp = testing::randomMdp(rng, m, {1.0, 9.0, 3});
    const ImageD got = render(mdp, TargetCamera::panorama(m, Extrinsics::identity()), SoftZConfig{}).rgba;
    const ImageD expected = compositeInPlace(mdp);
    double l1 = 0.0;
    for (std::size_t i = 0; i < got.data().size(); ++i) {
        l1 += std::abs(got.data()[i] - expected.data()[i]);
    }
    EXPECT_LT(l1 / got.data().size(), 1e-3);
}

TEST(Render, OpaqueInnerShellOccludesOuterShells) {
    std::mt19937_64 rng(13);
    const PanoMapping m{48, 24, 1.0};
    Mdp mdp = testing::randomMdp(rng, m, {1.0, 9.0, 3});
    std::fill(mdp.layers[0].alpha.data().begin(), mdp.layers[0].alpha.data().end(), 1.0f);
    const ImageD got = render(mdp, TargetCamera::panorama(m, Extrinsics::identity()), SoftZConfig{}).rgba;
    for (std::size_t p = 0; p < got.pixelCount(); ++p) {
        for (int c = 0; c < 3; ++c) {
            EXPECT_NEAR(got.data()[p * 4 + c], mdp.layers[0].color.data()[p * 3 + c], 1e-6);
        }
        EXPECT_NEAR(got.data()[p * 4 + 3], 1.0, 1e-9);
    }
}

TEST(Render, ConstantOpaqueShellCoversTranslatedViews) {
    const PanoMapping m{256, 128, 1.0};
    Mdp mdp = Mdp::empty(m, {1.0, 10.0, 2});
    auto &layer = mdp.layers[1];
    std::fill(layer.alpha.data().begin(), layer.alpha.data().end(), 1.0f);
    std::fill(layer.depth.data().begin(), layer.depth.data().end(), 6.0f);
    for (std::size_t p = 0; p < layer.color.pixelCount(); ++p) {
        layer.color.data()[p * 3 + 0] = 0.25f;
        layer.color.data()[p * 3 + 1] = 0.5f;
        layer.color.data()[p * 3 + 2] = 0.75f;
    }
    const TargetCamera t = TargetCamera::panorama(PanoMapping{128, 48, 0.5},
                                                  Extrinsics::fromCenter(Mat3::Identity(), Vec3(0.08, 0.05, 0.02)));
    const RenderResult r = render(mdp, t, SoftZConfig{});
    EXPECT_FALSE(r.orderingViolation);
    for (std::size_t p = 0; p < r.rgba.pixelCount(); ++p) {
        const double *px = &r.rgba.data()[p * 4];
        for (int c = 0; c < 4; ++c) {
            EXPECT_GE(px[c], 0.0);
            EXPECT_LE(px[c], 1.0 + 1e-12);
        }
        ASSERT_NEAR(px[3], 1.0, 1e-9) << p;
        EXPECT_NEAR(px[0], 0.25, 1e-6);
        EXPECT_NEAR(px[1], 0.5, 1e-6);
        EXPECT_NEAR(px[2], 0.75, 1e-6);
    }
}

TEST(Render, SinglePointLandsAtItsPinholeProjection) {
    const PanoMapping m{360, 120, 1.0};
    const Intrinsics k = Intrinsics::fromFov(200, 150, 70.0 * kPi / 180.0);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        Mdp mdp = Mdp::empty(m, {1.0, 10.0, 1});
        const int col = 170 + trial;
        const int row = 50 + trial;
        const double rho = 4.0 + u(rng);
        mdp.layers[0].alpha.at(col, row) = 1.0f;
        mdp.layers[0].depth.at(col, row) = static_cast<float>(rho);
        const double phi = m.phiOfCol(col + 0.5);
        const Vec3 world(rho * std::cos(phi), rho * std::sin(phi), rho * m.slopeOfRow(row + 0.5));
        // 10 cm translation with a small yaw.
        const Vec3 centre = 0.1 * Vec3(u(rng), u(rng), 0.3 * u(rng)).normalized();
        const Extrinsics pose = Extrinsics::lookAt(centre, Vec3(std::cos(phi + 0.1 * u(rng)), std::sin(phi), 0.0));
        const RenderResult r = render(mdp, TargetCamera::perspective(k, pose), SoftZConfig{});
        // Pinhole oracle through the 3x4 projection matrix.
        Eigen::Matrix<double, 3, 4> rt;
        rt << pose.rotation, pose.translation;
        Mat3 kk;
        kk << k.fx, 0, k.cx, 0, k.fy, k.cy, 0, 0, 1;
        const Vec3 h = kk * rt * world.homogeneous();
        const double ex = h.x() / h.z();
        const double ey = h.y() / h.z();
        double sum = 0.0, sx = 0.0, sy = 0.0;
        for (int y = 0; y < k.height; ++y) {
            for (int x = 0; x < k.width; ++x) {
                const double a = r.rgba.at(x, y, 3);
                sum += a;
                sx += a * x;
                sy += a * y;
            }
        }
        ASSERT_GT(sum, 0.0);
        EXPECT_LT(std::hypot(sx / sum - ex, sy / sum - ey), 1.0) << trial;
    }
}

TEST(Render, OrderingViolationFlag) {
    const PanoMapping m{32, 16, 1.0};
    Mdp mdp = Mdp::empty(m, {1.0, 9.0, 2});
    mdp.layers[1].alpha.at(3, 3) = 1.0f;
    mdp.layers[1].depth.at(3, 3) = 7.0f;
    EXPECT_DOUBLE_EQ(motionBound(mdp), 5.0);
    const auto at = [&](double x) {
        return render(mdp, TargetCamera::panorama(m, Extrinsics::fromCenter(Mat3::Identity(), Vec3(x, 0, 0))),
                      SoftZConfig{});
    };
    EXPECT_FALSE(at(0.0).orderingViolation);
    EXPECT_FALSE(at(4.9).orderingViolation);
    EXPECT_TRUE(at(5.1).orderingViolation);
    EXPECT_TRUE(std::isinf(motionBound(Mdp::empty(m, {1.0, 9.0, 2}))));
}

TEST(RenderBackward, MatchesFiniteDifferences) {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        const testing::GradientCheck g = testing::gradientCheck(seed);
        EXPECT_LT(g.maxRelativeError, 1e-3) << "seed " << seed;
        EXPECT_GT(g.nonZero, 0u);
    }
}

RenderSource twoShellSource(double innerAlpha) {
    const PanoMapping m{16, 8, 1.0};
    Mdp mdp = Mdp::empty(m, {1.0, 9.0, 2});
    for (int l = 0; l < 2; ++l) {
        auto &layer = mdp.layers[l];
        std::fill(layer.alpha.data().begin(), layer.alpha.data().end(), l == 0 ? static_cast<float>(innerAlpha) : 0.5f);
        std::fill(layer.depth.data().begin(), layer.depth.data().end(), l == 0 ? 3.0f : 7.0f);
        std::fill(layer.color.data().begin(), layer.color.data().end(), 1.0f);
    }
    return RenderSource::fromMdp(mdp);
}

TEST(RenderBackward, FullyOccludedShellHasZeroGradient) {
    const RenderSource src = twoShellSource(1.0);
    const TargetCamera t = TargetCamera::panorama(src.mapping, Extrinsics::identity());
    ImageD g(t.width(), t.height(), 4, 1.0);
    const RenderGradients grads = renderBackward(src, t, SoftZConfig{}, g);
    for (double v : grads.color[1]) {
        EXPECT_EQ(v, 0.0);
    }
    for (double v : grads.alpha[1]) {
        EXPECT_EQ(v, 0.0);
    }
    for (double v : grads.depth[1]) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(RenderBackward, MoreOpacityOfABrightLayerBrightensTheImage) {
    const RenderSource src = twoShellSource(0.3);
    const TargetCamera t = TargetCamera::panorama(src.mapping, Extrinsics::identity());
    ImageD g(t.width(), t.height(), 4, 0.0);
    for (std::size_t p = 0; p < g.pixelCount(); ++p) {
        for (int c = 0; c < 3; ++c) {
            g.data()[p * 4 + c] = 1.0;
        }
    }
    const RenderGradients grads = renderBackward(src, t, SoftZConfig{}, g);
    double total = 0.0;
    for (int l = 0; l < 2; ++l) {
        for (double v : grads.alpha[l]) {
            EXPECT_GE(v, 0.0);
            total += v;
        }
    }
    EXPECT_GT(total, 0.0);
}

TEST(RenderSequence, MatchesIndividualRendersAndCoversOrbit) {
    const testing::MiniPipeline p = testing::miniPipeline();
    const Mdp mdp = buildGlobalMdp(p.rig, p.images, p.config);
    const TargetCamera base = TargetCamera::panorama(p.config.mdp.mapping, Extrinsics::identity());
    const std::vector<TargetCamera> orbit = orbitPoses(base, 60, 0.1);
    ASSERT_EQ(orbit.size(), 60u);
    const auto frames = renderSequence(mdp, orbit, SoftZConfig{});
    ASSERT_EQ(frames.size(), 60u);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        EXPECT_NEAR(orbit[i].pose.center().head<2>().norm(), 0.1, 1e-12);
        EXPECT_GE(frames[i].seconds, 0.0);
        if (i % 15 == 0) {
            EXPECT_TRUE(testing::bitIdentical(frames[i].result.rgba, render(mdp, orbit[i], SoftZConfig{}).rgba));
        }
        // Every column of every frame shows something.
        const ImageD &img = frames[i].result.rgba;
        for (int x = 0; x < img.width(); ++x) {
            double coverage = 0.0;
            for (int y = 0; y < img.height(); ++y) {
                coverage = std::max(coverage, img.at(x, y, 3));
            }
            EXPECT_GT(coverage, 0.5) << "frame " << i << " column " << x;
        }
    }
}

TEST(RgbdPanorama, SingleShellMdpIsBitIdentical) {
    const testing::MiniPipeline p = testing::miniPipeline();
    const std::vector<TargetCamera> targets{
        TargetCamera::panorama(p.config.mdp.mapping, Extrinsics::identity()),
        TargetCamera::panorama(PanoMapping{64, 40, 0.8},
                               Extrinsics::fromCenter(rotationFromQuaternion(0.99, 0.0, 0.05, 0.1).transpose(),
                                                      Vec3(0.06, -0.04, 0.02))),
        TargetCamera::perspective(Intrinsics::fromFov(40, 30, 1.2), Extrinsics::lookAt(Vec3(0.05, 0, 0), Vec3(1, 1, 0)))};
    EXPECT_TRUE(testing::singleShellMatchesRgbdPath(p, targets));
}

// Frozen after one pilot run of the desk configuration, which measured 0.0467.
constexpr double kDeskCentreL1Threshold = 0.06;

TEST(EndToEnd, DeskSceneCentreViewIsFaithful) {
    const AppConfig config = deskEvalConfig();
    const SyntheticScene scene = standardScene();
    const CameraRig rig = config.rig.build();
    const Mdp mdp = buildGlobalMdp(rig, renderRigViews(scene, rig), config.pipeline);
    const TargetCamera centre = TargetCamera::panorama(mdp.mapping, Extrinsics::identity());
    const std::vector<TargetCamera> targets{centre};
    const ExperimentRow row = evaluateTargets(mdp, scene, targets, config.render);
    EXPECT_LT(row.aggregate.l1, kDeskCentreL1Threshold);
}

TEST(Determinism, BitIdenticalAcrossWorkerCounts) {
    const testing::MiniPipeline p = testing::miniPipeline();
    const int workers[] = {1, 2, 8};
    EXPECT_TRUE(testing::deterministicAcrossWorkers(p, workers));
}

TEST(TargetCamera, ProjectionRejectsPointsBehind) {
    const TargetCamera t = TargetCamera::perspective(Intrinsics::fromFov(10, 10, 1.0), Extrinsics::identity());
    EXPECT_FALSE(projectToTarget(t, Vec3(0, 0, -1)).has_value());
    const auto p = projectToTarget(t, Vec3(0, 0, 2));
    ASSERT_TRUE(p.has_value());
    EXPECT_NEAR(p->u, 4.5, 1e-12);
    EXPECT_NEAR(p->invDepth, 0.5, 1e-12);
}

} // namespace
} // namespace mdpano
