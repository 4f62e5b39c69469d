// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#include "mdpano/renderer.hpp"

#include "mdpano/error.hpp"
#include "mdpano/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace mdpano {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSnap = 1e-9;
constexpr double kNearPlane = 1e-3;

// Projection of a source point and its derivatives with respect to the point's radius D.
struct Projected {
    double u, v, d;
    double du, dv, dd;
};

bool project(const TargetCamera &target, const Vec3 &dir, double radius, Projected &out) {
    const Vec3 p = target.pose.rotation * (radius * dir) + target.pose.translation;
    const Vec3 q = target.pose.rotation * dir;
    if (target.mode == TargetCamera::Mode::Perspective) {
        const Intrinsics &k = target.intrinsics;
        if (!(p.z() > kNearPlane)) {
            return false;
        }
        const double iz = 1.0 / p.z();
        out.u = k.fx * p.x() * iz + k.cx;
        out.v = k.fy * p.y() * iz + k.cy;
        out.d = iz;
        out.du = k.fx * (q.x() * p.z() - p.x() * q.z()) * iz * iz;
        out.dv = k.fy * (q.y() * p.z() - p.y() * q.z()) * iz * iz;
        out.dd = -q.z() * iz * iz;
        return true;
    }
    const PanoMapping &m = target.mapping;
    const double r2 = p.x() * p.x() + p.y() * p.y();
    const double rho = std::sqrt(r2);
    if (!(rho > 1e-9)) {
        return false;
    }
    const double h = p.z() / rho;
    if (std::abs(h) > m.vFovSlope * (1.0 + 2.0 / m.height)) {
        return false;
    }
    const double phi = wrapAngle(std::atan2(p.y(), p.x()));
    out.u = m.colOfPhi(phi) - 0.5;
    out.v = m.rowOfSlope(h) - 0.5;
    out.d = 1.0 / rho;
    const double dphi = (p.x() * q.y() - p.y() * q.x()) / r2;
    const double drho = (p.x() * q.x() + p.y() * q.y()) / rho;
    const double dh = (q.z() * rho - p.z() * drho) / r2;
    out.du = m.width / (2.0 * kPi) * dphi;
    out.dv = -m.height / (2.0 * m.vFovSlope) * dh;
    out.dd = -drho / r2;
    return true;
}

// Splits a continuous coordinate into base index and fraction, snapping near-integers.
void splitCoord(double x, int &base, double &frac) {
    double f = std::floor(x);
    frac = x - f;
    if (frac < kSnap) {
        frac = 0.0;
    } else if (frac > 1.0 - kSnap) {
        frac = 0.0;
        f += 1.0;
    }
    base = static_cast<int>(f);
}

struct Contribution {
    std::uint32_t target;
    std::uint32_t source;
    double weight;   // bilinear weight
    double invDepth; // d
    double dwdD;     // derivative of the bilinear weight wrt source radius
    double dddD;     // derivative of d wrt source radius
};

std::uint64_t fnv(std::uint64_t h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffu;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Splat contributions of one layer, in source order, plus the CSR index by target pixel.
struct LayerSplat {
    std::vector<Contribution> contributions;
    std::vector<std::size_t> start;      // per target pixel, into `byTarget`
    std::vector<std::uint32_t> byTarget; // contribution indices grouped by target pixel
    std::uint64_t signature = 0xcbf29ce484222325ull;
};

LayerSplat scatterLayer(const RenderSource::Layer &layer, const PanoMapping &mapping, const TargetCamera &target) {
    LayerSplat s;
    const int tw = target.width();
    const int th = target.height();
    const bool pano = target.mode == TargetCamera::Mode::Panorama;
    std::vector<double> cosPhi(mapping.width), sinPhi(mapping.width);
    for (int i = 0; i < mapping.width; ++i) {
        const double phi = mapping.phiAtPixel(i);
        cosPhi[i] = std::cos(phi);
        sinPhi[i] = std::sin(phi);
    }
    for (int row = 0; row < mapping.height; ++row) {
        const double h = mapping.slopeAtPixel(row);
        for (int col = 0; col < mapping.width; ++col) {
            const std::size_t src = static_cast<std::size_t>(row) * mapping.width + col;
            if (!(layer.alpha[src] > 0.0)) {
                continue;
            }
            const Vec3 dir(cosPhi[col], sinPhi[col], h);
            Projected pr;
            if (!project(target, dir, layer.depth[src], pr)) {
                s.signature = fnv(s.signature, src * 2 + 1);
                continue;
            }
            int x0, y0;
            double fx, fy;
            splitCoord(pr.u, x0, fx);
            splitCoord(pr.v, y0, fy);
            s.signature = fnv(fnv(fnv(s.signature, src * 2), static_cast<std::uint64_t>(x0)),
                              static_cast<std::uint64_t>(y0));
            for (int corner = 0; corner < 4; ++corner) {
                const int dx = corner & 1;
                const int dy = corner >> 1;
                const double wx = dx ? fx : 1.0 - fx;
                const double wy = dy ? fy : 1.0 - fy;
                const double w = wx * wy;
                if (!(w > 0.0)) {
                    continue;
                }
                int x = x0 + dx;
                const int y = y0 + dy;
                if (y < 0 || y >= th) {
                    continue;
                }
                if (pano) {
                    x = ((x % tw) + tw) % tw;
                } else if (x < 0 || x >= tw) {
                    continue;
                }
                const double dwdu = (dx ? 1.0 : -1.0) * wy;
                const double dwdv = (dy ? 1.0 : -1.0) * wx;
                s.contributions.push_back({static_cast<std::uint32_t>(static_cast<std::size_t>(y) * tw + x),
                                           static_cast<std::uint32_t>(src), w, pr.d, dwdu * pr.du + dwdv * pr.dv,
                                           pr.dd});
            }
        }
    }
    const std::size_t pixels = static_cast<std::size_t>(tw) * th;
    s.start.assign(pixels + 1, 0);
    for (const Contribution &c : s.contributions) {
        ++s.start[c.target + 1];
    }
    for (std::size_t p = 0; p < pixels; ++p) {
        s.start[p + 1] += s.start[p];
    }
    s.byTarget.resize(s.contributions.size());
    std::vector<std::size_t> fill(s.start.begin(), s.start.end() - 1);
    for (std::size_t i = 0; i < s.contributions.size(); ++i) {
        s.byTarget[fill[s.contributions[i].target]++] = static_cast<std::uint32_t>(i);
    }
    return s;
}

// Exponential soft z-buffer terms w e^{(d - d_max) tau} of one target pixel.
double pixelMaxDepth(const LayerSplat &s, std::size_t p) {
    double dmax = -std::numeric_limits<double>::infinity();
    for (std::size_t k = s.start[p]; k < s.start[p + 1]; ++k) {
        dmax = std::max(dmax, s.contributions[s.byTarget[k]].invDepth);
    }
    return dmax;
}

void resolvePixel(const LayerSplat &s, const RenderSource::Layer &layer, std::size_t p, const SoftZConfig &cfg,
                  double *out) {
    out[0] = out[1] = out[2] = out[3] = 0.0;
    if (s.start[p] == s.start[p + 1]) {
        return;
    }
    const double dmax = pixelMaxDepth(s, p);
    double z = 0.0;
    double n[4] = {0, 0, 0, 0};
    for (std::size_t k = s.start[p]; k < s.start[p + 1]; ++k) {
        const Contribution &c = s.contributions[s.byTarget[k]];
        const double e = c.weight * std::exp((c.invDepth - dmax) * cfg.tau);
        const double a = layer.alpha[c.source];
        const double *col = &layer.color[static_cast<std::size_t>(c.source) * 3];
        n[0] += e * col[0] * a;
        n[1] += e * col[1] * a;
        n[2] += e * col[2] * a;
        n[3] += e * a;
        z += e;
    }
    const double denom = std::max(z, cfg.epsilon);
    for (int c = 0; c < 4; ++c) {
        out[c] = n[c] / denom;
    }
}

void checkSource(const RenderSource &source) {
    source.mapping.validate();
    const std::size_t pixels = static_cast<std::size_t>(source.mapping.width) * source.mapping.height;
    for (const auto &l : source.layers) {
        if (l.color.size() != pixels * 3 || l.depth.size() != pixels || l.alpha.size() != pixels) {
            throw DimensionMismatchError("render source layer does not match its mapping");
        }
    }
}

} // namespace

void TargetCamera::validate() const {
    pose.validate();
    if (mode == Mode::Perspective) {
        intrinsics.validate();
    } else {
        mapping.validate();
    }
}

TargetCamera TargetCamera::perspective(const Intrinsics &k, const Extrinsics &pose) {
    TargetCamera t;
    t.mode = Mode::Perspective;
    t.intrinsics = k;
    t.pose = pose;
    return t;
}

TargetCamera TargetCamera::panorama(const PanoMapping &m, const Extrinsics &pose) {
    TargetCamera t;
    t.mode = Mode::Panorama;
    t.mapping = m;
    t.pose = pose;
    return t;
}

void SoftZConfig::validate() const {
    if (!(tau > 0.0) || !(epsilon > 0.0)) {
        throw NumericDegeneracyError("soft z-buffer needs tau > 0 and epsilon > 0");
    }
}

SoftZResult softZResolve(std::span<const SoftZContribution> contributions, const SoftZConfig &config) {
    SoftZResult r;
    double dmax = -std::numeric_limits<double>::infinity();
    for (const auto &c : contributions) {
        if (c.weight > 0.0) {
            dmax = std::max(dmax, c.invDepth);
        }
    }
    if (!std::isfinite(dmax)) {
        return r;
    }
    double z = 0.0;
    double n[4] = {0, 0, 0, 0};
    for (const auto &c : contributions) {
        if (!(c.weight > 0.0)) {
            continue;
        }
        const double e = c.weight * std::exp((c.invDepth - dmax) * config.tau);
        n[0] += e * c.color[0];
        n[1] += e * c.color[1];
        n[2] += e * c.color[2];
        n[3] += e * c.alpha;
        z += e;
    }
    const double denom = std::max(z, config.epsilon);
    r.color[0] = n[0] / denom;
    r.color[1] = n[1] / denom;
    r.color[2] = n[2] / denom;
    r.alpha = n[3] / denom;
    return r;
}

RenderSource RenderSource::fromMdp(const Mdp &mdp) {
    mdp.validate();
    RenderSource s;
    s.mapping = mdp.mapping;
    s.partition = mdp.partition;
    for (const MdpLayer &l : mdp.layers) {
        Layer out;
        out.color.assign(l.color.data().begin(), l.color.data().end());
        out.depth.assign(l.depth.data().begin(), l.depth.data().end());
        out.alpha.assign(l.alpha.data().begin(), l.alpha.data().end());
        s.layers.push_back(std::move(out));
    }
    return s;
}

double motionBound(const RenderSource &source) {
    const std::vector<double> b = source.partition.boundaries();
    for (std::size_t m = 0; m < source.layers.size(); ++m) {
        const auto &l = source.layers[m];
        double bound = std::numeric_limits<double>::infinity();
        bool occupied = false;
        for (std::size_t p = 0; p < l.alpha.size(); ++p) {
            if (l.alpha[p] > 0.0) {
                occupied = true;
                bound = std::min(bound, l.depth[p]);
            }
        }
        if (occupied) {
            return std::min(bound, m < b.size() ? b[m] : bound);
        }
    }
    return std::numeric_limits<double>::infinity();
}

double motionBound(const Mdp &mdp) { return motionBound(RenderSource::fromMdp(mdp)); }

ImageD splatLayer(const RenderSource::Layer &layer, const PanoMapping &mapping, const TargetCamera &target,
                  const SoftZConfig &config) {
    const LayerSplat s = scatterLayer(layer, mapping, target);
    ImageD out(target.width(), target.height(), 4, 0.0);
    parallelFor(0, static_cast<std::size_t>(target.height()), [&](std::size_t row) {
        for (int x = 0; x < target.width(); ++x) {
            const std::size_t p = row * target.width() + x;
            resolvePixel(s, layer, p, config, &out.data()[p * 4]);
        }
    });
    return out;
}

namespace {

struct ForwardState {
    std::vector<LayerSplat> splats;
    std::vector<ImageD> maps; // per layer, premultiplied RGBA
};

ForwardState forwardLayers(const RenderSource &source, const TargetCamera &target, const SoftZConfig &config) {
    checkSource(source);
    target.validate();
    config.validate();
    ForwardState st;
    const std::size_t layers = source.layers.size();
    st.splats.resize(layers);
    st.maps.resize(layers);
    parallelFor(0, layers, [&](std::size_t m) {
        st.splats[m] = scatterLayer(source.layers[m], source.mapping, target);
    });
    const int tw = target.width();
    const int th = target.height();
    for (std::size_t m = 0; m < layers; ++m) {
        st.maps[m] = ImageD(tw, th, 4, 0.0);
    }
    parallelFor(0, static_cast<std::size_t>(th), [&](std::size_t row) {
        for (std::size_t m = 0; m < layers; ++m) {
            for (int x = 0; x < tw; ++x) {
                const std::size_t p = row * tw + x;
                resolvePixel(st.splats[m], source.layers[m], p, config, &st.maps[m].data()[p * 4]);
            }
        }
    });
    return st;
}

} // namespace

RenderResult render(const RenderSource &source, const TargetCamera &target, const SoftZConfig &config) {
    const ForwardState st = forwardLayers(source, target, config);
    RenderResult r;
    const int tw = target.width();
    const int th = target.height();
    r.rgba = ImageD(tw, th, 4, 0.0);
    const std::size_t layers = source.layers.size();
    parallelFor(0, static_cast<std::size_t>(th), [&](std::size_t row) {
        for (int x = 0; x < tw; ++x) {
            const std::size_t p = row * tw + x;
            double acc[4] = {0, 0, 0, 0};
            for (std::size_t mi = layers; mi-- > 0;) {
                const double *l = &st.maps[mi].data()[p * 4];
                const double t = 1.0 - l[3];
                for (int c = 0; c < 4; ++c) {
                    acc[c] = l[c] + t * acc[c];
                }
            }
            for (int c = 0; c < 4; ++c) {
                r.rgba.data()[p * 4 + c] = acc[c];
            }
        }
    });
    r.motionBound = motionBound(source);
    const Vec3 c = target.pose.center();
    r.orderingViolation = std::hypot(c.x(), c.y()) >= r.motionBound;
    std::uint64_t sig = 0xcbf29ce484222325ull;
    for (const LayerSplat &s : st.splats) {
        sig = fnv(sig, s.signature);
    }
    r.footprintSignature = sig;
    return r;
}

RenderResult render(const Mdp &mdp, const TargetCamera &target, const SoftZConfig &config) {
    return render(RenderSource::fromMdp(mdp), target, config);
}

RenderGradients renderBackward(const RenderSource &source, const TargetCamera &target, const SoftZConfig &config,
                               const ImageD &outputGradient) {
    const ForwardState st = forwardLayers(source, target, config);
    const int tw = target.width();
    const int th = target.height();
    if (outputGradient.width() != tw || outputGradient.height() != th || outputGradient.channels() != 4) {
        throw DimensionMismatchError("output gradient does not match the target image");
    }
    const std::size_t layers = source.layers.size();
    const std::size_t pixels = static_cast<std::size_t>(tw) * th;

    // Gradient with respect to each layer map, from the over-composite.
    std::vector<std::vector<double>> gMap(layers, std::vector<double>(pixels * 4, 0.0));
    parallelFor(0, static_cast<std::size_t>(th), [&](std::size_t row) {
        std::vector<double> behind(layers * 4);
        for (int x = 0; x < tw; ++x) {
            const std::size_t p = row * tw + x;
            double acc[4] = {0, 0, 0, 0};
            for (std::size_t mi = layers; mi-- > 0;) {
                for (int c = 0; c < 4; ++c) {
                    behind[mi * 4 + c] = acc[c];
                }
                const double *l = &st.maps[mi].data()[p * 4];
                for (int c = 0; c < 4; ++c) {
                    acc[c] = l[c] + (1.0 - l[3]) * acc[c];
                }
            }
            const double *g = &outputGradient.data()[p * 4];
            double trans = 1.0;
            for (std::size_t m = 0; m < layers; ++m) {
                double *gm = &gMap[m][p * 4];
                double dot = 0.0;
                for (int c = 0; c < 4; ++c) {
                    gm[c] = g[c] * trans;
                    dot += g[c] * behind[m * 4 + c];
                }
                gm[3] -= trans * dot;
                trans *= 1.0 - st.maps[m].data()[p * 4 + 3];
            }
        }
    });

    RenderGradients grads;
    grads.color.resize(layers);
    grads.depth.resize(layers);
    grads.alpha.resize(layers);
    for (std::size_t m = 0; m < layers; ++m) {
        const auto &layer = source.layers[m];
        const LayerSplat &s = st.splats[m];
        // Per-contribution gradients: colour (3), alpha, depth.
        std::vector<double> slot(s.contributions.size() * 5, 0.0);
        parallelFor(0, static_cast<std::size_t>(th), [&](std::size_t row) {
            for (int x = 0; x < tw; ++x) {
                const std::size_t p = row * tw + x;
                if (s.start[p] == s.start[p + 1]) {
                    continue;
                }
                const double dmax = pixelMaxDepth(s, p);
                double z = 0.0;
                for (std::size_t k = s.start[p]; k < s.start[p + 1]; ++k) {
                    const Contribution &c = s.contributions[s.byTarget[k]];
                    z += c.weight * std::exp((c.invDepth - dmax) * config.tau);
                }
                const bool floored = z < config.epsilon;
                const double denom = floored ? config.epsilon : z;
                const double *lv = &st.maps[m].data()[p * 4];
                const double *gl = &gMap[m][p * 4];
                for (std::size_t k = s.start[p]; k < s.start[p + 1]; ++k) {
                    const std::uint32_t ci = s.byTarget[k];
                    const Contribution &c = s.contributions[ci];
                    const double ex = std::exp((c.invDepth - dmax) * config.tau);
                    const double e = c.weight * ex;
                    const double a = layer.alpha[c.source];
                    const double *col = &layer.color[static_cast<std::size_t>(c.source) * 3];
                    const double v[4] = {col[0] * a, col[1] * a, col[2] * a, a};
                    double gE = 0.0;
                    double gv[4];
                    for (int ch = 0; ch < 4; ++ch) {
                        gv[ch] = gl[ch] * e / denom;
                        gE += gl[ch] * (floored ? v[ch] / denom : (v[ch] - lv[ch]) / denom);
                    }
                    double *out = &slot[static_cast<std::size_t>(ci) * 5];
                    out[0] = gv[0] * a;
                    out[1] = gv[1] * a;
                    out[2] = gv[2] * a;
                    out[3] = gv[0] * col[0] + gv[1] * col[1] + gv[2] * col[2] + gv[3];
                    const double dEdD = ex * c.dwdD + e * config.tau * c.dddD;
                    out[4] = gE * dEdD;
                }
            }
        });
        const std::size_t srcPixels = layer.alpha.size();
        grads.color[m].assign(srcPixels * 3, 0.0);
        grads.alpha[m].assign(srcPixels, 0.0);
        grads.depth[m].assign(srcPixels, 0.0);
        for (std::size_t ci = 0; ci < s.contributions.size(); ++ci) {
            const std::size_t src = s.contributions[ci].source;
            const double *g = &slot[ci * 5];
            grads.color[m][src * 3 + 0] += g[0];
            grads.color[m][src * 3 + 1] += g[1];
            grads.color[m][src * 3 + 2] += g[2];
            grads.alpha[m][src] += g[3];
            grads.depth[m][src] += g[4];
        }
    }
    return grads;
}

std::vector<TimedFrame> renderSequence(const Mdp &mdp, std::span<const TargetCamera> targets,
                                       const SoftZConfig &config) {
    const RenderSource source = RenderSource::fromMdp(mdp);
    std::vector<TimedFrame> frames;
    frames.reserve(targets.size());
    for (const TargetCamera &t : targets) {
        const auto t0 = std::chrono::steady_clock::now();
        TimedFrame f;
        f.result = render(source, t, config);
        f.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        frames.push_back(std::move(f));
    }
    return frames;
}

ImageF toRgb(const ImageD &rgba, const float background[3]) {
    ImageF out(rgba.width(), rgba.height(), 3, 0.0f);
    for (std::size_t p = 0; p < rgba.pixelCount(); ++p) {
        const double *px = &rgba.data()[p * 4];
        for (int c = 0; c < 3; ++c) {
            const double bg = background ? background[c] : 0.0;
            out.data()[p * 3 + c] = static_cast<float>(std::clamp(px[c] + (1.0 - px[3]) * bg, 0.0, 1.0));
        }
    }
    return out;
}

std::vector<TargetCamera> orbitPoses(const TargetCamera &base, int count, double radius) {
    std::vector<TargetCamera> out;
    for (int k = 0; k < count; ++k) {
        const double theta = 2.0 * kPi * k / count;
        const Mat3 yaw = Eigen::AngleAxisd(theta, Vec3::UnitZ()).toRotationMatrix();
        TargetCamera t = base;
        const Mat3 rot = base.pose.rotation * yaw.transpose();
        const Vec3 center = yaw * base.pose.center() + radius * Vec3(std::cos(theta), std::sin(theta), 0.0);
        t.pose = Extrinsics::fromCenter(rot, center);
        out.push_back(t);
    }
    return out;
}

std::optional<TargetProjection> projectToTarget(const TargetCamera &target, const Vec3 &world) {
    const double n = world.norm();
    if (!(n > 0.0)) {
        return std::nullopt;
    }
    Projected pr;
    if (!project(target, world / n, n, pr)) {
        return std::nullopt;
    }
    return TargetProjection{pr.u, pr.v, pr.d};
}

} // namespace mdpano
