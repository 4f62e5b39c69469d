// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#include "mdpano/scene.hpp"

#include "mdpano/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mdpano {

namespace {

constexpr double kTMin = 1e-9;
constexpr double kPi = std::numbers::pi;

struct Candidate {
    double t = std::numeric_limits<double>::infinity();
    const Material *material = nullptr;
    bool mirror = false;
};

void intersectCylinder(const Cylinder &c, const Vec3 &o, const Vec3 &d, Candidate &best) {
    const double ox = o.x() - c.cx;
    const double oy = o.y() - c.cy;
    const double a = d.x() * d.x() + d.y() * d.y();
    if (a <= 0.0) {
        return;
    }
    const double b = 2.0 * (ox * d.x() + oy * d.y());
    const double cc = ox * ox + oy * oy - c.radius * c.radius;
    const double disc = b * b - 4.0 * a * cc;
    if (disc < 0.0) {
        return;
    }
    const double sq = std::sqrt(disc);
    // Numerically stable pair of roots.
    const double q = -0.5 * (b + std::copysign(sq, b));
    double roots[2] = {q / a, q != 0.0 ? cc / q : q / a};
    if (roots[0] > roots[1]) {
        std::swap(roots[0], roots[1]);
    }
    const bool fullArc = c.phiMin <= -kPi && c.phiMax >= kPi;
    for (double t : roots) {
        if (!(t > kTMin) || t >= best.t) {
            continue;
        }
        const double z = o.z() + t * d.z();
        if (z < c.zMin || z > c.zMax) {
            continue;
        }
        if (!fullArc) {
            const double phi = std::atan2(oy + t * d.y(), ox + t * d.x());
            if (phi < c.phiMin || phi > c.phiMax) {
                continue;
            }
        }
        best = {t, &c.material, false};
        return;
    }
}

void intersectSphere(const Sphere &s, const Vec3 &o, const Vec3 &d, Candidate &best) {
    const Vec3 oc = o - s.center;
    const double a = d.squaredNorm();
    const double b = 2.0 * oc.dot(d);
    const double c = oc.squaredNorm() - s.radius * s.radius;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
        return;
    }
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (b + std::copysign(sq, b));
    double roots[2] = {q / a, q != 0.0 ? c / q : q / a};
    if (roots[0] > roots[1]) {
        std::swap(roots[0], roots[1]);
    }
    for (double t : roots) {
        if (t > kTMin && t < best.t) {
            best = {t, &s.material, false};
            return;
        }
    }
}

void intersectBox(const Box &bx, const Vec3 &o, const Vec3 &d, Candidate &best) {
    double tNear = -std::numeric_limits<double>::infinity();
    double tFar = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        if (d[i] == 0.0) {
            if (o[i] < bx.min[i] || o[i] > bx.max[i]) {
                return;
            }
            continue;
        }
        double t0 = (bx.min[i] - o[i]) / d[i];
        double t1 = (bx.max[i] - o[i]) / d[i];
        if (t0 > t1) {
            std::swap(t0, t1);
        }
        tNear = std::max(tNear, t0);
        tFar = std::min(tFar, t1);
    }
    if (tNear > tFar) {
        return;
    }
    const double t = tNear > kTMin ? tNear : tFar;
    if (t > kTMin && t < best.t) {
        best = {t, &bx.material, false};
    }
}

void intersectMirror(const MirrorPatch &m, const Vec3 &o, const Vec3 &d, Candidate &best) {
    const double denom = m.normal.dot(d);
    if (std::abs(denom) < 1e-15) {
        return;
    }
    const double t = m.normal.dot(m.center - o) / denom;
    if (!(t > kTMin) || t >= best.t) {
        return;
    }
    const Vec3 rel = o + t * d - m.center;
    const Vec3 vAxis = m.normal.cross(m.uAxis);
    if (std::abs(rel.dot(m.uAxis)) <= m.halfWidth && std::abs(rel.dot(vAxis)) <= m.halfHeight) {
        best = {t, nullptr, true};
    }
}

Candidate nearest(const SyntheticScene &scene, const Vec3 &o, const Vec3 &d, bool withMirror) {
    Candidate best;
    for (const auto &c : scene.cylinders) {
        intersectCylinder(c, o, d, best);
    }
    for (const auto &s : scene.spheres) {
        intersectSphere(s, o, d, best);
    }
    for (const auto &b : scene.boxes) {
        intersectBox(b, o, d, best);
    }
    if (withMirror && scene.mirror) {
        intersectMirror(*scene.mirror, o, d, best);
    }
    return best;
}

} // namespace

std::array<float, 3> Material::albedo(const Vec3 &p) const {
    switch (texture) {
    case TextureKind::Solid:
        return color;
    case TextureKind::Gradient: {
        const double t = 0.5 + 0.5 * std::tanh(p.z() / std::max(scale, 1e-9));
        std::array<float, 3> out;
        for (int c = 0; c < 3; ++c) {
            out[c] = static_cast<float>(color[c] * (1.0 - t) + color2[c] * t);
        }
        return out;
    }
    case TextureKind::Smooth: {
        const double s = std::max(scale, 1e-9);
        double t = 0.5;
        for (int a = 0; a < 3; ++a) {
            t += 0.08 * (std::sin(2.0 * kPi * p[a] / s + a) + std::sin(2.0 * kPi * p[a] / (0.37 * s) + 2.0 * a));
        }
        std::array<float, 3> out;
        for (int c = 0; c < 3; ++c) {
            out[c] = static_cast<float>(color[c] * t + color2[c] * (1.0 - t));
        }
        return out;
    }
    case TextureKind::Checker:
    default: {
        const double s = std::max(scale, 1e-9);
        const long long cell = static_cast<long long>(std::floor(p.x() / s + 0.25)) +
                               static_cast<long long>(std::floor(p.y() / s + 0.25)) +
                               static_cast<long long>(std::floor(p.z() / s + 0.25));
        const double k = 2.0 * kPi * 3.0 / s;
        const double fine = 0.5 + 0.5 * std::sin(k * p.x()) * std::sin(k * p.y() + 1.0) * std::sin(k * p.z() + 2.0);
        const double mix = (cell & 1) ? 0.75 : 0.25;
        const double t = 0.7 * mix + 0.3 * fine;
        std::array<float, 3> out;
        for (int c = 0; c < 3; ++c) {
            out[c] = static_cast<float>(color[c] * t + color2[c] * (1.0 - t));
        }
        return out;
    }
    }
}

double SyntheticScene::maxRadius() const {
    double r = 0.0;
    for (const auto &c : cylinders) {
        r = std::max(r, std::hypot(c.cx, c.cy) + c.radius);
    }
    for (const auto &s : spheres) {
        r = std::max(r, std::hypot(s.center.x(), s.center.y()) + s.radius);
    }
    for (const auto &b : boxes) {
        for (int i = 0; i < 4; ++i) {
            const double x = (i & 1) ? b.max.x() : b.min.x();
            const double y = (i & 2) ? b.max.y() : b.min.y();
            r = std::max(r, std::hypot(x, y));
        }
    }
    return r;
}

std::optional<Hit> traceRay(const SyntheticScene &scene, const Vec3 &origin, const Vec3 &dir) {
    const Candidate c = nearest(scene, origin, dir, true);
    if (!std::isfinite(c.t)) {
        return std::nullopt;
    }
    Hit hit;
    hit.t = c.t;
    hit.point = origin + c.t * dir;
    if (!c.mirror) {
        hit.color = c.material->albedo(hit.point);
        return hit;
    }
    hit.viaMirror = true;
    const Vec3 &n = scene.mirror->normal;
    const Vec3 reflected = dir - 2.0 * dir.dot(n) / n.squaredNorm() * n;
    const Candidate r = nearest(scene, hit.point, reflected, false);
    const std::array<float, 3> seen = std::isfinite(r.t) ? r.material->albedo(hit.point + r.t * reflected)
                                                         : scene.background;
    for (int k = 0; k < 3; ++k) {
        hit.color[k] = seen[k] * scene.mirror->tint[k];
    }
    return hit;
}

RaycastImage raycastRender(const SyntheticScene &scene, const TargetCamera &camera) {
    camera.validate();
    const int w = camera.width();
    const int h = camera.height();
    RaycastImage out{ImageF(w, h, 3), ImageD(w, h, 1)};
    const Vec3 origin = camera.pose.center();
    const Mat3 toWorld = camera.pose.rotation.transpose();
    parallelFor(0, static_cast<std::size_t>(h), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < w; ++x) {
            Vec3 local;
            if (camera.mode == TargetCamera::Mode::Perspective) {
                const Intrinsics &k = camera.intrinsics;
                local = Vec3((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
            } else {
                const double phi = camera.mapping.phiAtPixel(x);
                local = Vec3(std::cos(phi), std::sin(phi), camera.mapping.slopeAtPixel(y));
            }
            const Vec3 dir = toWorld * local;
            const auto hit = traceRay(scene, origin, dir);
            if (!hit) {
                for (int c = 0; c < 3; ++c) {
                    out.rgb.at(x, y, c) = scene.background[c];
                }
                continue;
            }
            for (int c = 0; c < 3; ++c) {
                out.rgb.at(x, y, c) = hit->color[c];
            }
            // local has unit z (perspective) or unit horizontal radius (panorama), so t is the depth.
            out.depth.at(x, y) = hit->t;
        }
    });
    return out;
}

std::vector<ImageF> renderRigViews(const SyntheticScene &scene, const CameraRig &rig) {
    std::vector<ImageF> views;
    views.reserve(rig.size());
    for (const Camera &cam : rig.cameras) {
        // Rig cameras live in the world frame; the rig centre transform maps world -> rig frame.
        TargetCamera t = TargetCamera::perspective(cam.intrinsics, cam.extrinsics);
        views.push_back(raycastRender(scene, t).rgb);
    }
    return views;
}

SyntheticScene standardScene() {
    SyntheticScene s;
    auto mat = [](std::array<float, 3> a, std::array<float, 3> b, double scale) {
        Material m;
        m.color = a;
        m.color2 = b;
        m.scale = scale;
        return m;
    };
    // Room wall, tall enough to cover the full vertical field of the panorama.
    s.cylinders.push_back({0.0, 0.0, 12.0, -14.0, 14.0, -kPi, kPi, mat({0.85f, 0.8f, 0.7f}, {0.25f, 0.3f, 0.4f}, 1.2)});
    // Near pillars.
    s.cylinders.push_back({2.2, 0.4, 0.25, -3.0, 3.0, -kPi, kPi, mat({0.9f, 0.4f, 0.3f}, {0.2f, 0.1f, 0.1f}, 0.25)});
    s.cylinders.push_back({-1.2, -2.0, 0.3, -3.0, 3.0, -kPi, kPi, mat({0.3f, 0.8f, 0.4f}, {0.1f, 0.2f, 0.1f}, 0.25)});
    // Mid-range boxes.
    s.boxes.push_back({Vec3(4.0, 2.0, -1.5), Vec3(5.5, 3.5, 1.0), mat({0.9f, 0.9f, 0.3f}, {0.3f, 0.2f, 0.1f}, 0.4)});
    s.boxes.push_back({Vec3(-6.5, 1.0, -2.0), Vec3(-5.0, 3.0, 2.0), mat({0.4f, 0.6f, 0.9f}, {0.1f, 0.1f, 0.3f}, 0.5)});
    s.boxes.push_back({Vec3(1.0, -8.0, -1.0), Vec3(3.0, -6.5, 1.5), mat({0.8f, 0.5f, 0.9f}, {0.2f, 0.1f, 0.3f}, 0.5)});
    s.boxes.push_back({Vec3(-9.0, -5.0, -3.0), Vec3(-7.0, -3.0, 0.5), mat({0.6f, 0.9f, 0.8f}, {0.1f, 0.3f, 0.2f}, 0.6)});
    // Spheres.
    s.spheres.push_back({Vec3(-2.5, 2.5, 0.3), 0.6, mat({0.95f, 0.7f, 0.2f}, {0.3f, 0.1f, 0.05f}, 0.3)});
    s.spheres.push_back({Vec3(3.0, -3.0, -0.5), 0.8, mat({0.5f, 0.9f, 0.9f}, {0.05f, 0.2f, 0.3f}, 0.35)});
    s.spheres.push_back({Vec3(0.5, 7.5, 1.0), 1.2, mat({0.9f, 0.6f, 0.7f}, {0.2f, 0.1f, 0.2f}, 0.6)});
    s.background = {0.0f, 0.0f, 0.0f};
    return s;
}

SyntheticScene concentricCylindersScene(const std::vector<double> &radii) {
    SyntheticScene s;
    const int n = static_cast<int>(radii.size());
    for (int i = 0; i < n; ++i) {
        Cylinder c;
        c.radius = radii[i];
        c.zMin = -2.0 * radii[i];
        c.zMax = 2.0 * radii[i];
        c.phiMin = -kPi + 2.0 * kPi * i / n;
        c.phiMax = -kPi + 2.0 * kPi * (i + 1) / n;
        c.material.color = {0.9f, 0.5f + 0.1f * i, 0.3f};
        c.material.color2 = {0.1f, 0.2f, 0.4f};
        c.material.scale = 0.1 * radii[i];
        s.cylinders.push_back(c);
    }
    return s;
}

} // namespace mdpano
