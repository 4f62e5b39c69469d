// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#include "mdpano/config_io.hpp"

#include "json_util.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace mdpano {

namespace detail {

Json parseJson(const std::string &text, const std::string &what) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error &e) {
        throw ParseError(what + ": " + e.what());
    }
}

ObjectReader::ObjectReader(const Json &object, std::string where) : object_(object), where_(std::move(where)) {
    if (!object_.is_object()) {
        throw ParseError(where_ + ": expected an object");
    }
}

bool ObjectReader::has(const std::string &key) const { return object_.contains(key) && !object_.at(key).is_null(); }

const Json &ObjectReader::get(const std::string &key) {
    used_.insert(key);
    if (!object_.contains(key)) {
        throw ParseError(where_ + ": missing key '" + key + "'");
    }
    return object_.at(key);
}

double ObjectReader::number(const std::string &key) {
    const Json &v = get(key);
    if (!v.is_number()) {
        throw ParseError(where_ + ": '" + key + "' must be a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        throw ParseError(where_ + ": '" + key + "' must be finite");
    }
    return d;
}

double ObjectReader::number(const std::string &key, double fallback) {
    used_.insert(key);
    return has(key) ? number(key) : fallback;
}

int ObjectReader::integer(const std::string &key) {
    const Json &v = get(key);
    if (!v.is_number_integer()) {
        throw ParseError(where_ + ": '" + key + "' must be an integer");
    }
    return v.get<int>();
}

int ObjectReader::integer(const std::string &key, int fallback) {
    used_.insert(key);
    return has(key) ? integer(key) : fallback;
}

std::string ObjectReader::string(const std::string &key, const std::string &fallback) {
    used_.insert(key);
    if (!has(key)) {
        return fallback;
    }
    const Json &v = object_.at(key);
    if (!v.is_string()) {
        throw ParseError(where_ + ": '" + key + "' must be a string");
    }
    return v.get<std::string>();
}

void ObjectReader::finish() const {
    for (const auto &item : object_.items()) {
        if (!used_.contains(item.key())) {
            throw ParseError(where_ + ": unknown key '" + item.key() + "'");
        }
    }
}

std::vector<double> numbers(const Json &value, std::size_t count, const std::string &where) {
    if (!value.is_array() || value.size() != count) {
        throw ParseError(where + ": expected an array of " + std::to_string(count) + " numbers");
    }
    std::vector<double> out;
    for (const Json &v : value) {
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
            throw ParseError(where + ": expected finite numbers");
        }
        out.push_back(v.get<double>());
    }
    return out;
}

void requireVersion(ObjectReader &reader) {
    if (!reader.has("version")) {
        throw FormatVersionError(reader.where() + ": missing version");
    }
    const Json &v = reader.get("version");
    if (!v.is_number_integer() || v.get<int>() != kJsonFormatVersion) {
        throw FormatVersionError(reader.where() + ": unsupported version " + v.dump() + " (expected " +
                                 std::to_string(kJsonFormatVersion) + ")");
    }
}

PoseSpec poseFromJson(const Json &value, const std::string &where) {
    ObjectReader r(value, where);
    PoseSpec pose;
    const auto p = numbers(r.get("position"), 3, where + ".position");
    pose.position = Vec3(p[0], p[1], p[2]);
    const auto q = numbers(r.get("orientation"), 4, where + ".orientation");
    const double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    if (std::abs(norm - 1.0) > 1e-6) {
        throw ParseError(where + ".orientation: quaternion norm " + std::to_string(norm) + " is not 1");
    }
    for (int i = 0; i < 4; ++i) {
        pose.orientation[i] = q[i];
    }
    const std::string mode = r.string("mode", "panorama");
    if (mode == "panorama") {
        pose.mode = TargetCamera::Mode::Panorama;
    } else if (mode == "perspective") {
        pose.mode = TargetCamera::Mode::Perspective;
    } else {
        throw ParseError(where + ".mode: expected 'panorama' or 'perspective'");
    }
    pose.width = r.integer("width", 0);
    pose.height = r.integer("height", 0);
    if (pose.width < 0 || pose.height < 0 || (pose.width == 0) != (pose.height == 0)) {
        throw ParseError(where + ": width and height must both be positive or both omitted");
    }
    if (pose.mode == TargetCamera::Mode::Perspective && pose.width == 0) {
        throw ParseError(where + ": perspective targets need width and height");
    }
    pose.fovDeg = r.number("fov_deg", pose.fovDeg);
    if (!(pose.fovDeg > 0.0 && pose.fovDeg < 180.0)) {
        throw ParseError(where + ".fov_deg: must lie in (0, 180)");
    }
    if (r.has("v_fov_slope")) {
        pose.vFovSlope = r.number("v_fov_slope");
        if (!(*pose.vFovSlope > 0.0)) {
            throw ParseError(where + ".v_fov_slope: must be positive");
        }
    }
    r.allow("v_fov_slope");
    r.finish();
    return pose;
}

Json poseToJson(const PoseSpec &pose) {
    Json j;
    j["position"] = {pose.position.x(), pose.position.y(), pose.position.z()};
    j["orientation"] = {pose.orientation[0], pose.orientation[1], pose.orientation[2], pose.orientation[3]};
    j["mode"] = pose.mode == TargetCamera::Mode::Panorama ? "panorama" : "perspective";
    if (pose.width > 0) {
        j["width"] = pose.width;
        j["height"] = pose.height;
    }
    if (pose.mode == TargetCamera::Mode::Perspective) {
        j["fov_deg"] = pose.fovDeg;
    }
    if (pose.vFovSlope) {
        j["v_fov_slope"] = *pose.vFovSlope;
    }
    return j;
}

} // namespace detail

using detail::Json;
using detail::ObjectReader;

std::string readTextFile(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) {
        throw IoError("cannot read " + path.string());
    }
    return ss.str();
}

void writeTextFile(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text) || !out.flush()) {
        throw IoError("cannot write " + path.string());
    }
}

// --- configuration ---------------------------------------------------------------------------

namespace {

const char *partitionName(PartitionMode mode) {
    return mode == PartitionMode::EquidistantRadius ? "equidistant_radius" : "equidistant_inverse_radius";
}

PartitionMode partitionFromName(const std::string &name) {
    if (name == "equidistant_radius") {
        return PartitionMode::EquidistantRadius;
    }
    if (name == "equidistant_inverse_radius") {
        return PartitionMode::EquidistantInverseRadius;
    }
    throw ParseError("config.mdp.partition: expected 'equidistant_radius' or 'equidistant_inverse_radius'");
}

template <typename T> std::vector<T> arrayOf(const Json &v, const std::string &where) {
    if (!v.is_array() || v.empty()) {
        throw ParseError(where + ": expected a non-empty array");
    }
    std::vector<T> out;
    for (const Json &e : v) {
        if constexpr (std::is_integral_v<T>) {
            if (!e.is_number_integer()) {
                throw ParseError(where + ": expected integers");
            }
        } else if (!e.is_number()) {
            throw ParseError(where + ": expected numbers");
        }
        out.push_back(e.get<T>());
    }
    return out;
}

} // namespace

AppConfig deskEvalConfig() {
    AppConfig c;
    c.pipeline.psv.nearDepth = 1.5;
    c.pipeline.psv.farDepth = 15.0;
    c.pipeline.mdp.mapping = PanoMapping{640, 320, 1.0};
    return c;
}

AppConfig parseConfig(const std::string &text) {
    const Json root = detail::parseJson(text, "config");
    ObjectReader r(root, "config");
    detail::requireVersion(r);
    AppConfig c;
    if (r.has("psv")) {
        ObjectReader s(r.get("psv"), "config.psv");
        c.pipeline.psv.layerCount = s.integer("layers", c.pipeline.psv.layerCount);
        c.pipeline.psv.neighborCount = s.integer("neighbors", c.pipeline.psv.neighborCount);
        c.pipeline.psv.nearDepth = s.number("near", c.pipeline.psv.nearDepth);
        if (s.has("far")) {
            c.pipeline.psv.farDepth = s.number("far");
        } else if (s.has("far_infinite")) {
            const Json &v = s.get("far_infinite");
            if (!v.is_boolean()) {
                throw ParseError("config.psv.far_infinite: expected a boolean");
            }
            if (v.get<bool>()) {
                c.pipeline.psv.farDepth = std::numeric_limits<double>::infinity();
            }
        }
        s.allow("far_infinite");
        s.finish();
    }
    if (r.has("estimator")) {
        ObjectReader s(r.get("estimator"), "config.estimator");
        c.pipeline.estimator.sigma0 = s.number("sigma0", c.pipeline.estimator.sigma0);
        c.pipeline.estimator.alphaMin = s.number("alpha_min", c.pipeline.estimator.alphaMin);
        s.finish();
    }
    if (r.has("mdp")) {
        ObjectReader s(r.get("mdp"), "config.mdp");
        MdpParams &m = c.pipeline.mdp;
        m.layerCount = s.integer("layers", m.layerCount);
        m.mode = partitionFromName(s.string("partition", partitionName(m.mode)));
        if (s.has("rho_min")) {
            m.rhoMin = s.number("rho_min");
        }
        if (s.has("rho_max")) {
            m.rhoMax = s.number("rho_max");
        }
        s.allow("rho_min");
        s.allow("rho_max");
        m.alphaCull = s.number("alpha_cull", m.alphaCull);
        m.mapping.width = s.integer("pano_width", m.mapping.width);
        m.mapping.height = s.integer("pano_height", m.mapping.height);
        m.mapping.vFovSlope = s.number("v_fov_slope", m.mapping.vFovSlope);
        s.finish();
    }
    if (r.has("render")) {
        ObjectReader s(r.get("render"), "config.render");
        c.render.tau = s.number("tau", c.render.tau);
        c.render.epsilon = s.number("epsilon", c.render.epsilon);
        s.finish();
    }
    c.threads = r.integer("threads", c.threads);
    c.maxFramePixels = r.integer("max_frame_pixels", c.maxFramePixels);
    if (r.has("rig")) {
        ObjectReader s(r.get("rig"), "config.rig");
        c.rig.cameras = s.integer("cameras", c.rig.cameras);
        c.rig.ringRadius = s.number("ring_radius", c.rig.ringRadius);
        c.rig.fovDeg = s.number("fov_deg", c.rig.fovDeg);
        c.rig.resolution = s.integer("resolution", c.rig.resolution);
        s.finish();
    }
    if (r.has("eval")) {
        ObjectReader s(r.get("eval"), "config.eval");
        if (s.has("layer_counts")) {
            c.eval.layerCounts = arrayOf<int>(s.get("layer_counts"), "config.eval.layer_counts");
        }
        if (s.has("translations")) {
            c.eval.translations = arrayOf<double>(s.get("translations"), "config.eval.translations");
        }
        s.allow("layer_counts");
        s.allow("translations");
        c.eval.poseCount = s.integer("pose_count", c.eval.poseCount);
        c.eval.targetRadius = s.number("target_radius", c.eval.targetRadius);
        if (s.has("seed")) {
            const Json &seed = s.get("seed");
            if (!seed.is_number_unsigned()) {
                throw ParseError("config.eval.seed: expected a non-negative integer");
            }
            c.eval.seed = seed.get<std::uint64_t>();
        }
        s.allow("seed");
        s.finish();
    }
    r.finish();

    if (c.threads < 0 || c.maxFramePixels < 1 || c.eval.poseCount < 1) {
        throw ParseError("config: threads must be >= 0, max_frame_pixels and eval.pose_count >= 1");
    }
    const PsvParams &psv = c.pipeline.psv;
    if (psv.layerCount < 1 || psv.neighborCount < 1 || !(psv.nearDepth > 0.0) || !(psv.farDepth > psv.nearDepth)) {
        throw ParseError("config.psv: need layers >= 1, neighbors >= 1 and 0 < near < far");
    }
    try {
        c.pipeline.partition().validate();
        c.pipeline.mdp.mapping.validate();
        c.render.validate();
    } catch (const Error &e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    return c;
}

AppConfig loadConfig(const std::filesystem::path &path) { return parseConfig(readTextFile(path)); }

std::string configToJson(const AppConfig &c) {
    nlohmann::ordered_json j;
    j["version"] = kJsonFormatVersion;
    const PsvParams &p = c.pipeline.psv;
    j["psv"] = {{"layers", p.layerCount}, {"neighbors", p.neighborCount}, {"near", p.nearDepth}};
    if (std::isinf(p.farDepth)) {
        j["psv"]["far_infinite"] = true;
    } else {
        j["psv"]["far"] = p.farDepth;
    }
    j["estimator"] = {{"sigma0", c.pipeline.estimator.sigma0}, {"alpha_min", c.pipeline.estimator.alphaMin}};
    const MdpParams &m = c.pipeline.mdp;
    j["mdp"] = {{"layers", m.layerCount}, {"partition", partitionName(m.mode)}};
    if (m.rhoMin) {
        j["mdp"]["rho_min"] = *m.rhoMin;
    }
    if (m.rhoMax) {
        j["mdp"]["rho_max"] = *m.rhoMax;
    }
    j["mdp"]["alpha_cull"] = m.alphaCull;
    j["mdp"]["pano_width"] = m.mapping.width;
    j["mdp"]["pano_height"] = m.mapping.height;
    j["mdp"]["v_fov_slope"] = m.mapping.vFovSlope;
    j["render"] = {{"tau", c.render.tau}, {"epsilon", c.render.epsilon}};
    j["threads"] = c.threads;
    j["max_frame_pixels"] = c.maxFramePixels;
    j["rig"] = {{"cameras", c.rig.cameras},
                {"ring_radius", c.rig.ringRadius},
                {"fov_deg", c.rig.fovDeg},
                {"resolution", c.rig.resolution}};
    j["eval"] = {{"layer_counts", c.eval.layerCounts},
                 {"translations", c.eval.translations},
                 {"pose_count", c.eval.poseCount},
                 {"target_radius", c.eval.targetRadius},
                 {"seed", c.eval.seed}};
    return j.dump(2) + "\n";
}

// --- rig -------------------------------------------------------------------------------------

namespace {

Extrinsics extrinsicsFromJson(ObjectReader &r) {
    const auto rot = detail::numbers(r.get("rotation"), 9, r.where() + ".rotation");
    const auto t = detail::numbers(r.get("translation"), 3, r.where() + ".translation");
    Extrinsics e;
    for (int i = 0; i < 9; ++i) {
        e.rotation(i / 3, i % 3) = rot[i];
    }
    e.translation = Vec3(t[0], t[1], t[2]);
    return e;
}

void extrinsicsToJson(const Extrinsics &e, nlohmann::ordered_json &j) {
    std::vector<double> rot;
    for (int i = 0; i < 9; ++i) {
        rot.push_back(e.rotation(i / 3, i % 3));
    }
    j["rotation"] = rot;
    j["translation"] = {e.translation.x(), e.translation.y(), e.translation.z()};
}

} // namespace

CameraRig parseRig(const std::string &text) {
    try {
        const Json root = detail::parseJson(text, "rig");
        ObjectReader r(root, "rig");
        detail::requireVersion(r);
        CameraRig rig;
        const Json &cams = r.get("cameras");
        if (!cams.is_array()) {
            throw ParseError("rig.cameras: expected an array");
        }
        for (std::size_t i = 0; i < cams.size(); ++i) {
            ObjectReader c(cams[i], "rig.cameras[" + std::to_string(i) + "]");
            Camera cam;
            cam.intrinsics.fx = c.number("fx");
            cam.intrinsics.fy = c.number("fy");
            cam.intrinsics.cx = c.number("cx");
            cam.intrinsics.cy = c.number("cy");
            cam.intrinsics.width = c.integer("width");
            cam.intrinsics.height = c.integer("height");
            cam.extrinsics = extrinsicsFromJson(c);
            c.finish();
            rig.cameras.push_back(cam);
        }
        if (r.has("rig_center")) {
            ObjectReader c(r.get("rig_center"), "rig.rig_center");
            rig.rigCenter = extrinsicsFromJson(c);
            c.finish();
        }
        r.allow("rig_center");
        r.finish();
        rig.validate();
        return rig;
    } catch (const CalibrationError &) {
        throw;
    } catch (const Error &e) {
        throw CalibrationError(std::string("invalid rig calibration: ") + e.what());
    }
}

CameraRig loadRig(const std::filesystem::path &path) {
    std::string text;
    try {
        text = readTextFile(path);
    } catch (const IoError &e) {
        throw CalibrationError(std::string("camera calibration unavailable: ") + e.what());
    }
    return parseRig(text);
}

std::string rigToJson(const CameraRig &rig) {
    nlohmann::ordered_json j;
    j["version"] = kJsonFormatVersion;
    j["cameras"] = nlohmann::ordered_json::array();
    for (const Camera &cam : rig.cameras) {
        nlohmann::ordered_json c;
        c["fx"] = cam.intrinsics.fx;
        c["fy"] = cam.intrinsics.fy;
        c["cx"] = cam.intrinsics.cx;
        c["cy"] = cam.intrinsics.cy;
        c["width"] = cam.intrinsics.width;
        c["height"] = cam.intrinsics.height;
        extrinsicsToJson(cam.extrinsics, c);
        j["cameras"].push_back(c);
    }
    nlohmann::ordered_json center;
    extrinsicsToJson(rig.rigCenter, center);
    j["rig_center"] = center;
    return j.dump(2) + "\n";
}

// --- scene -----------------------------------------------------------------------------------

namespace {

std::array<float, 3> rgbFromJson(const Json &v, const std::string &where) {
    const auto n = detail::numbers(v, 3, where);
    return {static_cast<float>(n[0]), static_cast<float>(n[1]), static_cast<float>(n[2])};
}

Vec3 vecFromJson(const Json &v, const std::string &where) {
    const auto n = detail::numbers(v, 3, where);
    return {n[0], n[1], n[2]};
}

Material materialFromJson(const Json &v, const std::string &where) {
    ObjectReader r(v, where);
    Material m;
    m.color = rgbFromJson(r.get("color"), where + ".color");
    if (r.has("color2")) {
        m.color2 = rgbFromJson(r.get("color2"), where + ".color2");
    }
    r.allow("color2");
    const std::string tex = r.string("texture", "checker");
    if (tex == "solid") {
        m.texture = TextureKind::Solid;
    } else if (tex == "checker") {
        m.texture = TextureKind::Checker;
    } else if (tex == "gradient") {
        m.texture = TextureKind::Gradient;
    } else if (tex == "smooth") {
        m.texture = TextureKind::Smooth;
    } else {
        throw ParseError(where + ".texture: expected 'solid', 'checker', 'gradient' or 'smooth'");
    }
    m.scale = r.number("scale", m.scale);
    r.finish();
    return m;
}

nlohmann::ordered_json materialToJson(const Material &m) {
    const char *names[] = {"solid", "checker", "gradient", "smooth"};
    return {{"color", m.color}, {"color2", m.color2}, {"texture", names[static_cast<int>(m.texture)]}, {"scale", m.scale}};
}

const Json &arrayOrEmpty(ObjectReader &r, const std::string &key) {
    static const Json empty = Json::array();
    if (!r.has(key)) {
        r.allow(key);
        return empty;
    }
    const Json &v = r.get(key);
    if (!v.is_array()) {
        throw ParseError(r.where() + "." + key + ": expected an array");
    }
    return v;
}

} // namespace

SyntheticScene parseScene(const std::string &text) {
    const Json root = detail::parseJson(text, "scene");
    ObjectReader r(root, "scene");
    detail::requireVersion(r);
    SyntheticScene s;
    if (r.has("background")) {
        s.background = rgbFromJson(r.get("background"), "scene.background");
    }
    const Json &cyls = arrayOrEmpty(r, "cylinders");
    for (std::size_t i = 0; i < cyls.size(); ++i) {
        const std::string where = "scene.cylinders[" + std::to_string(i) + "]";
        ObjectReader c(cyls[i], where);
        Cylinder cyl;
        const auto center = detail::numbers(c.get("center"), 2, where + ".center");
        cyl.cx = center[0];
        cyl.cy = center[1];
        cyl.radius = c.number("radius");
        cyl.zMin = c.number("z_min");
        cyl.zMax = c.number("z_max");
        cyl.phiMin = c.number("phi_min", cyl.phiMin);
        cyl.phiMax = c.number("phi_max", cyl.phiMax);
        cyl.material = materialFromJson(c.get("material"), where + ".material");
        c.finish();
        if (!(cyl.radius > 0.0) || !(cyl.zMax > cyl.zMin)) {
            throw ParseError(where + ": radius must be positive and z_max > z_min");
        }
        s.cylinders.push_back(cyl);
    }
    const Json &spheres = arrayOrEmpty(r, "spheres");
    for (std::size_t i = 0; i < spheres.size(); ++i) {
        const std::string where = "scene.spheres[" + std::to_string(i) + "]";
        ObjectReader c(spheres[i], where);
        Sphere sp;
        sp.center = vecFromJson(c.get("center"), where + ".center");
        sp.radius = c.number("radius");
        sp.material = materialFromJson(c.get("material"), where + ".material");
        c.finish();
        if (!(sp.radius > 0.0)) {
            throw ParseError(where + ": radius must be positive");
        }
        s.spheres.push_back(sp);
    }
    const Json &boxes = arrayOrEmpty(r, "boxes");
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const std::string where = "scene.boxes[" + std::to_string(i) + "]";
        ObjectReader c(boxes[i], where);
        Box b;
        b.min = vecFromJson(c.get("min"), where + ".min");
        b.max = vecFromJson(c.get("max"), where + ".max");
        b.material = materialFromJson(c.get("material"), where + ".material");
        c.finish();
        if (!(b.max.array() > b.min.array()).all()) {
            throw ParseError(where + ": max must exceed min on every axis");
        }
        s.boxes.push_back(b);
    }
    if (r.has("mirror")) {
        ObjectReader c(r.get("mirror"), "scene.mirror");
        MirrorPatch m;
        m.center = vecFromJson(c.get("center"), "scene.mirror.center");
        m.normal = vecFromJson(c.get("normal"), "scene.mirror.normal").normalized();
        m.uAxis = vecFromJson(c.get("u_axis"), "scene.mirror.u_axis").normalized();
        m.halfWidth = c.number("half_width");
        m.halfHeight = c.number("half_height");
        if (c.has("tint")) {
            m.tint = rgbFromJson(c.get("tint"), "scene.mirror.tint");
        }
        c.allow("tint");
        c.finish();
        s.mirror = m;
    }
    r.allow("mirror");
    r.finish();
    return s;
}

SyntheticScene loadScene(const std::filesystem::path &path) { return parseScene(readTextFile(path)); }

std::string sceneToJson(const SyntheticScene &s) {
    nlohmann::ordered_json j;
    j["version"] = kJsonFormatVersion;
    j["background"] = s.background;
    j["cylinders"] = nlohmann::ordered_json::array();
    for (const Cylinder &c : s.cylinders) {
        j["cylinders"].push_back({{"center", {c.cx, c.cy}},
                                  {"radius", c.radius},
                                  {"z_min", c.zMin},
                                  {"z_max", c.zMax},
                                  {"phi_min", c.phiMin},
                                  {"phi_max", c.phiMax},
                                  {"material", materialToJson(c.material)}});
    }
    j["spheres"] = nlohmann::ordered_json::array();
    for (const Sphere &sp : s.spheres) {
        j["spheres"].push_back({{"center", {sp.center.x(), sp.center.y(), sp.center.z()}},
                                {"radius", sp.radius},
                                {"material", materialToJson(sp.material)}});
    }
    j["boxes"] = nlohmann::ordered_json::array();
    for (const Box &b : s.boxes) {
        j["boxes"].push_back({{"min", {b.min.x(), b.min.y(), b.min.z()}},
                              {"max", {b.max.x(), b.max.y(), b.max.z()}},
                              {"material", materialToJson(b.material)}});
    }
    if (s.mirror) {
        const MirrorPatch &m = *s.mirror;
        j["mirror"] = {{"center", {m.center.x(), m.center.y(), m.center.z()}},
                       {"normal", {m.normal.x(), m.normal.y(), m.normal.z()}},
                       {"u_axis", {m.uAxis.x(), m.uAxis.y(), m.uAxis.z()}},
                       {"half_width", m.halfWidth},
                       {"half_height", m.halfHeight},
                       {"tint", m.tint}};
    }
    return j.dump(2) + "\n";
}

// --- poses -----------------------------------------------------------------------------------

int PoseSpec::pixelCount(const PanoMapping &mdpMapping) const {
    if (width > 0) {
        return width * height;
    }
    return mdpMapping.width * mdpMapping.height;
}

TargetCamera PoseSpec::target(const PanoMapping &mdpMapping) const {
    const Mat3 rotation = rotationFromQuaternion(orientation[0], orientation[1], orientation[2], orientation[3]);
    const Extrinsics pose = Extrinsics::fromCenter(rotation, position);
    if (mode == TargetCamera::Mode::Perspective) {
        return TargetCamera::perspective(Intrinsics::fromFov(width, height, fovDeg * std::numbers::pi / 180.0), pose);
    }
    PanoMapping m = mdpMapping;
    if (width > 0) {
        m.width = width;
        m.height = height;
    }
    if (vFovSlope) {
        m.vFovSlope = *vFovSlope;
    }
    return TargetCamera::panorama(m, pose);
}

std::vector<PoseSpec> parsePoses(const std::string &text) {
    const Json root = detail::parseJson(text, "poses");
    ObjectReader r(root, "poses");
    detail::requireVersion(r);
    const Json &list = r.get("poses");
    if (!list.is_array()) {
        throw ParseError("poses.poses: expected an array");
    }
    std::vector<PoseSpec> out;
    for (std::size_t i = 0; i < list.size(); ++i) {
        out.push_back(detail::poseFromJson(list[i], "poses[" + std::to_string(i) + "]"));
    }
    r.finish();
    return out;
}

std::vector<PoseSpec> loadPoses(const std::filesystem::path &path) { return parsePoses(readTextFile(path)); }

std::string posesToJson(const std::vector<PoseSpec> &poses) {
    Json j;
    j["version"] = kJsonFormatVersion;
    j["poses"] = Json::array();
    for (const PoseSpec &p : poses) {
        j["poses"].push_back(detail::poseToJson(p));
    }
    return j.dump(2) + "\n";
}

} // namespace mdpano
