// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#include "mdpano/service.hpp"

#include "json_util.hpp"
#include "mdpano/image_io.hpp"

#include <httplib.h>

#include <limits>

namespace mdpano {

using detail::Json;

PoseRequest parsePoseRequest(const std::string &body) {
    Json root = detail::parseJson(body, "pose request");
    if (!root.is_object()) {
        throw ParseError("pose request: expected an object");
    }
    PoseRequest req;
    if (!root.contains("frame_id") || !root["frame_id"].is_number_integer()) {
        throw ParseError("pose request: 'frame_id' must be an integer");
    }
    req.frameId = root["frame_id"].get<std::int64_t>();
    if (root.contains("encoding")) {
        if (root["encoding"] != "png") {
            throw ParseError("pose request: unsupported encoding (only 'png')");
        }
        root.erase("encoding");
    }
    root.erase("frame_id");
    req.pose = detail::poseFromJson(root, "pose request");
    return req;
}

FrameService::FrameService(Mdp mdp, Options options)
    : mdp_(std::move(mdp)), options_(options), latestDelivered_(std::numeric_limits<std::int64_t>::min()) {
    mdp_.validate();
    options_.render.validate();
    source_ = RenderSource::fromMdp(mdp_);
    motionBound_ = motionBound(source_);
}

ImageF FrameService::frameImage(const RenderSource &source, const TargetCamera &target, const SoftZConfig &config,
                                bool *orderingViolation) {
    const RenderResult r = render(source, target, config);
    if (orderingViolation) {
        *orderingViolation = r.orderingViolation;
    }
    return toRgb(r.rgba);
}

ServiceResponse FrameService::error(int status, const std::string &reason) const {
    return {status, "application/json", Json{{"error", reason}}.dump()};
}

ServiceResponse FrameService::meta() const {
    Json j;
    j["width"] = mdp_.mapping.width;
    j["height"] = mdp_.mapping.height;
    j["layers"] = mdp_.layerCount();
    j["v_fov_slope"] = mdp_.mapping.vFovSlope;
    j["partition"] = mdp_.partition.mode == PartitionMode::EquidistantRadius ? "equidistant_radius"
                                                                             : "equidistant_inverse_radius";
    const std::vector<double> b = mdp_.partition.boundaries();
    std::vector<double> radii;
    for (std::size_t m = 0; m + 1 < b.size(); ++m) {
        radii.push_back(0.5 * (b[m] + b[m + 1]));
    }
    j["shell_boundaries"] = b;
    j["shell_radii"] = radii;
    j["motion_bound"] = std::isfinite(motionBound_) ? Json(motionBound_) : Json(nullptr);
    j["max_frame_pixels"] = options_.maxFramePixels;
    return {200, "application/json", j.dump()};
}

ServiceResponse FrameService::health() const {
    Json j{{"status", "ok"},
           {"active_renders", activeRenders_.load()},
           {"frames_rendered", rendered_.load()},
           {"frames_delivered", deliveredCount_.load()}};
    return {200, "application/json", j.dump()};
}

std::int64_t FrameService::latestDelivered() const {
    std::lock_guard lock(mutex_);
    return latestDelivered_;
}

ServiceResponse FrameService::frame(const std::string &body) {
    PoseRequest req;
    try {
        req = parsePoseRequest(body);
    } catch (const Error &e) {
        return error(400, e.what());
    }
    if (static_cast<long long>(req.pose.pixelCount(mdp_.mapping)) > options_.maxFramePixels) {
        return error(413, "requested resolution exceeds " + std::to_string(options_.maxFramePixels) + " pixels");
    }
    TargetCamera target;
    try {
        target = req.pose.target(mdp_.mapping);
        target.validate();
    } catch (const Error &e) {
        return error(400, e.what());
    }

    if (activeRenders_.fetch_add(1) >= options_.renderSlots) {
        activeRenders_.fetch_sub(1);
        return error(503, "all render slots busy");
    }
    struct SlotGuard {
        std::atomic<int> &n;
        ~SlotGuard() { n.fetch_sub(1); }
    } slot{activeRenders_};

    {
        std::lock_guard lock(mutex_);
        if (req.frameId <= latestDelivered_ || inFlight_.contains(req.frameId)) {
            Json j{{"error", "stale or duplicate frame id"}, {"frame_id", req.frameId}};
            if (latestDelivered_ != std::numeric_limits<std::int64_t>::min()) {
                j["latest_delivered"] = latestDelivered_;
            }
            return {409, "application/json", j.dump()};
        }
        inFlight_.insert(req.frameId);
    }
    // Removes the id and wakes waiters on every exit path, so a failed render cannot stall
    // delivery of later frames.
    struct FlightGuard {
        FrameService &self;
        std::int64_t id;
        bool delivered = false;
        ~FlightGuard() {
            std::lock_guard lock(self.mutex_);
            self.inFlight_.erase(id);
            if (delivered) {
                self.latestDelivered_ = id;
            }
            self.delivered_.notify_all();
        }
    } flight{*this, req.frameId};

    bool violation = false;
    std::vector<std::uint8_t> png;
    try {
        png = encodePng(frameImage(source_, target, options_.render, &violation));
    } catch (const Error &e) {
        return error(500, e.what());
    }
    rendered_.fetch_add(1);

    Json j{{"frame_id", req.frameId},
           {"width", target.width()},
           {"height", target.height()},
           {"encoding", "png"},
           {"ordering_violation", violation},
           {"data", httplib::detail::base64_encode(std::string(png.begin(), png.end()))}};
    std::unique_lock lock(mutex_);
    delivered_.wait(lock, [&] { return *inFlight_.begin() == req.frameId; });
    flight.delivered = true;
    deliveredCount_.fetch_add(1);
    lock.unlock();
    return {200, "application/json", j.dump()};
}

struct HttpServer::Impl {
    FrameService &service;
    ServerOptions options;
    httplib::Server server;
    bool bound = false;

    Impl(FrameService &s, ServerOptions o) : service(s), options(std::move(o)) {}
};

HttpServer::HttpServer(FrameService &service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
    auto &srv = impl_->server;
    const int threads = std::max(impl_->options.threads, 3);
    srv.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    srv.set_payload_max_length(impl_->options.maxBodyBytes);
    auto reply = [](httplib::Response &res, const ServiceResponse &r) {
        res.status = r.status;
        res.set_content(r.body, r.contentType);
    };
    FrameService &svc = impl_->service;
    srv.Get("/health", [&svc, reply](const httplib::Request &, httplib::Response &res) { reply(res, svc.health()); });
    srv.Get("/meta", [&svc, reply](const httplib::Request &, httplib::Response &res) { reply(res, svc.meta()); });
    srv.Post("/frame", [&svc, reply](const httplib::Request &req, httplib::Response &res) {
        reply(res, svc.frame(req.body));
    });
    srv.set_error_handler([](const httplib::Request &, httplib::Response &res) {
        if (res.status == 413) {
            res.set_content(R"({"error":"request body too large"})", "application/json");
        } else if (res.body.empty()) {
            res.set_content(R"({"error":"not found"})", "application/json");
        }
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
    int port = 0;
    if (impl_->options.port == 0) {
        port = impl_->server.bind_to_any_port(impl_->options.host);
    } else if (impl_->server.bind_to_port(impl_->options.host, impl_->options.port)) {
        port = impl_->options.port;
    } else {
        port = -1;
    }
    if (port <= 0) {
        throw IoError("cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
    }
    impl_->bound = true;
    return port;
}

void HttpServer::serve() {
    if (!impl_->bound) {
        throw IoError("serve() called before bind()");
    }
    impl_->server.listen_after_bind();
}

void HttpServer::stop() {
    if (impl_->server.is_running()) {
        impl_->server.stop();
    }
}

} // namespace mdpano
