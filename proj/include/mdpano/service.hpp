// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdpano/config_io.hpp"
#include "mdpano/mdp.hpp"
#include "mdpano/renderer.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <set>
#include <string>

namespace mdpano {

struct PoseRequest {
    PoseSpec pose;
    std::int64_t frameId = 0;
};

/// Parses a /frame request body. Malformed JSON, a non-unit quaternion or missing fields throw
/// ParseError.
PoseRequest parsePoseRequest(const std::string &body);

struct ServiceResponse {
    int status = 200;
    std::string contentType = "application/json";
    std::string body;
};

/// Transport-independent core of the HTTP service.
///
/// Frame ids: a request is rendered only if its id exceeds the latest delivered id and is not
/// already in flight, so every id is rendered at most once. Accepted frames are delivered in
/// increasing id order: a finished frame waits until every lower in-flight id has been delivered.
class FrameService {
public:
    struct Options {
        SoftZConfig render;
        int maxFramePixels = 4096 * 2048;
        int renderSlots = 4; ///< concurrent renders; further requests get 503
    };

    FrameService(Mdp mdp, Options options);

    /// GET /meta: dimensions, shell boundaries and radii, motion bound.
    ServiceResponse meta() const;
    /// POST /frame.
    ServiceResponse frame(const std::string &body);
    /// GET /health: never waits on rendering.
    ServiceResponse health() const;

    std::int64_t latestDelivered() const;
    std::uint64_t framesRendered() const { return rendered_.load(); }

    /// Rendering used by /frame and by the CLI: straight RGB over black, clamped to [0, 1].
    static ImageF frameImage(const RenderSource &source, const TargetCamera &target, const SoftZConfig &config,
                             bool *orderingViolation = nullptr);

private:
    ServiceResponse error(int status, const std::string &reason) const;

    Mdp mdp_;
    RenderSource source_;
    Options options_;
    double motionBound_ = 0.0;

    mutable std::mutex mutex_;
    std::condition_variable delivered_;
    std::set<std::int64_t> inFlight_;
    std::int64_t latestDelivered_;
    std::atomic<int> activeRenders_{0};
    std::atomic<std::uint64_t> rendered_{0};
    std::atomic<std::uint64_t> deliveredCount_{0};
};

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080; ///< 0 picks a free port
    int threads = 8; ///< HTTP worker threads; renders use at most threads - 2
    std::size_t maxBodyBytes = 64 * 1024;
};

/// HTTP/1.1 front end: GET /meta, POST /frame, GET /health.
class HttpServer {
public:
    HttpServer(FrameService &service, ServerOptions options);
    ~HttpServer();
    HttpServer(const HttpServer &) = delete;
    HttpServer &operator=(const HttpServer &) = delete;

    /// Binds the socket; returns the bound port. Throws IoError on failure.
    int bind();
    /// Serves until stop() is called. bind() must have succeeded.
    void serve();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace mdpano
