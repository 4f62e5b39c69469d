// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: build, render, eval, serve, plus helpers to synthesise inputs.

#include "mdpano/config_io.hpp"
#include "mdpano/error.hpp"
#include "mdpano/experiments.hpp"
#include "mdpano/image_io.hpp"
#include "mdpano/mdp_io.hpp"
#include "mdpano/parallel.hpp"
#include "mdpano/service.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>

namespace fs = std::filesystem;
using namespace mdpano;

namespace {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kCalibration = 2,
    kIo = 3,
    kFormat = 4,
    kFailure = 5,
};

/// Error tagged with the pipeline stage that raised it.
struct StageError {
    std::string stage;
    int code;
    std::string message;
};

template <typename F> auto stage(const std::string &name, F &&fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const CalibrationError &e) {
        throw StageError{name, kCalibration, e.what()};
    } catch (const IoError &e) {
        throw StageError{name, kIo, e.what()};
    } catch (const fs::filesystem_error &e) {
        throw StageError{name, kIo, e.what()};
    } catch (const ParseError &e) {
        throw StageError{name, kFormat, e.what()};
    } catch (const FormatVersionError &e) {
        throw StageError{name, kFormat, e.what()};
    } catch (const TruncatedFileError &e) {
        throw StageError{name, kFormat, e.what()};
    } catch (const ChecksumError &e) {
        throw StageError{name, kFormat, e.what()};
    } catch (const std::exception &e) {
        throw StageError{name, kFailure, e.what()};
    }
}

AppConfig configOrDefault(const std::string &path) {
    return path.empty() ? AppConfig{} : stage("load config", [&] { return loadConfig(path); });
}

std::vector<fs::path> imageFiles(const fs::path &dir) {
    if (!fs::is_directory(dir)) {
        throw IoError("image directory " + dir.string() + " does not exist");
    }
    std::vector<fs::path> files;
    for (const auto &entry : fs::directory_iterator(dir)) {
        const std::string ext = entry.path().extension().string();
        if (entry.is_regular_file() && (ext == ".png" || ext == ".exr")) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::string indexed(const std::string &prefix, std::size_t i, const std::string &ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04zu", i);
    return prefix + buf + ext;
}

// --- build -----------------------------------------------------------------------------------

struct BuildArgs {
    std::string rig, images, config, out;
};

int runBuild(const BuildArgs &a) {
    const AppConfig config = configOrDefault(a.config);
    setWorkerCount(config.threads);
    const CameraRig rig = stage("load rig", [&] { return loadRig(a.rig); });
    const std::vector<ImageF> images = stage("load images", [&] {
        std::vector<ImageF> out;
        for (const fs::path &p : imageFiles(a.images)) {
            out.push_back(loadImage(p));
        }
        if (out.size() != rig.size()) {
            throw CalibrationError("found " + std::to_string(out.size()) + " images for " +
                                   std::to_string(rig.size()) + " cameras");
        }
        for (std::size_t v = 0; v < out.size(); ++v) {
            const Intrinsics &k = rig.cameras[v].intrinsics;
            if (out[v].width() != k.width || out[v].height() != k.height) {
                throw CalibrationError("image " + std::to_string(v) + " does not match its camera resolution");
            }
        }
        return out;
    });
    const Mdp mdp = stage("build", [&] { return buildGlobalMdp(rig, images, config.pipeline); });
    stage("write", [&] { mdpWrite(mdp, a.out); });
    std::cout << footprintLine(mdp.mapping.width, mdp.mapping.height, mdp.layerCount()) << "\n";
    return kOk;
}

// --- render ----------------------------------------------------------------------------------

struct RenderArgs {
    std::string mdp, poses, config, out;
    int orbit = 0;
    double orbitRadius = 0.1;
    std::string format = "png";
};

int runRender(const RenderArgs &a) {
    const AppConfig config = configOrDefault(a.config);
    setWorkerCount(config.threads);
    const Mdp mdp = stage("load mdp", [&] { return mdpRead(a.mdp); });
    std::vector<TargetCamera> targets = stage("load poses", [&] {
        std::vector<TargetCamera> out;
        if (!a.poses.empty()) {
            for (const PoseSpec &p : loadPoses(a.poses)) {
                out.push_back(p.target(mdp.mapping));
            }
        } else {
            out = orbitPoses(TargetCamera::panorama(mdp.mapping, Extrinsics::identity()), a.orbit, a.orbitRadius);
        }
        return out;
    });
    stage("write", [&] { fs::create_directories(a.out); });
    const RenderSource source = RenderSource::fromMdp(mdp);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        bool violation = false;
        const ImageF rgb = stage("render", [&] {
            return FrameService::frameImage(source, targets[i], config.render, &violation);
        });
        if (violation) {
            std::cerr << "note: frame " << i << " is outside the motion bound; layer ordering may be wrong\n";
        }
        const fs::path path = fs::path(a.out) / indexed("frame_", i, "." + a.format);
        stage("write", [&] { saveImage(rgb, path); });
        std::cout << path.string() << "\n";
    }
    return kOk;
}

// --- eval ------------------------------------------------------------------------------------

struct EvalArgs {
    std::string scene, config, out;
    bool standard = false;
};

int runEval(const EvalArgs &a) {
    const AppConfig config = a.config.empty() ? deskEvalConfig() : stage("load config", [&] { return loadConfig(a.config); });
    setWorkerCount(config.threads);
    const SyntheticScene scene =
        a.scene.empty() ? standardScene() : stage("load scene", [&] { return loadScene(a.scene); });
    const CameraRig rig = stage("rig", [&] { return config.rig.build(); });
    const auto targets = randomPanoramaTargets(config.pipeline.mdp.mapping, config.eval.poseCount,
                                               config.eval.targetRadius, config.eval.seed);
    const ExperimentTable layers = stage("layer sweep", [&] {
        return layerSweepExperiment(scene, rig, config.pipeline, config.eval.layerCounts, targets, config.render);
    });
    const auto dirs = randomHorizontalDirections(config.eval.poseCount, config.eval.seed + 1);
    const ExperimentTable disparity = stage("disparity sweep", [&] {
        return disparitySweepExperiment(scene, rig, config.pipeline, config.eval.translations, dirs, config.render);
    });
    std::cout << layers.toJson() << "\n" << disparity.toJson() << "\n";
    if (!a.out.empty()) {
        stage("write", [&] {
            fs::create_directories(a.out);
            writeTextFile(fs::path(a.out) / "layer_sweep.json", layers.toJson() + "\n");
            writeTextFile(fs::path(a.out) / "disparity_sweep.json", disparity.toJson() + "\n");
        });
    }
    return kOk;
}

// --- serve -----------------------------------------------------------------------------------

HttpServer *gServer = nullptr;

extern "C" void onSignal(int) {
    if (gServer) {
        gServer->stop();
    }
}

struct ServeArgs {
    std::string mdp, config, host = "127.0.0.1";
    int port = 8080;
    int threads = 8;
};

int runServe(const ServeArgs &a) {
    const AppConfig config = configOrDefault(a.config);
    setWorkerCount(config.threads);
    Mdp mdp = stage("load mdp", [&] { return mdpRead(a.mdp); });
    FrameService::Options opts;
    opts.render = config.render;
    opts.maxFramePixels = config.maxFramePixels;
    opts.renderSlots = std::max(1, a.threads - 2);
    FrameService service(std::move(mdp), opts);
    HttpServer server(service, {a.host, a.port, a.threads});
    const int port = stage("bind", [&] { return server.bind(); });
    gServer = &server;
    std::signal(SIGINT, onSignal);
    std::signal(SIGTERM, onSignal);
    std::cout << "listening on http://" << a.host << ":" << port << std::endl;
    server.serve();
    gServer = nullptr;
    return kOk;
}

// --- helpers ---------------------------------------------------------------------------------

struct SynthArgs {
    std::string scene, config, out;
    std::string format = "exr";
};

int runSynth(const SynthArgs &a) {
    const AppConfig config = a.config.empty() ? deskEvalConfig() : stage("load config", [&] { return loadConfig(a.config); });
    setWorkerCount(config.threads);
    const SyntheticScene scene =
        a.scene.empty() ? standardScene() : stage("load scene", [&] { return loadScene(a.scene); });
    const CameraRig rig = stage("rig", [&] { return config.rig.build(); });
    const auto views = stage("ray cast", [&] { return renderRigViews(scene, rig); });
    stage("write", [&] {
        const fs::path dir = fs::path(a.out) / "images";
        fs::create_directories(dir);
        writeTextFile(fs::path(a.out) / "rig.json", rigToJson(rig));
        writeTextFile(fs::path(a.out) / "config.json", configToJson(config));
        writeTextFile(fs::path(a.out) / "scene.json", sceneToJson(scene));
        for (std::size_t v = 0; v < views.size(); ++v) {
            saveImage(views[v], dir / indexed("view_", v, "." + a.format));
        }
    });
    std::cout << "wrote " << views.size() << " views to " << a.out << "\n";
    return kOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"mdpano: multi depth panorama builder, renderer and frame server"};
    app.require_subcommand(1);

    BuildArgs build;
    auto *cBuild = app.add_subcommand("build", "Build a global MDP from calibrated ring images");
    cBuild->add_option("--rig", build.rig, "Rig calibration JSON")->required();
    cBuild->add_option("--images", build.images, "Directory of view images (sorted by name)")->required();
    cBuild->add_option("--config", build.config, "Configuration JSON");
    cBuild->add_option("--out", build.out, "Output .mdp file")->required();

    RenderArgs render;
    auto *cRender = app.add_subcommand("render", "Render novel views from an MDP");
    cRender->add_option("--mdp", render.mdp, "Input .mdp file")->required();
    auto *poses = cRender->add_option("--poses", render.poses, "Pose list JSON");
    auto *orbit = cRender->add_option("--orbit", render.orbit, "Number of orbit frames")->check(CLI::PositiveNumber);
    poses->excludes(orbit);
    cRender->add_option("--orbit-radius", render.orbitRadius, "Orbit radius in metres");
    cRender->add_option("--config", render.config, "Configuration JSON");
    cRender->add_option("--out", render.out, "Output directory")->required();
    cRender->add_option("--format", render.format, "png or exr")->check(CLI::IsMember({"png", "exr"}));

    EvalArgs eval;
    auto *cEval = app.add_subcommand("eval", "Run the layer-count and translation sweeps");
    cEval->add_option("--scene", eval.scene, "Scene JSON (default: built-in standard scene)");
    cEval->add_option("--config", eval.config, "Configuration JSON (default: desk evaluation settings)");
    cEval->add_option("--out", eval.out, "Directory for JSON tables");

    ServeArgs serve;
    auto *cServe = app.add_subcommand("serve", "Serve frames over HTTP");
    cServe->add_option("--mdp", serve.mdp, "Input .mdp file")->required();
    cServe->add_option("--config", serve.config, "Configuration JSON");
    cServe->add_option("--host", serve.host, "Bind address");
    cServe->add_option("--port", serve.port, "Port (0 = any free port)");
    cServe->add_option("--http-threads", serve.threads, "HTTP worker threads")->check(CLI::Range(3, 256));

    SynthArgs synth;
    auto *cSynth = app.add_subcommand("synth", "Ray-cast rig images, rig and config files for a synthetic scene");
    cSynth->add_option("--scene", synth.scene, "Scene JSON (default: built-in standard scene)");
    cSynth->add_option("--config", synth.config, "Configuration JSON (default: desk evaluation settings)");
    cSynth->add_option("--out", synth.out, "Output directory")->required();
    cSynth->add_option("--format", synth.format, "png or exr")->check(CLI::IsMember({"png", "exr"}));

    bool desk = false;
    auto *cConfig = app.add_subcommand("config", "Print a configuration file with every default");
    cConfig->add_flag("--desk", desk, "Print the desk evaluation settings");

    int fw = 2560, fh = 640, fm = 5;
    auto *cFoot = app.add_subcommand("footprint", "Print the storage footprint of an MDP layout");
    cFoot->add_option("--width", fw)->check(CLI::PositiveNumber);
    cFoot->add_option("--height", fh)->check(CLI::PositiveNumber);
    cFoot->add_option("--layers", fm)->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        if (*cBuild) {
            return runBuild(build);
        }
        if (*cRender) {
            if (render.poses.empty() && render.orbit == 0) {
                std::cerr << "mdpano render: one of --poses or --orbit is required\n";
                return kUsage;
            }
            return runRender(render);
        }
        if (*cEval) {
            return runEval(eval);
        }
        if (*cServe) {
            return runServe(serve);
        }
        if (*cSynth) {
            return runSynth(synth);
        }
        if (*cConfig) {
            std::cout << configToJson(desk ? deskEvalConfig() : AppConfig{});
            return kOk;
        }
        if (*cFoot) {
            std::cout << footprintLine(fw, fh, fm) << "\n";
            return kOk;
        }
    } catch (const StageError &e) {
        std::cerr << "mdpano " << name << ": " << e.stage << ": " << e.message << "\n";
        return e.code;
    } catch (const std::exception &e) {
        std::cerr << "mdpano " << name << ": " << e.what() << "\n";
        return kFailure;
    }
    return kUsage;
}
