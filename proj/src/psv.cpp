// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#include "mdpano/psv.hpp"

#include "mdpano/error.hpp"
#include "mdpano/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace mdpano {

namespace {

// Sample positions this close to a pixel centre are treated as exactly on it.
constexpr double kSnap = 1e-9;

double snap(double v) {
    const double r = std::round(v);
    return std::abs(v - r) < kSnap ? r : v;
}

Mat3 intrinsicMatrix(const Intrinsics &k) {
    Mat3 m;
    m << k.fx, 0.0, k.cx, 0.0, k.fy, k.cy, 0.0, 0.0, 1.0;
    return m;
}

} // namespace

std::vector<int> nearestNeighbors(const CameraRig &rig, int view, int n) {
    const int k = static_cast<int>(rig.size());
    if (view < 0 || view >= k) {
        throw CalibrationError("reference view index out of range");
    }
    if (n < 0 || n >= k) {
        throw CalibrationError("neighbour count must be below the camera count");
    }
    const Vec3 axis = rig.cameras[view].extrinsics.forward();
    struct Entry {
        long long key;
        int index;
    };
    std::vector<Entry> entries;
    for (int i = 0; i < k; ++i) {
        if (i == view) {
            continue;
        }
        const double c = std::clamp(axis.dot(rig.cameras[i].extrinsics.forward()), -1.0, 1.0);
        // Quantised so that mirror-symmetric cameras tie exactly and fall back to index order.
        entries.push_back({std::llround(std::acos(c) * 1e9), i});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry &a, const Entry &b) {
        return a.key != b.key ? a.key < b.key : a.index < b.index;
    });
    std::vector<int> out;
    for (int i = 0; i < n; ++i) {
        out.push_back(entries[i].index);
    }
    return out;
}

std::vector<double> sweepDisparities(double nearDepth, double farDepth, int layerCount) {
    if (!(nearDepth > 0.0) || !(farDepth > nearDepth)) {
        throw NumericDegeneracyError("sweep range requires 0 < near < far");
    }
    if (layerCount < 2) {
        throw NumericDegeneracyError("sweep needs at least two layers");
    }
    const double lo = std::isinf(farDepth) ? 0.0 : 1.0 / farDepth;
    const double hi = 1.0 / nearDepth;
    std::vector<double> out(layerCount);
    for (int l = 0; l < layerCount; ++l) {
        out[l] = lo + (hi - lo) * l / (layerCount - 1);
    }
    return out;
}

Mat3 planeHomography(const Camera &ref, const Camera &neighbor, double disparity) {
    const Mat3 &rr = ref.extrinsics.rotation;
    const Mat3 &rn = neighbor.extrinsics.rotation;
    const Mat3 rel = rn * rr.transpose();
    const Vec3 trel = neighbor.extrinsics.translation - rel * ref.extrinsics.translation;
    Mat3 m = rel;
    m.col(2) += disparity * trel;
    return intrinsicMatrix(neighbor.intrinsics) * m * intrinsicMatrix(ref.intrinsics).inverse();
}

bool sampleBilinear(const ImageF &image, double x, double y, float *out) {
    const int w = image.width();
    const int h = image.height();
    x = snap(x);
    y = snap(y);
    if (!(x >= 0.0 && y >= 0.0 && x <= w - 1 && y <= h - 1)) {
        return false;
    }
    const int x0 = std::min(static_cast<int>(x), std::max(0, w - 2));
    const int y0 = std::min(static_cast<int>(y), std::max(0, h - 2));
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    for (int c = 0; c < image.channels(); ++c) {
        const double top = image.at(x0, y0, c) * (1.0 - fx) + (fx > 0.0 ? image.at(x1, y0, c) * fx : 0.0);
        const double bot = image.at(x0, y1, c) * (1.0 - fx) + (fx > 0.0 ? image.at(x1, y1, c) * fx : 0.0);
        out[c] = static_cast<float>(top * (1.0 - fy) + (fy > 0.0 ? bot * fy : 0.0));
    }
    return true;
}

Psv buildPsv(const CameraRig &rig, const std::vector<ImageF> &images, int view, const PsvParams &params) {
    if (images.size() != rig.size()) {
        throw DimensionMismatchError("one image per rig camera is required");
    }
    const Camera &ref = rig.cameras.at(view);
    const ImageF &refImage = images[view];
    if (refImage.width() != ref.intrinsics.width || refImage.height() != ref.intrinsics.height ||
        refImage.channels() != 3) {
        throw DimensionMismatchError("reference image does not match its intrinsics");
    }

    Psv psv;
    psv.refView = view;
    psv.neighbors = nearestNeighbors(rig, view, params.neighborCount);
    psv.disparities = sweepDisparities(params.nearDepth, params.farDepth, params.layerCount);
    psv.width = refImage.width();
    psv.height = refImage.height();
    psv.reference = refImage;
    if (psv.neighbors.empty()) {
        throw NumericDegeneracyError("plane sweep needs at least one neighbour");
    }

    const int nCount = psv.neighborCount();
    const int layers = psv.layerCount();
    const std::size_t samples = static_cast<std::size_t>(layers) * psv.height * psv.width;
    psv.volume.assign(samples * nCount * 3, 0.0f);
    psv.valid.assign(samples * nCount, 0);

    // Homographies are computed up front so degeneracies surface before any work is done.
    std::vector<Mat3> homographies(static_cast<std::size_t>(layers) * nCount);
    for (int l = 0; l < layers; ++l) {
        for (int n = 0; n < nCount; ++n) {
            const Camera &nb = rig.cameras[psv.neighbors[n]];
            const Vec3 nbCenterInRef = ref.extrinsics.apply(nb.extrinsics.center());
            if (std::abs(1.0 - psv.disparities[l] * nbCenterInRef.z()) < 1e-9) {
                throw NumericDegeneracyError("sweep plane of layer " + std::to_string(l) +
                                             " passes through the centre of camera " +
                                             std::to_string(psv.neighbors[n]));
            }
            const ImageF &img = images[psv.neighbors[n]];
            if (img.width() != nb.intrinsics.width || img.height() != nb.intrinsics.height || img.channels() != 3) {
                throw DimensionMismatchError("neighbour image does not match its intrinsics");
            }
            homographies[static_cast<std::size_t>(l) * nCount + n] = planeHomography(ref, nb, psv.disparities[l]);
        }
    }

    parallelFor(0, static_cast<std::size_t>(layers) * psv.height, [&](std::size_t job) {
        const int l = static_cast<int>(job / psv.height);
        const int y = static_cast<int>(job % psv.height);
        for (int n = 0; n < nCount; ++n) {
            const Mat3 &hm = homographies[static_cast<std::size_t>(l) * nCount + n];
            const ImageF &img = images[psv.neighbors[n]];
            for (int x = 0; x < psv.width; ++x) {
                const Vec3 q = hm * Vec3(x, y, 1.0);
                const std::size_t s = psv.sampleIndex(l, x, y);
                if (!(q.z() > 0.0)) {
                    continue;
                }
                float rgb[3];
                if (sampleBilinear(img, q.x() / q.z(), q.y() / q.z(), rgb)) {
                    float *dst = psv.volume.data() + (s * nCount + n) * 3;
                    dst[0] = rgb[0];
                    dst[1] = rgb[1];
                    dst[2] = rgb[2];
                    psv.valid[s * nCount + n] = 1;
                }
            }
        }
    });
    return psv;
}

Mpi PhotoconsistencyEstimator::estimate(const Psv &psv) const {
    const int layers = psv.layerCount();
    const int nCount = psv.neighborCount();
    const double invSigma2 = 1.0 / (params_.sigma0 * params_.sigma0);

    Mpi mpi;
    mpi.view = psv.refView;
    mpi.disparities = psv.disparities;
    mpi.layers.assign(layers, ImageF(psv.width, psv.height, 4, 0.0f));

    parallelFor(0, static_cast<std::size_t>(psv.height), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        std::vector<double> score(layers);
        std::vector<char> usable(layers);
        std::vector<double> mean(static_cast<std::size_t>(layers) * 3);
        for (int x = 0; x < psv.width; ++x) {
            const float *refRgb = &psv.reference.at(x, y, 0);
            double best = -std::numeric_limits<double>::infinity();
            for (int l = 0; l < layers; ++l) {
                const float *rgb = psv.colors(l, x, y);
                const std::uint8_t *ok = psv.validity(l, x, y);
                int count = 0;
                double sum[3] = {refRgb[0], refRgb[1], refRgb[2]};
                for (int n = 0; n < nCount; ++n) {
                    if (ok[n]) {
                        ++count;
                        for (int c = 0; c < 3; ++c) {
                            sum[c] += rgb[n * 3 + c];
                        }
                    }
                }
                usable[l] = count > 0;
                if (!usable[l]) {
                    continue;
                }
                const double inv = 1.0 / (count + 1);
                double var = 0.0;
                for (int c = 0; c < 3; ++c) {
                    const double mu = sum[c] * inv;
                    mean[l * 3 + c] = mu;
                    double acc = (refRgb[c] - mu) * (refRgb[c] - mu);
                    for (int n = 0; n < nCount; ++n) {
                        if (ok[n]) {
                            const double d = rgb[n * 3 + c] - mu;
                            acc += d * d;
                        }
                    }
                    var += acc * inv;
                }
                score[l] = -(var / 3.0) * invSigma2;
                best = std::max(best, score[l]);
            }
            if (!std::isfinite(best)) {
                continue; // no valid neighbour sample at any depth: transparent
            }
            double total = 0.0;
            for (int l = 0; l < layers; ++l) {
                score[l] = usable[l] ? std::exp(score[l] - best) : 0.0;
                total += score[l];
            }
            // Front-to-back: the nearest plane (highest index) is composited first.
            double remaining = 1.0;
            for (int l = layers - 1; l >= 0; --l) {
                const double weight = params_.alphaMin * score[l] / total;
                double alpha = remaining > 0.0 ? weight / remaining : 0.0;
                alpha = std::clamp(alpha, 0.0, 1.0);
                remaining -= weight;
                float *px = &mpi.layers[l].at(x, y, 0);
                if (usable[l]) {
                    for (int c = 0; c < 3; ++c) {
                        px[c] = static_cast<float>(std::clamp(mean[l * 3 + c], 0.0, 1.0));
                    }
                }
                px[3] = static_cast<float>(alpha);
            }
        }
    });
    return mpi;
}

Mpi estimateMpi(const Psv &psv, const MpiEstimator &estimator) {
    if (psv.layerCount() < 2 || psv.neighborCount() < 1 || psv.width < 1 || psv.height < 1) {
        throw NumericDegeneracyError("invalid plane-sweep volume");
    }
    Mpi mpi = estimator.estimate(psv);
    if (mpi.layerCount() != psv.layerCount() || mpi.width() != psv.width || mpi.height() != psv.height) {
        throw DimensionMismatchError("estimator returned an MPI of the wrong shape");
    }
    return mpi;
}

ImageF compositeMpi(const Mpi &mpi) {
    ImageF out(mpi.width(), mpi.height(), 4, 0.0f);
    for (std::size_t p = 0; p < out.pixelCount(); ++p) {
        double acc[4] = {0, 0, 0, 0};
        for (const ImageF &layer : mpi.layers) {
            const float *px = layer.data().data() + p * 4;
            const double a = px[3];
            for (int c = 0; c < 3; ++c) {
                acc[c] = px[c] * a + (1.0 - a) * acc[c];
            }
            acc[3] = a + (1.0 - a) * acc[3];
        }
        for (int c = 0; c < 4; ++c) {
            out.data()[p * 4 + c] = static_cast<float>(acc[c]);
        }
    }
    return out;
}

} // namespace mdpano
