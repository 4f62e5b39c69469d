// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#include "mdpano/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mdpano {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> gaussianKernel(int size) {
    std::vector<double> k(size);
    const int half = size / 2;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double x = i - half;
        k[i] = std::exp(-x * x / (2.0 * kSigma * kSigma));
        sum += k[i];
    }
    for (double &v : k) {
        v /= sum;
    }
    return k;
}

// Separable valid-mode filtering of a single-channel plane.
std::vector<double> filterValid(const std::vector<double> &plane, int w, int h, const std::vector<double> &k) {
    const int n = static_cast<int>(k.size());
    const int ow = w - n + 1;
    const int oh = h - n + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) {
                s += k[i] * plane[static_cast<std::size_t>(y) * w + x + i];
            }
            tmp[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) {
                s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            }
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    return out;
}

double ssimChannel(const ImageF &a, const ImageF &b, int channel, const std::vector<double> &k) {
    const int w = a.width();
    const int h = a.height();
    const std::size_t count = static_cast<std::size_t>(w) * h;
    std::vector<double> x(count), y(count), xx(count), yy(count), xy(count);
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            const std::size_t p = static_cast<std::size_t>(j) * w + i;
            x[p] = a.at(i, j, channel);
            y[p] = b.at(i, j, channel);
            xx[p] = x[p] * x[p];
            yy[p] = y[p] * y[p];
            xy[p] = x[p] * y[p];
        }
    }
    const auto mx = filterValid(x, w, h, k);
    const auto my = filterValid(y, w, h, k);
    const auto sxx = filterValid(xx, w, h, k);
    const auto syy = filterValid(yy, w, h, k);
    const auto sxy = filterValid(xy, w, h, k);
    double total = 0.0;
    for (std::size_t p = 0; p < mx.size(); ++p) {
        const double vx = sxx[p] - mx[p] * mx[p];
        const double vy = syy[p] - my[p] * my[p];
        const double cov = sxy[p] - mx[p] * my[p];
        total += ((2.0 * mx[p] * my[p] + kC1) * (2.0 * cov + kC2)) /
                 ((mx[p] * mx[p] + my[p] * my[p] + kC1) * (vx + vy + kC2));
    }
    return total / static_cast<double>(mx.size());
}

} // namespace

MetricsReport computeMetrics(const ImageF &rendered, const ImageF &groundTruth) {
    requireSameShape(rendered, groundTruth, "computeMetrics");
    MetricsReport report;
    const auto &a = rendered.data();
    const auto &b = groundTruth.data();
    if (a.empty()) {
        return report;
    }
    double abs = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        abs += std::abs(d);
        sq += d * d;
    }
    const double n = static_cast<double>(a.size());
    report.l1 = abs / n;
    const double mse = sq / n;
    report.psnr = mse > 0.0 ? std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse)) : kPsnrCap;

    int size = std::min({kWindow, rendered.width(), rendered.height()});
    if (size % 2 == 0) {
        --size;
    }
    const auto k = gaussianKernel(size);
    double ssim = 0.0;
    for (int c = 0; c < rendered.channels(); ++c) {
        ssim += ssimChannel(rendered, groundTruth, c, k);
    }
    report.ssim = ssim / rendered.channels();
    return report;
}

MetricsReport aggregateMetrics(std::span<const MetricsReport> frames) {
    MetricsReport out;
    if (frames.empty()) {
        return out;
    }
    out.psnr = out.ssim = out.l1 = 0.0;
    for (const auto &f : frames) {
        out.psnr += f.psnr;
        out.ssim += f.ssim;
        out.l1 += f.l1;
    }
    const double n = static_cast<double>(frames.size());
    out.psnr /= n;
    out.ssim /= n;
    out.l1 /= n;
    return out;
}

} // namespace mdpano
