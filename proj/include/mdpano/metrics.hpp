// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdpano/image.hpp"

#include <span>

namespace mdpano {

/// PSNR reported for identical images (the true value is +inf).
inline constexpr double kPsnrCap = 99.0;

struct MetricsReport {
    double psnr = kPsnrCap; ///< dB, peak value 1, capped at kPsnrCap
    double ssim = 1.0;
    double l1 = 0.0; ///< mean absolute error over all pixels and channels
};

/// PSNR, SSIM and L1 of two images with values in [0, 1] and identical shape.
///
/// SSIM uses an 11x11 Gaussian window (sigma 1.5), k1 = 0.01, k2 = 0.03, evaluated at every
/// window position fully inside the image and averaged over positions and channels. Images smaller
/// than the window use the largest odd window that fits.
MetricsReport computeMetrics(const ImageF &rendered, const ImageF &groundTruth);

/// Mean of each metric over frames.
MetricsReport aggregateMetrics(std::span<const MetricsReport> frames);

} // namespace mdpano
