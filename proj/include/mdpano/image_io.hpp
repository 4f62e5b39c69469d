// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdpano/image.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace mdpano {

float srgbToLinear(float v);
float linearToSrgb(float v);

/// Loads an 8- or 16-bit PNG (grey, grey+alpha, RGB, RGBA) as linear RGB in [0,1]; alpha is
/// dropped. `srgb` selects the sRGB decoding curve.
ImageF loadPng(const std::filesystem::path &path, bool srgb = true);

/// Encodes RGB or RGBA float data in [0,1] as 8-bit PNG, optionally applying the sRGB curve to
/// colour channels.
std::vector<std::uint8_t> encodePng(const ImageF &image, bool srgb = true);
ImageF decodePng(const std::vector<std::uint8_t> &bytes, bool srgb = true);
void savePng(const ImageF &image, const std::filesystem::path &path, bool srgb = true);

/// Float32 OpenEXR with R, G, B (and A for four-channel images).
void saveExr(const ImageF &image, const std::filesystem::path &path);
ImageF loadExr(const std::filesystem::path &path);

/// Dispatches on the extension: .png or .exr.
ImageF loadImage(const std::filesystem::path &path, bool srgb = true);
void saveImage(const ImageF &image, const std::filesystem::path &path, bool srgb = true);

} // namespace mdpano
