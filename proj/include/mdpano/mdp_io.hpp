// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdpano/mdp.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mdpano {

/// MDP container, version 1. All integers and floats little-endian.
///
///   offset  size  field
///        0     4  magic "MDP1"
///        4     4  u32 format version (1)
///        8     4  u32 width W
///       12     4  u32 height H
///       16     4  u32 layer count M
///       20     8  f64 rho_min
///       28     8  f64 rho_max
///       36     4  u32 partition mode (0 radius, 1 inverse radius)
///       40     8  f64 v_fov_slope
///       48     P  payload: for m in 0..M-1, planes C.r, C.g, C.b, D, alpha, each W*H f32
///                 row-major with row 0 at the top
///     48+P     4  u32 CRC-32 of the payload
inline constexpr std::uint32_t kMdpFormatVersion = 1;
inline constexpr std::size_t kMdpHeaderBytes = 48;
inline constexpr std::size_t kMdpTrailerBytes = 4;

std::vector<std::uint8_t> encodeMdp(const Mdp &mdp);
/// Throws FormatVersionError, TruncatedFileError or ChecksumError.
Mdp decodeMdp(const std::vector<std::uint8_t> &bytes);

void mdpWrite(const Mdp &mdp, const std::filesystem::path &path);
Mdp mdpRead(const std::filesystem::path &path);

/// "W x H x M x 5" and the payload size in decimal gigabytes, e.g. for footprint reports.
std::string footprintLine(int width, int height, int layers);
double payloadGigabytes(int width, int height, int layers);

} // namespace mdpano
