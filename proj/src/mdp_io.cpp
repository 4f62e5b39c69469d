// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#include "mdpano/mdp_io.hpp"

#include "mdpano/error.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace mdpano {

namespace {

constexpr char kMagic[4] = {'M', 'D', 'P', '1'};

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

template <typename T>
void put(std::vector<std::uint8_t> &out, T value) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T get(const std::vector<std::uint8_t> &in, std::size_t offset) {
    T value;
    std::memcpy(&value, in.data() + offset, sizeof(T));
    return value;
}

std::uint32_t crc(const std::uint8_t *data, std::size_t size) {
    uLong c = crc32(0L, Z_NULL, 0);
    while (size > 0) {
        const uInt chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
        c = crc32(c, data, chunk);
        data += chunk;
        size -= chunk;
    }
    return static_cast<std::uint32_t>(c);
}

} // namespace

std::vector<std::uint8_t> encodeMdp(const Mdp &mdp) {
    mdp.validate();
    const std::size_t pixels = static_cast<std::size_t>(mdp.mapping.width) * mdp.mapping.height;
    std::vector<std::uint8_t> out;
    out.reserve(kMdpHeaderBytes + mdp.payloadBytes() + kMdpTrailerBytes);
    out.insert(out.end(), kMagic, kMagic + 4);
    put<std::uint32_t>(out, kMdpFormatVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(mdp.mapping.width));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(mdp.mapping.height));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(mdp.layerCount()));
    put<double>(out, mdp.partition.rhoMin);
    put<double>(out, mdp.partition.rhoMax);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(mdp.partition.mode));
    put<double>(out, mdp.mapping.vFovSlope);

    const std::size_t payloadStart = out.size();
    std::vector<float> plane(pixels);
    auto appendPlane = [&] {
        const auto *raw = reinterpret_cast<const std::uint8_t *>(plane.data());
        out.insert(out.end(), raw, raw + pixels * sizeof(float));
    };
    for (const MdpLayer &layer : mdp.layers) {
        for (int c = 0; c < 3; ++c) {
            for (std::size_t p = 0; p < pixels; ++p) {
                plane[p] = layer.color.data()[p * 3 + c];
            }
            appendPlane();
        }
        std::copy(layer.depth.data().begin(), layer.depth.data().end(), plane.begin());
        appendPlane();
        std::copy(layer.alpha.data().begin(), layer.alpha.data().end(), plane.begin());
        appendPlane();
    }
    put<std::uint32_t>(out, crc(out.data() + payloadStart, out.size() - payloadStart));
    return out;
}

Mdp decodeMdp(const std::vector<std::uint8_t> &bytes) {
    if (bytes.size() < 8) {
        throw TruncatedFileError("MDP container shorter than its header");
    }
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatVersionError("not an MDP container (bad magic)");
    }
    const auto version = get<std::uint32_t>(bytes, 4);
    if (version != kMdpFormatVersion) {
        throw FormatVersionError("unsupported MDP format version " + std::to_string(version));
    }
    if (bytes.size() < kMdpHeaderBytes) {
        throw TruncatedFileError("MDP container shorter than its header");
    }
    Mdp mdp;
    mdp.mapping.width = static_cast<int>(get<std::uint32_t>(bytes, 8));
    mdp.mapping.height = static_cast<int>(get<std::uint32_t>(bytes, 12));
    const auto layers = get<std::uint32_t>(bytes, 16);
    mdp.partition.rhoMin = get<double>(bytes, 20);
    mdp.partition.rhoMax = get<double>(bytes, 28);
    const auto mode = get<std::uint32_t>(bytes, 36);
    mdp.mapping.vFovSlope = get<double>(bytes, 40);
    if (mode > 1) {
        throw FormatVersionError("unknown partition mode " + std::to_string(mode));
    }
    mdp.partition.mode = static_cast<PartitionMode>(mode);
    mdp.partition.count = static_cast<int>(layers);

    const std::uint64_t payload = mdpPayloadBytes(mdp.mapping.width, mdp.mapping.height, static_cast<int>(layers));
    if (bytes.size() < kMdpHeaderBytes + payload + kMdpTrailerBytes) {
        throw TruncatedFileError("MDP container truncated: expected " +
                                 std::to_string(kMdpHeaderBytes + payload + kMdpTrailerBytes) + " bytes, got " +
                                 std::to_string(bytes.size()));
    }
    if (bytes.size() > kMdpHeaderBytes + payload + kMdpTrailerBytes) {
        throw FormatVersionError("trailing bytes after MDP container");
    }
    const std::uint32_t stored = get<std::uint32_t>(bytes, kMdpHeaderBytes + payload);
    if (stored != crc(bytes.data() + kMdpHeaderBytes, payload)) {
        throw ChecksumError("MDP payload checksum mismatch");
    }

    const std::size_t pixels = static_cast<std::size_t>(mdp.mapping.width) * mdp.mapping.height;
    std::size_t offset = kMdpHeaderBytes;
    auto readPlane = [&](float *dst, std::size_t stride) {
        for (std::size_t p = 0; p < pixels; ++p) {
            std::memcpy(dst + p * stride, bytes.data() + offset + p * sizeof(float), sizeof(float));
        }
        offset += pixels * sizeof(float);
    };
    for (std::uint32_t m = 0; m < layers; ++m) {
        MdpLayer layer(static_cast<int>(m), mdp.mapping.width, mdp.mapping.height);
        for (int c = 0; c < 3; ++c) {
            readPlane(layer.color.data().data() + c, 3);
        }
        readPlane(layer.depth.data().data(), 1);
        readPlane(layer.alpha.data().data(), 1);
        mdp.layers.push_back(std::move(layer));
    }
    mdp.validate();
    return mdp;
}

void mdpWrite(const Mdp &mdp, const std::filesystem::path &path) {
    const std::vector<std::uint8_t> bytes = encodeMdp(mdp);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    f.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) {
        throw IoError("short write to " + path.string());
    }
}

Mdp mdpRead(const std::filesystem::path &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decodeMdp(bytes);
}

double payloadGigabytes(int width, int height, int layers) {
    return static_cast<double>(mdpPayloadBytes(width, height, layers)) / 1e9;
}

std::string footprintLine(int width, int height, int layers) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(3);
    s << "Dimension " << width << " x " << height << " x " << layers << " x 5  Storage "
      << payloadGigabytes(width, height, layers) << "GB (" << mdpPayloadBytes(width, height, layers) << " bytes)";
    return s.str();
}

} // namespace mdpano
