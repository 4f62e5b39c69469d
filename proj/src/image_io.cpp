// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#include "mdpano/image_io.hpp"

#include "mdpano/error.hpp"

#include <ImfChannelList.h>
#include <ImfFrameBuffer.h>
#include <ImfHeader.h>
#include <ImfInputFile.h>
#include <ImfOutputFile.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace mdpano {

float srgbToLinear(float v) {
    return v <= 0.04045f ? v / 12.92f : std::pow((v + 0.055f) / 1.055f, 2.4f);
}

float linearToSrgb(float v) {
    v = std::clamp(v, 0.0f, 1.0f);
    return v <= 0.0031308f ? v * 12.92f : 1.055f * std::pow(v, 1.0f / 2.4f) - 0.055f;
}

namespace {

struct PngReadState {
    const std::vector<std::uint8_t> *bytes;
    std::size_t offset;
};

void readCallback(png_structp png, png_bytep out, png_size_t length) {
    auto *st = static_cast<PngReadState *>(png_get_io_ptr(png));
    if (st->offset + length > st->bytes->size()) {
        png_error(png, "unexpected end of PNG data");
    }
    std::memcpy(out, st->bytes->data() + st->offset, length);
    st->offset += length;
}

void writeCallback(png_structp png, png_bytep data, png_size_t length) {
    auto *out = static_cast<std::vector<std::uint8_t> *>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void flushCallback(png_structp) {}

[[noreturn]] void pngError(png_structp, png_const_charp msg) { throw IoError(std::string("PNG: ") + msg); }

void pngWarning(png_structp, png_const_charp) {}

std::vector<std::uint8_t> readFile(const std::filesystem::path &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

} // namespace

ImageF decodePng(const std::vector<std::uint8_t> &bytes, bool srgb) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        throw IoError("not a PNG stream");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, pngError, pngWarning);
    png_infop info = png_create_info_struct(png);
    PngReadState st{&bytes, 0};
    ImageF out;
    try {
        png_set_read_fn(png, &st, readCallback);
        png_read_info(png, info);
        const int w = static_cast<int>(png_get_image_width(png, info));
        const int h = static_cast<int>(png_get_image_height(png, info));
        const int colorType = png_get_color_type(png, info);
        const int depth = png_get_bit_depth(png, info);
        if (colorType == PNG_COLOR_TYPE_PALETTE) {
            png_set_palette_to_rgb(png);
        }
        if (colorType == PNG_COLOR_TYPE_GRAY && depth < 8) {
            png_set_expand_gray_1_2_4_to_8(png);
        }
        if (png_get_valid(png, info, PNG_INFO_tRNS)) {
            png_set_tRNS_to_alpha(png);
        }
        if (colorType == PNG_COLOR_TYPE_GRAY || colorType == PNG_COLOR_TYPE_GRAY_ALPHA) {
            png_set_gray_to_rgb(png);
        }
        if (depth == 16) {
            png_set_swap(png);
        }
        png_read_update_info(png, info);
        const int channels = png_get_channels(png, info);
        const int outDepth = png_get_bit_depth(png, info);
        const std::size_t rowBytes = png_get_rowbytes(png, info);
        std::vector<std::uint8_t> raw(rowBytes * h);
        std::vector<png_bytep> rows(h);
        for (int y = 0; y < h; ++y) {
            rows[y] = raw.data() + y * rowBytes;
        }
        png_read_image(png, rows.data());
        out = ImageF(w, h, 3);
        const float scale = outDepth == 16 ? 1.0f / 65535.0f : 1.0f / 255.0f;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < 3; ++c) {
                    float v;
                    if (outDepth == 16) {
                        std::uint16_t s;
                        std::memcpy(&s, rows[y] + (x * channels + c) * 2, 2);
                        v = s * scale;
                    } else {
                        v = rows[y][x * channels + c] * scale;
                    }
                    out.at(x, y, c) = srgb ? srgbToLinear(v) : v;
                }
            }
        }
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

ImageF loadPng(const std::filesystem::path &path, bool srgb) { return decodePng(readFile(path), srgb); }

std::vector<std::uint8_t> encodePng(const ImageF &image, bool srgb) {
    if (image.channels() != 3 && image.channels() != 4) {
        throw DimensionMismatchError("PNG output needs 3 or 4 channels");
    }
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, pngError, pngWarning);
    png_infop info = png_create_info_struct(png);
    try {
        png_set_write_fn(png, &out, writeCallback, flushCallback);
        const int ch = image.channels();
        png_set_IHDR(png, info, image.width(), image.height(), 8, ch == 4 ? PNG_COLOR_TYPE_RGBA : PNG_COLOR_TYPE_RGB,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        std::vector<std::uint8_t> row(static_cast<std::size_t>(image.width()) * ch);
        for (int y = 0; y < image.height(); ++y) {
            for (int x = 0; x < image.width(); ++x) {
                for (int c = 0; c < ch; ++c) {
                    float v = std::clamp(image.at(x, y, c), 0.0f, 1.0f);
                    if (srgb && c < 3) {
                        v = linearToSrgb(v);
                    }
                    row[x * ch + c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
                }
            }
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

void savePng(const ImageF &image, const std::filesystem::path &path, bool srgb) {
    const std::vector<std::uint8_t> bytes = encodePng(image, srgb);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    f.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) {
        throw IoError("short write to " + path.string());
    }
}

void saveExr(const ImageF &image, const std::filesystem::path &path) {
    const int ch = image.channels();
    if (ch != 3 && ch != 4) {
        throw DimensionMismatchError("EXR output needs 3 or 4 channels");
    }
    static const char *names[4] = {"R", "G", "B", "A"};
    try {
        Imf::Header header(image.width(), image.height());
        for (int c = 0; c < ch; ++c) {
            header.channels().insert(names[c], Imf::Channel(Imf::FLOAT));
        }
        Imf::OutputFile file(path.string().c_str(), header);
        Imf::FrameBuffer fb;
        auto *base = const_cast<char *>(reinterpret_cast<const char *>(image.data().data()));
        for (int c = 0; c < ch; ++c) {
            fb.insert(names[c], Imf::Slice(Imf::FLOAT, base + c * sizeof(float), sizeof(float) * ch,
                                           sizeof(float) * ch * image.width()));
        }
        file.setFrameBuffer(fb);
        file.writePixels(image.height());
    } catch (const std::exception &e) {
        throw IoError(std::string("EXR: ") + e.what());
    }
}

ImageF loadExr(const std::filesystem::path &path) {
    try {
        Imf::InputFile file(path.string().c_str());
        const auto dw = file.header().dataWindow();
        const int w = dw.max.x - dw.min.x + 1;
        const int h = dw.max.y - dw.min.y + 1;
        ImageF out(w, h, 3);
        Imf::FrameBuffer fb;
        static const char *names[3] = {"R", "G", "B"};
        char *base = reinterpret_cast<char *>(out.data().data()) -
                     (static_cast<std::ptrdiff_t>(dw.min.y) * w + dw.min.x) * 3 * static_cast<std::ptrdiff_t>(sizeof(float));
        for (int c = 0; c < 3; ++c) {
            fb.insert(names[c], Imf::Slice(Imf::FLOAT, base + c * sizeof(float), sizeof(float) * 3, sizeof(float) * 3 * w));
        }
        file.setFrameBuffer(fb);
        file.readPixels(dw.min.y, dw.max.y);
        return out;
    } catch (const std::exception &e) {
        throw IoError(std::string("EXR: ") + e.what());
    }
}

ImageF loadImage(const std::filesystem::path &path, bool srgb) {
    const std::string ext = path.extension().string();
    if (ext == ".exr" || ext == ".EXR") {
        return loadExr(path);
    }
    return loadPng(path, srgb);
}

void saveImage(const ImageF &image, const std::filesystem::path &path, bool srgb) {
    const std::string ext = path.extension().string();
    if (ext == ".exr" || ext == ".EXR") {
        saveExr(image, path);
    } else {
        savePng(image, path, srgb);
    }
}

} // namespace mdpano
