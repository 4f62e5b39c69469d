// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdpano/error.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mdpano {

/// Interleaved multi-channel image, row-major, row 0 at the top.
template <typename T>
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels, T fill = T{})
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<std::size_t>(width) * height * channels, fill) {
        if (width < 0 || height < 0 || channels < 1) {
            throw DimensionMismatchError("invalid image dimensions");
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t pixelCount() const { return static_cast<std::size_t>(width_) * height_; }
    bool empty() const { return data_.empty(); }

    std::size_t index(int x, int y, int c = 0) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    T &at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
    const T &at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

    std::span<T> pixel(int x, int y) { return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)}; }
    std::span<const T> pixel(int x, int y) const {
        return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)};
    }

    std::vector<T> &data() { return data_; }
    const std::vector<T> &data() const { return data_; }

    bool sameShape(const Image &other) const {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }

    friend bool operator==(const Image &, const Image &) = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<T> data_;
};

using ImageF = Image<float>;
using ImageD = Image<double>;

inline void requireSameShape(const auto &a, const auto &b, const std::string &what) {
    if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels()) {
        throw DimensionMismatchError(what + ": image dimensions differ");
    }
}

} // namespace mdpano
