#include "dronemon/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dronemon {

namespace {

void check_shape(int width, int height, int channels) {
    if (width <= 0 || height <= 0) {
        throw std::invalid_argument("ImageBuffer: dimensions must be positive, got " +
                                    std::to_string(width) + "x" + std::to_string(height));
    }
    if (channels != 3 && channels != 4) {
        throw std::invalid_argument("ImageBuffer: channels must be 3 or 4, got " +
                                    std::to_string(channels));
    }
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
    check_shape(width, height, channels);
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

ImageBuffer::ImageBuffer(int width, int height, int channels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    check_shape(width, height, channels);
    if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
        throw std::invalid_argument("ImageBuffer: data length does not match width*height*channels");
    }
}

std::vector<std::uint8_t> luma_plane(const ImageBuffer& img) {
    std::vector<std::uint8_t> out(img.pixel_count());
    const auto src = img.data();
    const int ch = img.channels();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::size_t p = i * ch;
        out[i] = static_cast<std::uint8_t>(luma(src[p], src[p + 1], src[p + 2]));
    }
    return out;
}

ImageBuffer to_rgb(const ImageBuffer& img) {
    if (img.channels() == 3) {
        return img;
    }
    ImageBuffer out(img.width(), img.height(), 3);
    const auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        dst[i * 3] = src[i * 4];
        dst[i * 3 + 1] = src[i * 4 + 1];
        dst[i * 3 + 2] = src[i * 4 + 2];
    }
    return out;
}

ImageBuffer resize_bilinear(const ImageBuffer& img, int width, int height) {
    if (img.empty()) {
        throw std::invalid_argument("resize_bilinear: empty input image");
    }
    if (width == img.width() && height == img.height()) {
        return img;
    }
    ImageBuffer out(width, height, img.channels());
    const int ch = img.channels();
    const double sx = static_cast<double>(img.width()) / width;
    const double sy = static_cast<double>(img.height()) / height;
    const int max_x = img.width() - 1;
    const int max_y = img.height() - 1;

    for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(max_y));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, max_y);
        const double wy = fy - y0;
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(max_x));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, max_x);
            const double wx = fx - x0;
            for (int c = 0; c < ch; ++c) {
                const double top = img.at(x0, y0, c) * (1.0 - wx) + img.at(x1, y0, c) * wx;
                const double bot = img.at(x0, y1, c) * (1.0 - wx) + img.at(x1, y1, c) * wx;
                const double v = top * (1.0 - wy) + bot * wy;
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return out;
}

ImageBuffer rescale_shorter_side(const ImageBuffer& img, int target) {
    if (target <= 0) {
        throw std::invalid_argument("rescale_shorter_side: target must be positive");
    }
    if (img.width() <= 0 || img.height() <= 0) {
        throw std::invalid_argument("rescale_shorter_side: degenerate input image");
    }
    const bool wide = img.width() >= img.height();
    const int shorter = wide ? img.height() : img.width();
    const int longer = wide ? img.width() : img.height();
    const int scaled_longer = std::max(
        1, static_cast<int>(std::lround(static_cast<double>(longer) * target / shorter)));
    return wide ? resize_bilinear(img, scaled_longer, target)
                : resize_bilinear(img, target, scaled_longer);
}

}  // namespace dronemon
