#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dronemon {

/// Dense row-major 8-bit raster, 3 (RGB) or 4 (RGBA) interleaved channels.
/// A default-constructed buffer is empty (0x0) and only useful as a placeholder.
class ImageBuffer {
public:
    ImageBuffer() = default;
    ImageBuffer(int width, int height, int channels, std::uint8_t fill = 0);
    ImageBuffer(int width, int height, int channels, std::vector<std::uint8_t> data);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool has_alpha() const { return channels_ == 4; }
    bool empty() const { return data_.empty(); }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

    std::uint8_t& at(int x, int y, int c) { return data_[index(x, y, c)]; }
    std::uint8_t at(int x, int y, int c) const { return data_[index(x, y, c)]; }

    std::span<std::uint8_t> data() { return data_; }
    std::span<const std::uint8_t> data() const { return data_; }

    bool operator==(const ImageBuffer&) const = default;

private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 3;
    std::vector<std::uint8_t> data_;
};

/// Integer luma, round(0.299 R + 0.587 G + 0.114 B), computed exactly.
inline int luma(int r, int g, int b) { return (299 * r + 587 * g + 114 * b + 500) / 1000; }

/// One luma sample per pixel, row-major.
std::vector<std::uint8_t> luma_plane(const ImageBuffer& img);

/// Copy of the RGB channels only.
ImageBuffer to_rgb(const ImageBuffer& img);

/// Bilinear resampling with pixel-center alignment and clamp-to-edge
/// borders. Same-size requests return an exact copy.
ImageBuffer resize_bilinear(const ImageBuffer& img, int width, int height);

/// Resize so the shorter side equals `target`; the longer side keeps the
/// aspect ratio, rounded to nearest (ties away from zero).
ImageBuffer rescale_shorter_side(const ImageBuffer& img, int target);

}  // namespace dronemon
