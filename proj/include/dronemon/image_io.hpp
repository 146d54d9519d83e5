#pragma once

#include <filesystem>
#include <stdexcept>

#include "dronemon/image.hpp"

namespace dronemon {

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Decodes a PNG or JPEG file (detected by signature). PNGs with alpha load
/// as RGBA, everything else as RGB.
ImageBuffer read_image(const std::filesystem::path& path);

/// Encodes `img` as an 8-bit RGB or RGBA PNG. Output bytes depend only on the
/// pixel data.
void write_png(const std::filesystem::path& path, const ImageBuffer& img);

}  // namespace dronemon
