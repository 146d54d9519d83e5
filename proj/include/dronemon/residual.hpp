#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "dronemon/image.hpp"

namespace dronemon {

class ResidualError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Integer global translation: the current frame matches the previous frame
/// moved by (dx, dy), i.e. cur(x, y) ~ prev(x - dx, y - dy).
struct TranslationEstimate {
    int dx = 0;
    int dy = 0;
    std::uint64_t sad = 0;         ///< luma SAD over the overlap at the optimum
    std::uint64_t overlap = 0;     ///< pixel count of that overlap

    bool operator==(const TranslationEstimate&) const = default;
};

/// Exhaustive search over [-window, window]^2 minimizing the mean luma SAD of
/// the overlapping region. Ties go to smaller |dx|+|dy|, then smaller dy, then
/// smaller dx.
TranslationEstimate estimate_translation(const ImageBuffer& prev, const ImageBuffer& cur,
                                         int window);

/// Moves `img` by (dx, dy) with clamp-to-edge fill; dimensions are unchanged.
ImageBuffer shift_image(const ImageBuffer& img, int dx, int dy);

/// Per-channel |cur - prev| (RGB). With `compensate`, prev is first aligned by
/// the estimated translation.
ImageBuffer residual_frame(const ImageBuffer& prev, const ImageBuffer& cur, bool compensate,
                           int window);

/// Residuals of a frame sequence; the first frame pairs with itself.
std::vector<ImageBuffer> residual_frames(const std::vector<ImageBuffer>& frames, bool compensate,
                                         int window);

/// Sorted list of numbered PNG frames (NNNNNN.png) in a directory.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir);

/// Reads numbered frames from `frames_dir` and writes one residual per frame,
/// same names, into `out_dir`. Returns the frame count.
std::size_t residual_sequence(const std::filesystem::path& frames_dir, bool compensate, int window,
                              const std::filesystem::path& out_dir);

}  // namespace dronemon
