#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dronemon/augment.hpp"
#include "dronemon/geometry.hpp"
#include "dronemon/image.hpp"
#include "dronemon/scored_box.hpp"

namespace dronemon {

class PluginError : public std::runtime_error {
public:
    enum class Kind {
        protocol_violation,
        timeout,
        child_exited,
        remote_error,
        startup_failure,
        not_initialized,
        invalid_input,
    };

    PluginError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

const char* to_string(PluginError::Kind kind);

/// Returns candidate boxes sorted by descending score, clipped to the image.
/// `roi`, when given, restricts the search to that region.
class Detector {
public:
    virtual ~Detector() = default;
    virtual std::vector<ScoredBox> detect(const ImageBuffer& image,
                                          const std::optional<BBox>& roi) = 0;
};

/// Single-target tracker. update() before init() throws PluginError
/// (not_initialized); every update yields exactly one box.
class Tracker {
public:
    virtual ~Tracker() = default;
    virtual BBox init(const ImageBuffer& image, const BBox& box) = 0;
    virtual ScoredBox update(const ImageBuffer& image) = 0;
};

/// Masked normalized cross-correlation of two equally sized luma patches.
/// Returns 0 when either side has zero variance.
double masked_ncc(std::span<const double> a, std::span<const double> b);

struct TemplateDetectorOptions {
    int stride = 1;
    std::vector<double> scales{1.0};
    std::size_t top_k = 5;
    double nms_iou = 0.5;
};

/// Sliding-window NCC on luma against the opaque pixels of each template.
/// Windows are scanned on a `stride` grid and the best peaks refined at 1 px.
class TemplateDetector final : public Detector {
public:
    TemplateDetector(std::vector<ForegroundAsset> templates, TemplateDetectorOptions options = {});

    std::vector<ScoredBox> detect(const ImageBuffer& image,
                                  const std::optional<BBox>& roi) override;

private:
    struct Pattern {
        int width = 0;
        int height = 0;
        std::vector<int> offsets_x;
        std::vector<int> offsets_y;
        std::vector<double> centered;  ///< template luma minus its mean
        double norm = 0.0;             ///< sqrt of the centered sum of squares
    };

    double score_at(const Pattern& p, const std::vector<std::uint8_t>& luma, int stride_w, int x,
                    int y) const;

    std::vector<Pattern> patterns_;
    TemplateDetectorOptions options_;
};

struct BlobTrackerOptions {
    int threshold = 20;         ///< residual luma must exceed this
    double search_factor = 2.0;  ///< search region side relative to the box
};

/// Follows the largest thresholded blob of a residual image near the last box.
class ResidualBlobTracker final : public Tracker {
public:
    explicit ResidualBlobTracker(BlobTrackerOptions options = {}) : options_(options) {}

    BBox init(const ImageBuffer& image, const BBox& box) override;
    ScoredBox update(const ImageBuffer& residual) override;

    const std::optional<BBox>& box() const { return box_; }

private:
    BlobTrackerOptions options_;
    std::optional<BBox> box_;
};

/// Drops boxes entirely outside the frame, clips the rest, and sorts by
/// descending score (stable).
std::vector<ScoredBox> clip_and_sort(std::vector<ScoredBox> boxes, int width, int height);

}  // namespace dronemon
