#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dronemon/geometry.hpp"
#include "dronemon/scored_box.hpp"

namespace dronemon {

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Intersection over union; 0 for disjoint boxes.
double iou(const BBox& a, const BBox& b);

enum class CurveKind { precision_recall, success_rate };

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
};

/// Success curves have strictly increasing x. Precision-recall curves trace
/// the confidence sweep, so recall is non-decreasing and may repeat.
struct Curve {
    CurveKind kind = CurveKind::success_rate;
    std::vector<CurvePoint> points;
};

/// Counts after admitting every detection scoring at least `threshold`.
struct MatchCounts {
    double threshold = 0.0;
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
};

struct PrResult {
    Curve curve;
    std::vector<MatchCounts> counts;  ///< parallel to curve.points
    double auc = 0.0;
};

/// Precision-recall sweep over detections pooled across images. Detections are
/// visited by descending score (ties keep input order) and each one claims the
/// unmatched ground-truth box of its image with the highest IoU; it is a true
/// positive when that IoU reaches `iou_thresh`. One point is emitted per
/// distinct score. AUC is the trapezoid rule over recall, anchored at recall 0
/// with the first point's precision.
PrResult pr_curve(std::span<const std::vector<ScoredBox>> detections,
                  std::span<const std::vector<BBox>> ground_truth, double iou_thresh = 0.5);

/// Trapezoid area under a curve; PR curves get the recall-0 anchor.
double curve_auc(const Curve& curve);

/// Fraction of `ious` strictly greater than `tau`.
double success_rate(std::span<const double> ious, double tau);

struct SuccessResult {
    Curve curve;                ///< thresholds 0.00, 0.01, ..., 1.00
    std::vector<double> ious;   ///< one per scored frame
    std::size_t scored_frames = 0;
    double auc = 0.0;
};

/// Per-frame IoU success curve. A missing prediction (REJECT) scores 0; frames
/// whose ground truth is absent are not scored.
SuccessResult success_curve(std::span<const std::optional<BBox>> predictions,
                            std::span<const std::optional<BBox>> ground_truth);

// --- result / ground-truth files ---------------------------------------------

/// One CSV row: frame_index,x,y,w,h,score[,mode,decision]. A row without a
/// box is a REJECT (or an absent target in ground truth).
struct TrackRow {
    std::int64_t frame_index = 0;
    std::optional<BBox> box;
    std::optional<double> score;
    std::string mode;      ///< empty when the file has no mode column
    std::string decision;  ///< ACCEPT / REJECT, empty when absent
};

std::vector<TrackRow> read_track_file(const std::filesystem::path& path);

/// Writes the header and rows; mode/decision columns are emitted when any row
/// carries them.
void write_track_file(const std::filesystem::path& path, std::span<const TrackRow> rows);

/// One box (or none) per frame, in ground-truth frame order. Throws when the
/// run and the ground truth do not cover the same frames.
struct AlignedTrack {
    std::vector<std::int64_t> frames;
    std::vector<std::optional<BBox>> predictions;
    std::vector<std::optional<BBox>> ground_truth;
};

AlignedTrack align_tracks(std::span<const TrackRow> run, std::span<const TrackRow> gt);

/// Groups rows by frame index into per-image detection and ground-truth lists.
struct DetectionSet {
    std::vector<std::int64_t> frames;
    std::vector<std::vector<ScoredBox>> detections;
    std::vector<std::vector<BBox>> ground_truth;
};

DetectionSet group_detections(std::span<const TrackRow> results, std::span<const TrackRow> gt);

void write_curve_csv(const std::filesystem::path& path, const Curve& curve);

struct CompareReport {
    SuccessResult run_a;
    SuccessResult run_b;
    double difference = 0.0;  ///< auc(a) - auc(b)
};

CompareReport compare_runs(const std::filesystem::path& run_a, const std::filesystem::path& run_b,
                           const std::filesystem::path& ground_truth);

/// Both success curves side by side, then the AUC and difference rows.
void write_compare_csv(const std::filesystem::path& path, const CompareReport& report);

}  // namespace dronemon
