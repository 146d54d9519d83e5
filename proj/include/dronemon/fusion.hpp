#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dronemon/geometry.hpp"
#include "dronemon/image.hpp"
#include "dronemon/plugins.hpp"
#include "dronemon/scored_box.hpp"

namespace dronemon {

/// Sigmoid calibration parameters for both sources plus the acceptance rule.
struct FusionParams {
    double alpha1 = 0.5;  ///< detector midpoint
    double beta1 = 10.0;  ///< detector steepness, > 0
    double alpha2 = 0.5;  ///< tracker midpoint
    double beta2 = 10.0;  ///< tracker steepness, > 0
    double accept_floor = 0.5;
    int lost_patience = 5;
    /// Re-initialize the tracker when a detector box wins during tracking.
    bool reseed_from_detector = true;
    /// IoU at which a box from one source is considered co-located with the other.
    double colocation_iou = 0.5;

    void validate() const;
};

/// 1 / (1 + exp(-beta (score - alpha))); strictly increasing in `score`.
double calibrate(double score, double alpha, double beta);

/// Max-fusion of two calibrated scores.
double fuse(double detector_calibrated, double tracker_calibrated);

/// A candidate location with whichever raw scores are available for it.
struct Candidate {
    BBox box;
    std::optional<double> detector_score;
    std::optional<double> tracker_score;
    ScoreSource origin = ScoreSource::detector;
};

/// Fused score of one candidate; an absent source contributes 0.
double fused_score(const Candidate& c, const FusionParams& params);

struct FusionDecision {
    /// Winning box with its fused score S_f; absent exactly when rejected.
    std::optional<ScoredBox> chosen;
    std::optional<std::size_t> index;
    bool rejected = true;
    /// Best fused score even when it fell below the floor (0 for no candidates).
    double best_score = 0.0;
};

/// Argmax of fused scores, first index wins ties. Rejected when there are no
/// candidates or the best fused score is below params.accept_floor.
FusionDecision select_candidate(std::span<const Candidate> candidates, const FusionParams& params);

enum class MonitorMode { searching, tracking };

const char* to_string(MonitorMode mode);

struct MonitorState {
    MonitorMode mode = MonitorMode::searching;
    std::optional<BBox> last_box;
    int low_streak = 0;
    std::int64_t frame_index = 0;
};

struct StepResult {
    MonitorState state;
    FusionDecision decision;
    std::optional<PluginError::Kind> detector_fault;
    std::optional<PluginError::Kind> tracker_fault;
};

/// Starts in TRACKING at `box` with the tracker initialized on `image`.
MonitorState seed_monitor(const BBox& box, const ImageBuffer& image, Tracker& tracker);

/// One frame of the detect/track loop.
///
/// SEARCHING runs the detector over the full frame and, on acceptance, moves to
/// TRACKING with the tracker initialized at the chosen box. TRACKING updates
/// the tracker on the residual, runs the detector inside a region twice the
/// tracked box, cross-attaches scores between co-located boxes, and fuses.
/// Detector candidates are listed before the tracker's box, so on equal fused
/// scores the detector's box wins. Consecutive rejections beyond
/// lost_patience drop back to SEARCHING. Either plugin may be null (source
/// disabled); plugin failures only remove that source for the frame.
StepResult monitor_step(const MonitorState& state, const ImageBuffer& frame,
                        const ImageBuffer& residual, Detector* detector, Tracker* tracker,
                        const FusionParams& params);

}  // namespace dronemon
