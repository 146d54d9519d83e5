#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "dronemon/eval.hpp"
#include "dronemon/fusion.hpp"
#include "dronemon/image.hpp"

namespace dronemon {

struct MonitorRunOptions {
    bool compensate = false;
    int window = 8;
    /// Start in TRACKING at this box instead of searching.
    std::optional<BBox> seed_box;
};

struct MonitorRun {
    std::vector<TrackRow> rows;  ///< one per frame, 1-based frame_index
    MonitorState final_state;
    std::size_t accepted = 0;
    std::size_t detector_faults = 0;
    std::size_t tracker_faults = 0;
    std::vector<PluginError::Kind> faults;
};

/// Runs the monitor over frames delivered one at a time by `next_frame`
/// (returns nullopt at the end). Residuals are computed on the fly; the first
/// frame pairs with itself.
MonitorRun run_monitor(const std::function<std::optional<ImageBuffer>()>& next_frame,
                       Detector* detector, Tracker* tracker, const FusionParams& params,
                       const MonitorRunOptions& options = {});

MonitorRun run_monitor(const std::vector<ImageBuffer>& frames, Detector* detector,
                       Tracker* tracker, const FusionParams& params,
                       const MonitorRunOptions& options = {});

/// Box per frame from a run (nullopt for REJECT rows).
std::vector<std::optional<BBox>> predicted_boxes(const MonitorRun& run);

}  // namespace dronemon
