#include "dronemon/pipeline.hpp"

#include <stdexcept>

#include "dronemon/residual.hpp"

namespace dronemon {

MonitorRun run_monitor(const std::function<std::optional<ImageBuffer>()>& next_frame,
                       Detector* detector, Tracker* tracker, const FusionParams& params,
                       const MonitorRunOptions& options) {
    params.validate();
    MonitorRun run;
    std::optional<ImageBuffer> prev;
    MonitorState state;
    while (auto frame = next_frame()) {
        const ImageBuffer residual =
            residual_frame(prev ? *prev : *frame, *frame, options.compensate, options.window);
        if (!prev && options.seed_box) {
            if (tracker == nullptr) {
                throw std::invalid_argument("run_monitor: a seed box needs a tracker");
            }
            state = seed_monitor(*options.seed_box, residual, *tracker);
        }
        StepResult step = monitor_step(state, *frame, residual, detector, tracker, params);
        if (step.detector_fault) {
            ++run.detector_faults;
            run.faults.push_back(*step.detector_fault);
        }
        if (step.tracker_fault) {
            ++run.tracker_faults;
            run.faults.push_back(*step.tracker_fault);
        }
        TrackRow row;
        row.frame_index = step.state.frame_index;
        row.mode = to_string(step.state.mode);
        if (step.decision.rejected) {
            row.decision = "REJECT";
        } else {
            ++run.accepted;
            row.box = step.decision.chosen->box;
            row.score = step.decision.chosen->score;
            row.decision = "ACCEPT";
        }
        run.rows.push_back(std::move(row));
        state = std::move(step.state);
        prev = std::move(frame);
    }
    run.final_state = state;
    return run;
}

MonitorRun run_monitor(const std::vector<ImageBuffer>& frames, Detector* detector,
                       Tracker* tracker, const FusionParams& params,
                       const MonitorRunOptions& options) {
    std::size_t i = 0;
    return run_monitor(
        [&]() -> std::optional<ImageBuffer> {
            if (i >= frames.size()) {
                return std::nullopt;
            }
            return frames[i++];
        },
        detector, tracker, params, options);
}

std::vector<std::optional<BBox>> predicted_boxes(const MonitorRun& run) {
    std::vector<std::optional<BBox>> out;
    out.reserve(run.rows.size());
    for (const auto& r : run.rows) {
        out.push_back(r.box);
    }
    return out;
}

}  // namespace dronemon
