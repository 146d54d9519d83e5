#include "dronemon/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dronemon/eval.hpp"

namespace dronemon {

void FusionParams::validate() const {
    if (!(beta1 > 0.0) || !(beta2 > 0.0) || !std::isfinite(beta1) || !std::isfinite(beta2)) {
        throw std::invalid_argument("fusion params: beta1 and beta2 must be positive");
    }
    if (!std::isfinite(alpha1) || !std::isfinite(alpha2)) {
        throw std::invalid_argument("fusion params: alpha1 and alpha2 must be finite");
    }
    if (!(accept_floor >= 0.0 && accept_floor <= 1.0)) {
        throw std::invalid_argument("fusion params: accept_floor must lie in [0, 1]");
    }
    if (lost_patience < 1) {
        throw std::invalid_argument("fusion params: lost_patience must be at least 1");
    }
    if (!(colocation_iou > 0.0 && colocation_iou <= 1.0)) {
        throw std::invalid_argument("fusion params: colocation_iou must lie in (0, 1]");
    }
}

double calibrate(double score, double alpha, double beta) {
    return 1.0 / (1.0 + std::exp(-beta * (score - alpha)));
}

double fuse(double detector_calibrated, double tracker_calibrated) {
    return std::max(detector_calibrated, tracker_calibrated);
}

double fused_score(const Candidate& c, const FusionParams& params) {
    const double sd = c.detector_score ? calibrate(*c.detector_score, params.alpha1, params.beta1) : 0.0;
    const double st = c.tracker_score ? calibrate(*c.tracker_score, params.alpha2, params.beta2) : 0.0;
    return fuse(sd, st);
}

FusionDecision select_candidate(std::span<const Candidate> candidates, const FusionParams& params) {
    FusionDecision decision;
    if (candidates.empty()) {
        return decision;
    }
    std::size_t best = 0;
    double best_score = fused_score(candidates[0], params);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double s = fused_score(candidates[i], params);
        if (s > best_score) {
            best = i;
            best_score = s;
        }
    }
    decision.best_score = best_score;
    if (best_score < params.accept_floor) {
        return decision;
    }
    decision.rejected = false;
    decision.index = best;
    decision.chosen = ScoredBox{candidates[best].box, best_score, candidates[best].origin};
    return decision;
}

const char* to_string(MonitorMode mode) {
    return mode == MonitorMode::tracking ? "TRACKING" : "SEARCHING";
}

MonitorState seed_monitor(const BBox& box, const ImageBuffer& image, Tracker& tracker) {
    MonitorState state;
    state.mode = MonitorMode::tracking;
    state.last_box = tracker.init(image, box);
    return state;
}

namespace {

PluginError::Kind fault_kind(const std::exception& e) {
    if (const auto* pe = dynamic_cast<const PluginError*>(&e)) {
        return pe->kind();
    }
    return PluginError::Kind::invalid_input;
}

void register_rejection(MonitorState& state, const FusionParams& params) {
    if (state.mode != MonitorMode::tracking) {
        return;
    }
    ++state.low_streak;
    if (state.low_streak >= params.lost_patience) {
        state.mode = MonitorMode::searching;
        state.last_box.reset();
        state.low_streak = 0;
    }
}

}  // namespace

StepResult monitor_step(const MonitorState& state, const ImageBuffer& frame,
                        const ImageBuffer& residual, Detector* detector, Tracker* tracker,
                        const FusionParams& params) {
    if (frame.width() != residual.width() || frame.height() != residual.height()) {
        throw std::invalid_argument("monitor_step: frame and residual dimensions differ");
    }
    StepResult result;
    result.state = state;
    result.state.frame_index = state.frame_index + 1;
    MonitorState& next = result.state;

    const auto run_detector = [&](const std::optional<BBox>& roi) {
        std::vector<ScoredBox> boxes;
        if (detector == nullptr) {
            return boxes;
        }
        try {
            boxes = detector->detect(frame, roi);
        } catch (const std::exception& e) {
            result.detector_fault = fault_kind(e);
            boxes.clear();
        }
        return boxes;
    };
    const auto init_tracker = [&](const BBox& box) {
        if (tracker == nullptr) {
            return;
        }
        try {
            tracker->init(residual, box);
        } catch (const std::exception& e) {
            result.tracker_fault = fault_kind(e);
        }
    };

    if (state.mode == MonitorMode::searching || tracker == nullptr) {
        const auto dets = run_detector(std::nullopt);
        std::vector<Candidate> candidates;
        candidates.reserve(dets.size());
        for (const auto& d : dets) {
            candidates.push_back({d.box, d.score, std::nullopt, ScoreSource::detector});
        }
        result.decision = select_candidate(candidates, params);
        if (!result.decision.rejected) {
            const bool acquired = next.mode == MonitorMode::searching;
            next.mode = MonitorMode::tracking;
            next.last_box = result.decision.chosen->box;
            next.low_streak = 0;
            if (acquired) {
                init_tracker(*next.last_box);
            }
        } else {
            register_rejection(next, params);
        }
        return result;
    }

    std::optional<ScoredBox> tracked;
    try {
        tracked = tracker->update(residual);
    } catch (const std::exception& e) {
        result.tracker_fault = fault_kind(e);
    }
    // The tracked box alone can shrink below the target when the residual
    // blob fragments, so the region also covers twice the last confirmed box.
    std::optional<BBox> roi;
    for (const auto& b : {tracked ? std::optional<BBox>(tracked->box) : std::nullopt, state.last_box}) {
        if (!b) {
            continue;
        }
        const BBox r = scale_about_center(*b, 2.0);
        if (!roi) {
            roi = r;
        } else {
            const double x0 = std::min(roi->x, r.x);
            const double y0 = std::min(roi->y, r.y);
            roi = BBox{x0, y0, std::max(roi->right(), r.right()) - x0,
                       std::max(roi->bottom(), r.bottom()) - y0};
        }
    }
    const auto dets = run_detector(roi);

    std::vector<Candidate> candidates;
    candidates.reserve(dets.size() + 1);
    std::optional<double> detector_at_track;
    for (const auto& d : dets) {
        Candidate c{d.box, d.score, std::nullopt, ScoreSource::detector};
        if (tracked && iou(d.box, tracked->box) >= params.colocation_iou) {
            c.tracker_score = tracked->score;
            detector_at_track = std::max(detector_at_track.value_or(d.score), d.score);
        }
        candidates.push_back(c);
    }
    if (tracked) {
        candidates.push_back({tracked->box, detector_at_track, tracked->score, ScoreSource::tracker});
    }

    result.decision = select_candidate(candidates, params);
    if (!result.decision.rejected) {
        const ScoredBox& chosen = *result.decision.chosen;
        next.last_box = chosen.box;
        next.low_streak = 0;
        if (chosen.source == ScoreSource::detector && params.reseed_from_detector) {
            init_tracker(chosen.box);
        }
    } else {
        register_rejection(next, params);
    }
    return result;
}

}  // namespace dronemon
