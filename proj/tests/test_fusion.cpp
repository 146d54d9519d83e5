#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dronemon/fusion.hpp"
#include "dronemon/pipeline.hpp"
#include "support.hpp"

using namespace dronemon;
using testing::ScriptedDetector;
using testing::ScriptedTracker;

namespace {

const ImageBuffer kFrame(64, 48, 3);

ScoredBox det_box(const BBox& b, double s) { return {b, s, ScoreSource::detector}; }

}  // namespace

TEST_CASE("calibrate examples") {
    CHECK(calibrate(0.5, 0.5, 10) == 0.5);
    CHECK(calibrate(1.0, 0.5, 10) == doctest::Approx(0.99331).epsilon(1e-5));
    double prev = 1.0;
    for (double s = 0.0; s > -50.0; s -= 5.0) {
        const double c = calibrate(s, 0.5, 10);
        CHECK(c < prev);
        CHECK(c >= 0.0);
        prev = c;
    }
    CHECK(prev < 1e-100);
}

TEST_CASE("fuse examples") {
    CHECK(fuse(0.2, 0.7) == 0.7);
    CHECK(fuse(0.42, 0.42) == 0.42);
    CHECK(fuse(0.9933, 0.5) == 0.9933);
}

TEST_CASE("fused_score treats a missing source as 0") {
    const FusionParams p;
    CHECK(fused_score({{0, 0, 1, 1}, 1.0, std::nullopt}, p) == doctest::Approx(0.99331).epsilon(1e-5));
    CHECK(fused_score({{0, 0, 1, 1}, std::nullopt, 0.5}, p) == 0.5);
    CHECK(fused_score({{0, 0, 1, 1}, std::nullopt, std::nullopt}, p) == 0.0);
    CHECK(fused_score({{0, 0, 1, 1}, 0.2, 0.9}, p) == doctest::Approx(calibrate(0.9, 0.5, 10)));
}

TEST_CASE("select_candidate examples") {
    FusionParams p;
    // equal raw scores fuse equally, so the first of the tied pair wins
    const std::vector<Candidate> c{{{0, 0, 1, 1}, 0.4, std::nullopt},
                                   {{1, 0, 1, 1}, 0.8, std::nullopt},
                                   {{2, 0, 1, 1}, 0.8, std::nullopt}};
    const auto d = select_candidate(c, p);
    CHECK_FALSE(d.rejected);
    REQUIRE(d.index.has_value());
    CHECK(*d.index == 1);
    CHECK(d.chosen->box == BBox{1, 0, 1, 1});
    CHECK(d.chosen->score == doctest::Approx(calibrate(0.8, 0.5, 10)));

    const auto e = select_candidate({}, p);
    CHECK(e.rejected);
    CHECK_FALSE(e.chosen.has_value());
    CHECK(e.best_score == 0.0);

    // fused 0.4 against a 0.5 floor
    const double raw = 0.5 + std::log(0.4 / 0.6) / 10.0;
    const std::vector<Candidate> one{{{0, 0, 1, 1}, raw, std::nullopt}};
    const auto r = select_candidate(one, p);
    CHECK(r.rejected);
    CHECK_FALSE(r.chosen.has_value());
    CHECK(r.best_score == doctest::Approx(0.4));
    p.accept_floor = 0.0;
    CHECK_FALSE(select_candidate(one, p).rejected);
}

TEST_CASE("FusionParams validation") {
    CHECK_NOTHROW(FusionParams{}.validate());
    FusionParams p;
    p.beta1 = 0.0;
    CHECK_THROWS(p.validate());
    p = {};
    p.accept_floor = 1.5;
    CHECK_THROWS(p.validate());
    p = {};
    p.lost_patience = 0;
    CHECK_THROWS(p.validate());
    p = {};
    p.colocation_iou = 0.0;
    CHECK_THROWS(p.validate());
}

TEST_CASE("SEARCHING to TRACKING on a strong detection") {
    ScriptedDetector det;
    ScriptedTracker trk;
    det.script = {{det_box({10, 10, 8, 6}, 0.95)}};
    const auto r = monitor_step(MonitorState{}, kFrame, kFrame, &det, &trk, FusionParams{});
    CHECK(r.state.mode == MonitorMode::tracking);
    REQUIRE(r.state.last_box.has_value());
    CHECK(*r.state.last_box == BBox{10, 10, 8, 6});
    CHECK(r.state.frame_index == 1);
    CHECK(trk.inits == 1);
    CHECK(trk.updates == 0);
    CHECK_FALSE(det.rois[0].has_value());
}

TEST_CASE("weak detections keep SEARCHING") {
    ScriptedDetector det;
    ScriptedTracker trk;
    det.script = {{det_box({10, 10, 8, 6}, 0.2)}};
    const auto r = monitor_step(MonitorState{}, kFrame, kFrame, &det, &trk, FusionParams{});
    CHECK(r.state.mode == MonitorMode::searching);
    CHECK(r.decision.rejected);
    CHECK(trk.inits == 0);
}

TEST_CASE("five consecutive rejections drop back to SEARCHING") {
    ScriptedDetector det;
    ScriptedTracker trk;
    trk.scores = std::vector<double>(10, 0.1);
    const BBox start{10, 10, 8, 6};
    MonitorState s = seed_monitor(start, kFrame, trk);
    CHECK(s.mode == MonitorMode::tracking);
    CHECK(*s.last_box == start);
    FusionParams p;
    for (int i = 1; i <= 4; ++i) {
        const auto r = monitor_step(s, kFrame, kFrame, &det, &trk, p);
        s = r.state;
        CHECK(r.decision.rejected);
        CHECK(s.mode == MonitorMode::tracking);
        CHECK(s.low_streak == i);
        CHECK(s.last_box.has_value());
    }
    s = monitor_step(s, kFrame, kFrame, &det, &trk, p).state;
    CHECK(s.mode == MonitorMode::searching);
    CHECK_FALSE(s.last_box.has_value());
    CHECK(s.low_streak == 0);
}

TEST_CASE("an acceptance resets the streak") {
    ScriptedDetector det;
    ScriptedTracker trk;
    trk.scores = {0.1, 0.1, 0.9, 0.1};
    MonitorState s = seed_monitor({10, 10, 8, 6}, kFrame, trk);
    for (int i = 0; i < 4; ++i) {
        s = monitor_step(s, kFrame, kFrame, &det, &trk, FusionParams{}).state;
    }
    CHECK(s.low_streak == 1);
}

TEST_CASE("detector failure while tracking falls back to the tracker") {
    ScriptedDetector det;
    det.fail = true;
    ScriptedTracker trk;
    trk.scores = {0.9};
    const MonitorState s = seed_monitor({10, 10, 8, 6}, kFrame, trk);
    const auto r = monitor_step(s, kFrame, kFrame, &det, &trk, FusionParams{});
    CHECK(r.state.mode == MonitorMode::tracking);
    CHECK_FALSE(r.decision.rejected);
    CHECK(r.decision.chosen->source == ScoreSource::tracker);
    CHECK(r.decision.chosen->score == doctest::Approx(calibrate(0.9, 0.5, 10)));
    REQUIRE(r.detector_fault.has_value());
    CHECK(*r.detector_fault == PluginError::Kind::remote_error);
}

TEST_CASE("tracker failure while tracking falls back to the detector") {
    ScriptedDetector det;
    det.script = {{det_box({12, 10, 8, 6}, 0.95)}};
    ScriptedTracker trk;
    const MonitorState s = seed_monitor({10, 10, 8, 6}, kFrame, trk);
    trk.fail = true;
    const auto r = monitor_step(s, kFrame, kFrame, &det, &trk, FusionParams{});
    CHECK_FALSE(r.decision.rejected);
    CHECK(r.decision.chosen->box == BBox{12, 10, 8, 6});
    CHECK(r.tracker_fault.has_value());
    CHECK(r.state.mode == MonitorMode::tracking);
}

TEST_CASE("the detector searches twice the tracked region") {
    ScriptedDetector det;
    ScriptedTracker trk;
    trk.scores = {0.9};
    const MonitorState s = seed_monitor({20, 20, 10, 6}, kFrame, trk);
    monitor_step(s, kFrame, kFrame, &det, &trk, FusionParams{});
    REQUIRE(det.rois.size() == 1);
    REQUIRE(det.rois[0].has_value());
    CHECK(*det.rois[0] == BBox{15, 17, 20, 12});
}

TEST_CASE("co-located boxes share scores and a detector win re-seeds") {
    ScriptedDetector det;
    ScriptedTracker trk;
    trk.scores = {0.3};
    const BBox tracked{20, 20, 10, 6};
    const BBox near{21, 20, 10, 6};  // IoU 9/11 with the tracked box
    det.script = {{det_box(near, 0.9)}};
    const MonitorState s = seed_monitor(tracked, kFrame, trk);
    const auto r = monitor_step(s, kFrame, kFrame, &det, &trk, FusionParams{});
    REQUIRE_FALSE(r.decision.rejected);
    // both candidates fuse to calibrate(0.9); the detector box is listed first
    CHECK(r.decision.chosen->source == ScoreSource::detector);
    CHECK(r.decision.chosen->box == near);
    CHECK(*r.state.last_box == near);
    CHECK(trk.inits == 2);
    CHECK(*trk.box == near);

    FusionParams no_reseed;
    no_reseed.reseed_from_detector = false;
    ScriptedTracker t2;
    t2.scores = {0.3};
    ScriptedDetector d2;
    d2.script = det.script;
    const auto r2 = monitor_step(seed_monitor(tracked, kFrame, t2), kFrame, kFrame, &d2, &t2, no_reseed);
    CHECK(r2.decision.chosen->box == near);
    CHECK(t2.inits == 1);
}

TEST_CASE("a distant detection does not lend its score to the tracker") {
    ScriptedDetector det;
    ScriptedTracker trk;
    trk.scores = {0.3};
    det.script = {{det_box({40, 30, 10, 6}, 0.4)}};
    const MonitorState s = seed_monitor({10, 10, 10, 6}, kFrame, trk);
    const auto r = monitor_step(s, kFrame, kFrame, &det, &trk, FusionParams{});
    CHECK(r.decision.rejected);
    CHECK(r.decision.best_score == doctest::Approx(calibrate(0.4, 0.5, 10)));
}

TEST_CASE("tracker-only runs need a seed") {
    ScriptedTracker trk;
    trk.scores = std::vector<double>(5, 0.9);
    const std::vector<ImageBuffer> frames(5, kFrame);
    const auto unseeded = run_monitor(frames, nullptr, &trk, FusionParams{});
    CHECK(unseeded.accepted == 0);
    for (const auto& row : unseeded.rows) {
        CHECK(row.mode == "SEARCHING");
        CHECK(row.decision == "REJECT");
        CHECK_FALSE(row.box.has_value());
    }
    ScriptedTracker t2;
    t2.scores = std::vector<double>(5, 0.9);
    MonitorRunOptions opt;
    opt.seed_box = BBox{3, 4, 5, 6};
    const auto seeded = run_monitor(frames, nullptr, &t2, FusionParams{}, opt);
    CHECK(seeded.accepted == 5);
    CHECK(seeded.rows[0].mode == "TRACKING");
    CHECK(seeded.final_state.mode == MonitorMode::tracking);
    CHECK(predicted_boxes(seeded)[4] == BBox{3, 4, 5, 6});
}

TEST_CASE("run_monitor numbers rows from 1 and validates inputs") {
    ScriptedDetector det;
    det.script = {{det_box({1, 1, 4, 4}, 0.99)}, {}, {det_box({2, 2, 4, 4}, 0.99)}};
    const std::vector<ImageBuffer> frames(3, kFrame);
    const auto run = run_monitor(frames, &det, nullptr, FusionParams{});
    REQUIRE(run.rows.size() == 3);
    CHECK(run.rows[0].frame_index == 1);
    CHECK(run.rows[2].frame_index == 3);
    CHECK(run.rows[0].decision == "ACCEPT");
    CHECK(run.rows[1].decision == "REJECT");
    CHECK(run.accepted == 2);
    FusionParams bad;
    bad.beta2 = -1;
    CHECK_THROWS(run_monitor(frames, &det, nullptr, bad));
    ScriptedTracker trk;
    MonitorRunOptions opt;
    opt.seed_box = BBox{0, 0, 2, 2};
    CHECK_THROWS(run_monitor(frames, &det, nullptr, FusionParams{}, opt));
    const std::vector<ImageBuffer> mixed{kFrame, ImageBuffer(10, 10, 3)};
    CHECK_THROWS(run_monitor(mixed, &det, &trk, FusionParams{}));
    CHECK_THROWS(monitor_step(MonitorState{}, kFrame, ImageBuffer(4, 4, 3), &det, &trk, FusionParams{}));
}
