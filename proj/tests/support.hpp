#pragma once

// Shared fixtures and reference oracles for the test binaries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <unistd.h>
#include <span>
#include <string>
#include <vector>

#include "dronemon/augment.hpp"
#include "dronemon/eval.hpp"
#include "dronemon/fusion.hpp"
#include "dronemon/image.hpp"
#include "dronemon/random.hpp"

namespace testing {

namespace fs = std::filesystem;
using namespace dronemon;

class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("dronemon-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline ImageBuffer random_image(int w, int h, std::uint64_t seed, int channels = 3) {
    Rng rng(seed);
    ImageBuffer img(w, h, channels);
    for (auto& v : img.data()) {
        v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    }
    return img;
}

// Smooth-ish texture: random values on a coarse grid, bilinearly upsampled.
inline ImageBuffer textured_image(int w, int h, std::uint64_t seed) {
    const ImageBuffer coarse = random_image(std::max(2, w / 4), std::max(2, h / 4), seed);
    return resize_bilinear(coarse, w, h);
}

inline ForegroundAsset solid_asset(int w, int h, std::uint8_t r = 200, std::uint8_t g = 60,
                                   std::uint8_t b = 30) {
    ImageBuffer img(w, h, 4);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.at(x, y, 0) = r;
            img.at(x, y, 1) = g;
            img.at(x, y, 2) = b;
            img.at(x, y, 3) = 255;
        }
    }
    return ForegroundAsset{std::move(img), "solid"};
}

// Opaque textured sprite with an irregular (disc) mask.
inline ForegroundAsset disc_asset(int w, int h, std::uint64_t seed) {
    ImageBuffer img = random_image(w, h, seed, 4);
    const double cx = 0.5 * w;
    const double cy = 0.5 * h;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double dx = (x + 0.5 - cx) / (0.5 * w);
            const double dy = (y + 0.5 - cy) / (0.5 * h);
            img.at(x, y, 3) = dx * dx + dy * dy <= 1.0 ? 255 : 0;
        }
    }
    return ForegroundAsset{std::move(img), "disc"};
}

// Pixel-rasterization oracle for integer boxes: counts unit squares covered by both.
inline long raster_intersection(const BBox& a, const BBox& b, int lo, int hi) {
    long n = 0;
    for (int y = lo; y < hi; ++y) {
        for (int x = lo; x < hi; ++x) {
            const bool in_a = x >= a.x && x + 1 <= a.right() && y >= a.y && y + 1 <= a.bottom();
            const bool in_b = x >= b.x && x + 1 <= b.right() && y >= b.y && y + 1 <= b.bottom();
            n += in_a && in_b ? 1 : 0;
        }
    }
    return n;
}

inline long raster_area(const BBox& a, int lo, int hi) { return raster_intersection(a, a, lo, hi); }

// Brute-force PR AUC: for every distinct score threshold, re-run matching on the
// admitted detections from scratch.
inline double brute_force_pr_auc(const std::vector<std::vector<ScoredBox>>& dets,
                                 const std::vector<std::vector<BBox>>& gt, double iou_thresh) {
    std::vector<double> thresholds;
    std::size_t total_gt = 0;
    for (const auto& g : gt) {
        total_gt += g.size();
    }
    for (const auto& d : dets) {
        for (const auto& s : d) {
            thresholds.push_back(s.score);
        }
    }
    if (total_gt == 0 || thresholds.empty()) {
        return 0.0;
    }
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    std::vector<std::pair<double, double>> pts;
    for (const double t : thresholds) {
        struct Ref {
            double score;
            std::size_t img;
            std::size_t idx;
        };
        std::vector<Ref> admitted;
        for (std::size_t i = 0; i < dets.size(); ++i) {
            for (std::size_t k = 0; k < dets[i].size(); ++k) {
                if (dets[i][k].score >= t) {
                    admitted.push_back({dets[i][k].score, i, k});
                }
            }
        }
        std::stable_sort(admitted.begin(), admitted.end(),
                         [](const Ref& a, const Ref& b) { return a.score > b.score; });
        std::vector<std::vector<bool>> used(gt.size());
        for (std::size_t i = 0; i < gt.size(); ++i) {
            used[i].assign(gt[i].size(), false);
        }
        std::size_t tp = 0;
        for (const auto& r : admitted) {
            double best = -1.0;
            std::size_t bj = 0;
            for (std::size_t j = 0; j < gt[r.img].size(); ++j) {
                if (used[r.img][j]) continue;
                const double inter = bbox_intersection_area(dets[r.img][r.idx].box, gt[r.img][j]);
                const double v = inter / (dets[r.img][r.idx].box.area() + gt[r.img][j].area() - inter);
                if (v > best) {
                    best = v;
                    bj = j;
                }
            }
            if (best >= iou_thresh) {
                used[r.img][bj] = true;
                ++tp;
            }
        }
        pts.emplace_back(static_cast<double>(tp) / total_gt,
                         static_cast<double>(tp) / admitted.size());
    }
    double area = 0.0;
    double px = 0.0;
    double py = pts.front().second;
    for (const auto& [x, y] : pts) {
        area += (x - px) * (y + py) / 2.0;
        px = x;
        py = y;
    }
    return area;
}

// Brute force argmax with first-index tie-break, written independently of
// select_candidate.
inline std::optional<std::size_t> brute_force_select(const std::vector<Candidate>& cands,
                                                     const FusionParams& p) {
    const auto sig = [](double s, double a, double b) { return 1.0 / (1.0 + std::exp(-b * (s - a))); };
    std::vector<double> fused;
    for (const auto& c : cands) {
        const double d = c.detector_score ? sig(*c.detector_score, p.alpha1, p.beta1) : 0.0;
        const double t = c.tracker_score ? sig(*c.tracker_score, p.alpha2, p.beta2) : 0.0;
        fused.push_back(d > t ? d : t);
    }
    for (std::size_t i = 0; i < fused.size(); ++i) {
        bool best = fused[i] >= p.accept_floor;
        for (std::size_t j = 0; j < fused.size() && best; ++j) {
            if (j < i ? fused[j] >= fused[i] : fused[j] > fused[i]) {
                best = false;
            }
        }
        if (best) {
            return i;
        }
    }
    return std::nullopt;
}

inline BBox random_int_box(Rng& rng, int lo, int hi, int max_side) {
    const double x = static_cast<double>(rng.uniform_int(lo, hi - 1));
    const double y = static_cast<double>(rng.uniform_int(lo, hi - 1));
    const double w = static_cast<double>(rng.uniform_int(1, max_side));
    const double h = static_cast<double>(rng.uniform_int(1, max_side));
    return {x, y, w, h};
}

// Scripted plugins for state-machine tests.
class ScriptedDetector final : public Detector {
public:
    std::vector<std::vector<ScoredBox>> script;
    std::size_t calls = 0;
    bool fail = false;
    std::vector<std::optional<BBox>> rois;

    std::vector<ScoredBox> detect(const ImageBuffer&, const std::optional<BBox>& roi) override {
        rois.push_back(roi);
        const std::size_t i = calls++;
        if (fail) {
            throw PluginError(PluginError::Kind::remote_error, "scripted failure");
        }
        return i < script.size() ? script[i] : std::vector<ScoredBox>{};
    }
};

class ScriptedTracker final : public Tracker {
public:
    std::vector<double> scores;
    std::size_t updates = 0;
    std::size_t inits = 0;
    bool fail = false;
    std::optional<BBox> box;

    BBox init(const ImageBuffer&, const BBox& b) override {
        ++inits;
        box = b;
        return b;
    }
    ScoredBox update(const ImageBuffer&) override {
        if (!box) {
            throw PluginError(PluginError::Kind::not_initialized, "scripted tracker");
        }
        const std::size_t i = updates++;
        if (fail) {
            throw PluginError(PluginError::Kind::remote_error, "scripted failure");
        }
        return {*box, i < scores.size() ? scores[i] : 0.0, ScoreSource::tracker};
    }
};

// A box is tight when every edge row/column holds at least one labelled pixel
// and no labelled pixel lies outside.
inline bool box_is_tight(const AnnotatedSample& s, const BBox& b, std::uint8_t label) {
    const int w = s.image.width();
    const int h = s.image.height();
    const int x0 = static_cast<int>(b.x);
    const int y0 = static_cast<int>(b.y);
    const int x1 = static_cast<int>(b.right());
    const int y1 = static_cast<int>(b.bottom());
    bool left = false, right = false, top = false, bottom = false;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (s.coverage[static_cast<std::size_t>(y) * w + x] != label) {
                continue;
            }
            if (x < x0 || x >= x1 || y < y0 || y >= y1) {
                return false;
            }
            left = left || x == x0;
            right = right || x == x1 - 1;
            top = top || y == y0;
            bottom = bottom || y == y1 - 1;
        }
    }
    return left && right && top && bottom;
}

// Plugins driven by a random stream: arbitrary boxes, scores and failures.
class RandomDetector final : public Detector {
public:
    explicit RandomDetector(std::uint64_t seed) : rng_(seed) {}
    std::vector<ScoredBox> detect(const ImageBuffer& img, const std::optional<BBox>&) override {
        if (rng_.uniform() < 0.1) {
            throw PluginError(PluginError::Kind::timeout, "random failure");
        }
        std::vector<ScoredBox> out;
        const auto n = rng_.uniform_int(0, 3);
        for (std::int64_t i = 0; i < n; ++i) {
            const BBox b{rng_.uniform() * img.width(), rng_.uniform() * img.height(),
                         1 + rng_.uniform() * 20, 1 + rng_.uniform() * 20};
            out.push_back({b, rng_.uniform() * 1.4 - 0.2, ScoreSource::detector});
        }
        std::sort(out.begin(), out.end(),
                  [](const ScoredBox& a, const ScoredBox& b) { return a.score > b.score; });
        return out;
    }

private:
    Rng rng_;
};

class RandomTracker final : public Tracker {
public:
    explicit RandomTracker(std::uint64_t seed) : rng_(seed) {}
    BBox init(const ImageBuffer&, const BBox& b) override {
        box_ = b;
        return b;
    }
    ScoredBox update(const ImageBuffer&) override {
        if (!box_) {
            throw PluginError(PluginError::Kind::not_initialized, "random tracker");
        }
        if (rng_.uniform() < 0.1) {
            throw PluginError(PluginError::Kind::child_exited, "random failure");
        }
        BBox b = *box_;
        b.x += rng_.uniform() * 6 - 3;
        b.y += rng_.uniform() * 6 - 3;
        return {b, rng_.uniform(), ScoreSource::tracker};
    }

private:
    Rng rng_;
    std::optional<BBox> box_;
};

// Runs `steps` monitor steps with random plugins and random parameters;
// returns false at the first state with TRACKING but no last_box.
inline bool tracking_implies_box(std::uint64_t seed, int steps) {
    Rng rng(seed);
    FusionParams p;
    p.alpha1 = rng.uniform();
    p.alpha2 = rng.uniform();
    p.beta1 = 0.5 + rng.uniform() * 20;
    p.beta2 = 0.5 + rng.uniform() * 20;
    p.accept_floor = rng.uniform();
    p.lost_patience = static_cast<int>(rng.uniform_int(1, 6));
    p.reseed_from_detector = rng.uniform() < 0.5;
    RandomDetector det(derive_seed(seed, 1));
    RandomTracker trk(derive_seed(seed, 2));
    const ImageBuffer frame(48, 32, 3);
    MonitorState s;
    for (int i = 0; i < steps; ++i) {
        const auto r = monitor_step(s, frame, frame, &det, &trk, p);
        if (r.state.mode == MonitorMode::tracking && !r.state.last_box) {
            return false;
        }
        if (r.state.mode == MonitorMode::tracking && r.state.low_streak > p.lost_patience) {
            return false;
        }
        if (r.decision.rejected != !r.decision.chosen.has_value()) {
            return false;
        }
        s = r.state;
    }
    return true;
}

// Kolmogorov-Smirnov statistic of a sample against uniform on [lo, hi].
inline double ks_uniform(std::vector<double> xs, double lo, double hi) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = (xs[i] - lo) / (hi - lo);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

}  // namespace testing
