#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dronemon/eval.hpp"
#include "dronemon/plugins.hpp"
#include "dronemon/residual.hpp"
#include "dronemon/simulate.hpp"
#include "support.hpp"

using namespace dronemon;

namespace {

// Copies the sprite's non-transparent pixels verbatim.
void plant(ImageBuffer& img, const ForegroundAsset& a, int x0, int y0) {
    const ImageBuffer& s = a.sprite;
    for (int y = 0; y < s.height(); ++y) {
        for (int x = 0; x < s.width(); ++x) {
            if (s.at(x, y, 3) == 0) continue;
            for (int c = 0; c < 3; ++c) {
                img.at(x0 + x, y0 + y, c) = s.at(x, y, c);
            }
        }
    }
}

bool sorted_desc(const std::vector<ScoredBox>& v) {
    return std::is_sorted(v.begin(), v.end(),
                          [](const ScoredBox& a, const ScoredBox& b) { return a.score > b.score; });
}

}  // namespace

TEST_CASE("masked_ncc") {
    const std::vector<double> a{1, 5, 2, 8, 3};
    CHECK(masked_ncc(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> neg;
    for (const double v : a) neg.push_back(10 - 2 * v);
    CHECK(masked_ncc(a, neg) == doctest::Approx(-1.0));
    const std::vector<double> flat(5, 4.0);
    CHECK(masked_ncc(a, flat) == 0.0);
    CHECK(masked_ncc(flat, flat) == 0.0);
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> x(30), y(30);
        for (auto& v : x) v = rng.uniform() * 255;
        for (auto& v : y) v = rng.uniform() * 255;
        const double r = masked_ncc(x, y);
        CHECK((r >= -1.0 && r <= 1.0));
        CHECK(std::abs(masked_ncc(x, x) - 1.0) < 1e-9);
    }
}

TEST_CASE("clip_and_sort") {
    std::vector<ScoredBox> boxes{{{-5, -5, 10, 10}, 0.2, ScoreSource::detector},
                                 {{50, 50, 5, 5}, 0.9, ScoreSource::detector},
                                 {{15, 0, 10, 4}, 0.7, ScoreSource::detector}};
    const auto out = clip_and_sort(boxes, 20, 20);
    REQUIRE(out.size() == 2);
    CHECK(out[0].box == BBox{15, 0, 5, 4});
    CHECK(out[0].score == 0.7);
    CHECK(out[1].box == BBox{0, 0, 5, 5});
}

TEST_CASE("template detector finds an exact plant") {
    const auto sprite = make_drone_sprite(20, 12);
    TemplateDetector det({sprite});
    for (const auto [px, py] : {std::pair{31, 17}, std::pair{0, 0}, std::pair{100, 68}}) {
        ImageBuffer img = testing::textured_image(120, 80, 5);
        plant(img, sprite, px, py);
        const auto out = det.detect(img, std::nullopt);
        REQUIRE_FALSE(out.empty());
        CHECK(out[0].score >= 0.99);
        CHECK(out[0].box == BBox{double(px), double(py), 20, 12});
        CHECK(out[0].source == ScoreSource::detector);
        CHECK(sorted_desc(out));
        CHECK(out.size() <= 5);
    }
}

TEST_CASE("template detector on a flat image") {
    TemplateDetector det({make_drone_sprite(20, 12)});
    const auto out = det.detect(ImageBuffer(80, 60, 3, 128), std::nullopt);
    for (const auto& b : out) {
        CHECK(b.score <= 0.1);
    }
}

TEST_CASE("template detector reports two plants as the top two") {
    const auto sprite = make_drone_sprite(18, 10);
    ImageBuffer img = testing::textured_image(160, 100, 8);
    const BBox a{12, 20, 18, 10};
    const BBox b{101, 63, 18, 10};
    plant(img, sprite, 12, 20);
    plant(img, sprite, 101, 63);
    TemplateDetector det({sprite});
    const auto out = det.detect(img, std::nullopt);
    REQUIRE(out.size() >= 2);
    const bool first_a = iou(out[0].box, a) >= 0.5;
    CHECK(iou(out[0].box, first_a ? a : b) >= 0.5);
    CHECK(iou(out[1].box, first_a ? b : a) >= 0.5);
    // non-overlapping output
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t j = i + 1; j < out.size(); ++j) {
            CHECK(iou(out[i].box, out[j].box) < 0.5);
        }
    }
}

TEST_CASE("template detector ROI restricts the search") {
    const auto sprite = make_drone_sprite(18, 10);
    ImageBuffer img = testing::textured_image(160, 100, 8);
    plant(img, sprite, 12, 20);
    plant(img, sprite, 101, 63);
    TemplateDetector det({sprite});
    const auto out = det.detect(img, BBox{90, 50, 50, 40});
    REQUIRE_FALSE(out.empty());
    CHECK(out[0].box == BBox{101, 63, 18, 10});
    for (const auto& s : out) {
        CHECK(s.box.x >= 90);
        CHECK(s.box.y >= 50);
        CHECK(s.box.right() <= 140);
        CHECK(s.box.bottom() <= 90);
    }
    CHECK(det.detect(img, BBox{500, 500, 10, 10}).empty());
}

TEST_CASE("template detector coarse stride still lands on the plant") {
    const auto sprite = make_drone_sprite(20, 12);
    ImageBuffer img = testing::textured_image(120, 80, 2);
    plant(img, sprite, 40, 30);
    TemplateDetectorOptions opt;
    opt.stride = 2;
    TemplateDetector det({sprite}, opt);
    const auto out = det.detect(img, std::nullopt);
    REQUIRE_FALSE(out.empty());
    CHECK(iou(out[0].box, BBox{40, 30, 20, 12}) >= 0.5);
}

TEST_CASE("template detector errors") {
    CHECK_THROWS_AS(TemplateDetector({}), PluginError);
    TemplateDetectorOptions bad;
    bad.stride = 0;
    CHECK_THROWS_AS(TemplateDetector({make_drone_sprite(20, 12)}, bad), PluginError);
    CHECK_THROWS_AS(TemplateDetector({testing::solid_asset(8, 8)}), PluginError);
    TemplateDetector det({make_drone_sprite(40, 30)});
    try {
        det.detect(ImageBuffer(20, 20, 3), std::nullopt);
        FAIL("expected an error");
    } catch (const PluginError& e) {
        CHECK(e.kind() == PluginError::Kind::invalid_input);
    }
}

TEST_CASE("blob tracker basics") {
    ResidualBlobTracker t;
    try {
        t.update(ImageBuffer(10, 10, 3));
        FAIL("expected an error");
    } catch (const PluginError& e) {
        CHECK(e.kind() == PluginError::Kind::not_initialized);
    }
    const BBox start{10, 12, 8, 6};
    CHECK(t.init(ImageBuffer(40, 40, 3), start) == start);
    const auto r = t.update(ImageBuffer(40, 40, 3));
    CHECK(r.box == start);
    CHECK(r.score == 0.0);
    CHECK(r.source == ScoreSource::tracker);
    CHECK_THROWS_AS(t.init(ImageBuffer(40, 40, 3), BBox{0, 0, 0, 5}), PluginError);
}

TEST_CASE("blob tracker follows a moving blob") {
    ResidualBlobTracker t;
    t.init(ImageBuffer(60, 60, 3), BBox{20, 20, 10, 10});
    ImageBuffer res(60, 60, 3);
    for (int y = 22; y < 32; ++y) {
        for (int x = 23; x < 33; ++x) {
            for (int c = 0; c < 3; ++c) res.at(x, y, c) = 200;
        }
    }
    const auto r = t.update(res);
    CHECK(r.box.w == 10);
    CHECK(r.box.h == 10);
    CHECK(r.box.x == doctest::Approx(23));
    CHECK(r.box.y == doctest::Approx(22));
    CHECK(r.score > 0.5);
    CHECK(r.score <= 1.0);
}

TEST_CASE("blob tracker on the canonical scenario before the occlusion") {
    const auto sc = canonical_occlusion_scenario();
    const auto seq = render_sequence(sc.background, sc.drone, sc.path);
    const auto residuals = residual_frames(seq.frames, false, 8);
    ResidualBlobTracker t;
    t.init(residuals[0], *seq.truth[0]);
    std::size_t good = 0;
    std::size_t scored = 0;
    for (std::size_t i = 1; i < 50; ++i) {
        const auto r = t.update(residuals[i]);
        CHECK(r.box.w > 0);
        CHECK(r.box.h > 0);
        ++scored;
        good += iou(r.box, *seq.truth[i]) >= 0.3 ? 1 : 0;
    }
    CHECK(static_cast<double>(good) >= 0.8 * static_cast<double>(scored));
}
