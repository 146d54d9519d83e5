#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <locale>

#include "dronemon/geometry.hpp"
#include "dronemon/image.hpp"
#include "dronemon/image_io.hpp"
#include "dronemon/random.hpp"
#include "dronemon/text.hpp"
#include "support.hpp"

using namespace dronemon;
using testing::TempDir;

TEST_CASE("intersection area examples") {
    CHECK(bbox_intersection_area({0, 0, 10, 10}, {0, 0, 10, 10}) == 100.0);
    CHECK(bbox_intersection_area({0, 0, 10, 10}, {20, 20, 5, 5}) == 0.0);
    CHECK(bbox_intersection_area({0, 0, 10, 10}, {5, 0, 10, 10}) == 50.0);
    // touching edges share no area
    CHECK(bbox_intersection_area({0, 0, 10, 10}, {10, 0, 10, 10}) == 0.0);
}

TEST_CASE("union area examples") {
    CHECK(bbox_union_area({0, 0, 10, 10}, {0, 0, 10, 10}) == 100.0);
    CHECK(bbox_union_area({0, 0, 10, 10}, {20, 20, 5, 5}) == 125.0);
    CHECK(bbox_union_area({0, 0, 10, 10}, {5, 0, 10, 10}) == 150.0);
}

TEST_CASE("areas agree with pixel rasterization on integer boxes") {
    Rng rng(11);
    for (int i = 0; i < 300; ++i) {
        const BBox a = testing::random_int_box(rng, 0, 12, 8);
        const BBox b = testing::random_int_box(rng, 0, 12, 8);
        const long inter = testing::raster_intersection(a, b, 0, 24);
        CHECK(bbox_intersection_area(a, b) == static_cast<double>(inter));
        CHECK(bbox_union_area(a, b) ==
              static_cast<double>(testing::raster_area(a, 0, 24) + testing::raster_area(b, 0, 24) - inter));
    }
}

TEST_CASE("scale_about_center keeps the center") {
    const BBox b = scale_about_center({10, 20, 4, 6}, 2.0);
    CHECK(b == BBox{8, 17, 8, 12});
}

TEST_CASE("clip_to_frame") {
    CHECK(clip_to_frame({-5, -5, 10, 10}, 20, 20) == BBox{0, 0, 5, 5});
    CHECK(clip_to_frame({15, 15, 10, 10}, 20, 20) == BBox{15, 15, 5, 5});
    CHECK_FALSE(clip_to_frame({20, 0, 5, 5}, 20, 20).has_value());
    CHECK_FALSE(clip_to_frame({-10, 0, 10, 5}, 20, 20).has_value());
}

TEST_CASE("AffineTransform validation and normalization") {
    CHECK(AffineTransform(190.0, 1, 1).rotation() == doctest::Approx(-170.0));
    CHECK(AffineTransform(-180.0, 1, 1).rotation() == doctest::Approx(180.0));
    CHECK(AffineTransform(540.0, 1, 1).rotation() == doctest::Approx(180.0));
    CHECK(AffineTransform(30.0, 1, 1).rotation() == doctest::Approx(30.0));
    CHECK_THROWS_AS(AffineTransform(0.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(AffineTransform(0.0, 1.0, -2.0), std::invalid_argument);
    CHECK_THROWS_AS(AffineTransform(NAN, 1.0, 1.0), std::invalid_argument);
    const AffineTransform id = AffineTransform::identity();
    CHECK(id.rotation() == 0.0);
    CHECK(id.scale_x() == 1.0);
    CHECK(id.scale_y() == 1.0);
}

TEST_CASE("ImageBuffer shape validation") {
    CHECK_THROWS_AS(ImageBuffer(0, 5, 3), std::invalid_argument);
    CHECK_THROWS_AS(ImageBuffer(5, 5, 2), std::invalid_argument);
    CHECK_THROWS_AS(ImageBuffer(2, 2, 3, std::vector<std::uint8_t>(11)), std::invalid_argument);
    const ImageBuffer img(4, 3, 4, 7);
    CHECK(img.data().size() == 4u * 3u * 4u);
    CHECK(img.has_alpha());
    CHECK(img.at(3, 2, 3) == 7);
    CHECK(ImageBuffer().empty());
}

TEST_CASE("luma rounding") {
    CHECK(luma(100, 150, 200) == 141);
    CHECK(luma(255, 255, 255) == 255);
    CHECK(luma(0, 0, 0) == 0);
    CHECK(luma(7, 7, 7) == 7);
}

TEST_CASE("rescale_shorter_side examples") {
    SUBCASE("1920x1080 -> 1067x600") {
        const auto out = rescale_shorter_side(ImageBuffer(1920, 1080, 3, 9), 600);
        CHECK(out.width() == 1067);
        CHECK(out.height() == 600);
    }
    SUBCASE("1280x720 -> 1067x600") {
        const auto out = rescale_shorter_side(ImageBuffer(1280, 720, 3), 600);
        CHECK(out.width() == 1067);
        CHECK(out.height() == 600);
    }
    SUBCASE("portrait") {
        const auto out = rescale_shorter_side(ImageBuffer(720, 1280, 3), 600);
        CHECK(out.width() == 600);
        CHECK(out.height() == 1067);
    }
    SUBCASE("identity when already at target") {
        const ImageBuffer img = testing::random_image(600, 600, 3);
        CHECK(rescale_shorter_side(img, 600) == img);
    }
    SUBCASE("bad input") {
        CHECK_THROWS_AS(rescale_shorter_side(ImageBuffer(10, 10, 3), 0), std::invalid_argument);
        CHECK_THROWS_AS(rescale_shorter_side(ImageBuffer(), 10), std::invalid_argument);
    }
}

TEST_CASE("resize_bilinear keeps constants and averages on downscale") {
    const ImageBuffer flat(7, 5, 3, 123);
    const auto up = resize_bilinear(flat, 19, 13);
    for (const auto v : up.data()) {
        CHECK(v == 123);
    }
    ImageBuffer two(2, 1, 3);
    for (int c = 0; c < 3; ++c) {
        two.at(0, 0, c) = 0;
        two.at(1, 0, c) = 100;
    }
    const auto one = resize_bilinear(two, 1, 1);
    CHECK(one.at(0, 0, 0) == 50);
}

TEST_CASE("luma_plane and to_rgb") {
    ImageBuffer img(2, 1, 4);
    img.at(0, 0, 0) = 100;
    img.at(0, 0, 1) = 150;
    img.at(0, 0, 2) = 200;
    img.at(0, 0, 3) = 255;
    const auto l = luma_plane(img);
    CHECK(l.size() == 2);
    CHECK(l[0] == 141);
    const auto rgb = to_rgb(img);
    CHECK(rgb.channels() == 3);
    CHECK(rgb.at(0, 0, 2) == 200);
}

TEST_CASE("text helpers are locale independent") {
    CHECK(format_fixed(0.791666666, 5) == "0.79167");
    CHECK(format_fixed(-0.001, 2) == "0.00");
    CHECK(format_fixed(12.5, 2) == "12.50");
    CHECK(parse_real(" 3.25 ") == doctest::Approx(3.25));
    CHECK_FALSE(parse_real("3.2.1").has_value());
    CHECK_FALSE(parse_real("").has_value());
    CHECK(parse_integer("-42") == -42);
    CHECK_FALSE(parse_integer("4x").has_value());
    CHECK(frame_file_name(1) == "000001.png");
    CHECK(frame_file_name(123456) == "123456.png");
    const auto parts = split("a,,b", ',');
    REQUIRE(parts.size() == 3);
    CHECK(parts[1].empty());
    CHECK(parse_real(format_real(0.1)) == 0.1);
}

TEST_CASE("random streams are deterministic and in range") {
    Rng a(5);
    Rng b(5);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next() == b.next());
    }
    Rng r(9);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        CHECK((u >= 0.0 && u < 1.0));
        const auto k = r.uniform_int(-3, 3);
        CHECK((k >= -3 && k <= 3));
    }
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("PNG round trip") {
    TempDir dir("io");
    const ImageBuffer rgb = testing::random_image(17, 9, 4, 3);
    const ImageBuffer rgba = testing::random_image(5, 6, 8, 4);
    write_png(dir / "a.png", rgb);
    write_png(dir / "b.png", rgba);
    CHECK(read_image(dir / "a.png") == rgb);
    CHECK(read_image(dir / "b.png") == rgba);
}

TEST_CASE("PNG bytes depend only on pixels") {
    TempDir dir("io2");
    const ImageBuffer img = testing::random_image(20, 20, 1);
    write_png(dir / "a.png", img);
    write_png(dir / "b.png", img);
    std::ifstream a(dir / "a.png", std::ios::binary);
    std::ifstream b(dir / "b.png", std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), {});
    const std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
}

TEST_CASE("image read errors") {
    TempDir dir("io3");
    CHECK_THROWS_AS(read_image(dir / "missing.png"), ImageIoError);
    {
        std::ofstream f(dir / "junk.png", std::ios::binary);
        f << "not an image at all";
    }
    CHECK_THROWS_AS(read_image(dir / "junk.png"), ImageIoError);
    CHECK_THROWS_AS(write_png(dir / "no" / "such" / "dir.png", ImageBuffer(2, 2, 3)), ImageIoError);
}

TEST_CASE("JPEG decode") {
    const auto img = read_image(DRONEMON_TEST_DATA "/gradient.jpg");
    CHECK(img.width() == 16);
    CHECK(img.height() == 8);
    CHECK(img.channels() == 3);
    // lossy, so only approximately the encoded gradient
    CHECK(std::abs(img.at(8, 4, 0) - 128) < 12);
    CHECK(std::abs(img.at(8, 4, 1) - 128) < 12);
    CHECK(std::abs(img.at(8, 4, 2) - 128) < 12);
}
