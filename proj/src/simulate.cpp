#include "dronemon/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "dronemon/eval.hpp"
#include "dronemon/image_io.hpp"
#include "dronemon/text.hpp"

namespace fs = std::filesystem;

namespace dronemon {

RenderedSequence render_sequence(const ImageBuffer& background, const ForegroundAsset& asset,
                                 const TrackPath& path) {
    if (path.size() < 2) {
        throw AugmentError("simulate_sequence: path needs at least two points");
    }
    const ForegroundAsset sprite = crop_to_opaque(asset);
    const ImageBuffer base = to_rgb(background);
    const int w = sprite.sprite.width();
    const int h = sprite.sprite.height();

    RenderedSequence seq;
    seq.frames.reserve(path.size());
    seq.truth.reserve(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (!path[i]) {
            seq.frames.push_back(base);
            seq.truth.emplace_back();
            continue;
        }
        const int x = static_cast<int>(std::lround(path[i]->x - 0.5 * w));
        const int y = static_cast<int>(std::lround(path[i]->y - 0.5 * h));
        if (x < 0 || y < 0 || x + w > base.width() || y + h > base.height()) {
            throw AugmentError("simulate_sequence: frame " + std::to_string(i + 1) +
                               " places the sprite outside the frame");
        }
        ImageBuffer frame = base;
        for (int v = 0; v < h; ++v) {
            for (int u = 0; u < w; ++u) {
                if (sprite.sprite.at(u, v, 3) == 0) {
                    continue;
                }
                for (int c = 0; c < 3; ++c) {
                    frame.at(x + u, y + v, c) = sprite.sprite.at(u, v, c);
                }
            }
        }
        seq.frames.push_back(std::move(frame));
        seq.truth.push_back(BBox{static_cast<double>(x), static_cast<double>(y),
                                 static_cast<double>(w), static_cast<double>(h)});
    }
    return seq;
}

void write_sequence(const RenderedSequence& seq, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw AugmentError("cannot create " + out_dir.string() + ": " + ec.message());
    }
    std::vector<TrackRow> rows;
    rows.reserve(seq.frames.size());
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        try {
            write_png(out_dir / frame_file_name(i + 1), seq.frames[i]);
        } catch (const ImageIoError& e) {
            throw AugmentError(e.what());
        }
        TrackRow row;
        row.frame_index = static_cast<std::int64_t>(i + 1);
        row.box = seq.truth[i];
        if (row.box) {
            row.score = 1.0;
        }
        rows.push_back(std::move(row));
    }
    write_track_file(out_dir / "groundtruth.csv", rows);
}

std::vector<std::optional<BBox>> simulate_sequence(const ImageBuffer& background,
                                                   const ForegroundAsset& asset,
                                                   const TrackPath& path, const fs::path& out_dir) {
    RenderedSequence seq = render_sequence(background, asset, path);
    write_sequence(seq, out_dir);
    return std::move(seq.truth);
}

TrackPath read_path_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw AugmentError("cannot read path file " + path.string());
    }
    TrackPath out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        if (t == "-") {
            out.emplace_back();
            continue;
        }
        std::vector<std::string_view> fields;
        for (const auto f : split(t, ' ')) {
            if (!f.empty()) {
                fields.push_back(f);
            }
        }
        const auto x = fields.size() == 2 ? parse_real(fields[0]) : std::nullopt;
        const auto y = fields.size() == 2 ? parse_real(fields[1]) : std::nullopt;
        if (!x || !y) {
            throw AugmentError(path.string() + ":" + std::to_string(line_no) +
                               ": expected 'x y' or '-'");
        }
        out.push_back(PathPoint{*x, *y});
    }
    return out;
}

ImageBuffer make_clutter_background(int width, int height, std::uint64_t seed) {
    const auto coarse = perlin_field(width, height, seed, 4, 0.5, 48.0);
    const auto fine = perlin_field(width, height, seed + 1, 2, 0.5, 6.0);
    ImageBuffer img(width, height, 3);
    for (int y = 0; y < height; ++y) {
        const double t = static_cast<double>(y) / std::max(1, height - 1);
        const double sky[3] = {150.0 - 60.0 * t, 180.0 - 50.0 * t, 225.0 - 130.0 * t};
        for (int x = 0; x < width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * width + x;
            const double shade = 0.75 + 0.4 * coarse[i] + 0.12 * (fine[i] - 0.5);
            for (int c = 0; c < 3; ++c) {
                img.at(x, y, c) =
                    static_cast<std::uint8_t>(std::clamp(std::lround(sky[c] * shade), 0L, 255L));
            }
        }
    }
    return img;
}

ForegroundAsset make_drone_sprite(int width, int height) {
    if (width < 8 || height < 6) {
        throw AugmentError("make_drone_sprite: sprite must be at least 8x6");
    }
    ImageBuffer img(width, height, 4, 0);
    const double cx = 0.5 * width;
    const double cy = 0.5 * height;
    const double rotor = 0.28 * height;
    const double rotor_cx[2] = {rotor + 0.5, width - rotor - 0.5};
    const double rotor_cy[2] = {rotor + 0.5, height - rotor - 0.5};
    const auto set = [&](int x, int y, int r, int g, int b) {
        img.at(x, y, 0) = static_cast<std::uint8_t>(r);
        img.at(x, y, 1) = static_cast<std::uint8_t>(g);
        img.at(x, y, 2) = static_cast<std::uint8_t>(b);
        img.at(x, y, 3) = 255;
    };
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double px = x + 0.5;
            const double py = y + 0.5;
            bool on_rotor = false;
            for (const double rx : rotor_cx) {
                for (const double ry : rotor_cy) {
                    const double d = std::hypot(px - rx, py - ry);
                    on_rotor = on_rotor || d <= rotor;
                }
            }
            const double bx = (px - cx) / (0.3 * width);
            const double by = (py - cy) / (0.3 * height);
            const bool on_body = bx * bx + by * by <= 1.0;
            // Arms along both diagonals.
            const double ax = (px - cx) / width;
            const double ay = (py - cy) / height;
            const bool on_arm = std::fabs(ax - ay) < 0.06 || std::fabs(ax + ay) < 0.06;
            if (on_body) {
                if ((x / 4 + y / 4) % 2 == 0) {
                    set(x, y, 235, 120, 30);
                } else {
                    set(x, y, 30, 30, 40);
                }
            } else if (on_rotor) {
                const bool ring = std::abs(x - width / 2) % 3 == 0;
                set(x, y, ring ? 60 : 215, ring ? 60 : 215, ring ? 70 : 225);
            } else if (on_arm) {
                set(x, y, 20, 20, 25);
            }
        }
    }
    return make_asset(std::move(img), "procedural-quadcopter");
}

Scenario canonical_occlusion_scenario(std::uint64_t seed) {
    Scenario s;
    s.background = make_clutter_background(320, 240, seed);
    s.drone = make_drone_sprite(24, 14);
    s.path.reserve(120);
    for (int t = 0; t < 120; ++t) {
        if (t < 50) {
            s.path.push_back(PathPoint{20.0 + 3.2 * t, 70.0 + 18.0 * std::sin(t / 9.0)});
        } else if (t < 65) {
            s.path.emplace_back();
        } else {
            const int u = t - 65;
            s.path.push_back(PathPoint{40.0 + 3.5 * u, 185.0 - 1.2 * u});
        }
    }
    return s;
}

}  // namespace dronemon
