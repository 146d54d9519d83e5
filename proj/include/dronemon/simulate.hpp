#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "dronemon/augment.hpp"
#include "dronemon/geometry.hpp"
#include "dronemon/image.hpp"

namespace dronemon {

struct PathPoint {
    double x = 0.0;
    double y = 0.0;
};

/// Sprite center per frame; an empty entry means the target is out of view.
using TrackPath = std::vector<std::optional<PathPoint>>;

struct RenderedSequence {
    std::vector<ImageBuffer> frames;
    std::vector<std::optional<BBox>> truth;
};

/// Pastes the sprite, cropped to its opaque bound, centered at each path point
/// (top-left rounded to the nearest pixel). Throws AugmentError when a
/// placement leaves the frame or the path has fewer than two points.
RenderedSequence render_sequence(const ImageBuffer& background, const ForegroundAsset& asset,
                                 const TrackPath& path);

/// Renders the sequence to `out_dir` as 000001.png ... plus groundtruth.csv and
/// returns the per-frame ground truth.
std::vector<std::optional<BBox>> simulate_sequence(const ImageBuffer& background,
                                                   const ForegroundAsset& asset,
                                                   const TrackPath& path,
                                                   const std::filesystem::path& out_dir);

/// Writes frames and ground truth of an already rendered sequence.
void write_sequence(const RenderedSequence& seq, const std::filesystem::path& out_dir);

/// Path file: one line per frame, "x y" for a center or "-" for absent.
TrackPath read_path_file(const std::filesystem::path& path);

/// Smooth textured RGB clutter (sky gradient plus noise), deterministic in seed.
ImageBuffer make_clutter_background(int width, int height, std::uint64_t seed);

/// Small quadcopter-like RGBA sprite with a high-contrast texture.
ForegroundAsset make_drone_sprite(int width, int height);

/// 120-frame desk-scale scenario: the drone flies across the frame, is out of
/// view for 15 frames, then re-enters elsewhere.
struct Scenario {
    ImageBuffer background;
    ForegroundAsset drone;
    TrackPath path;
};

Scenario canonical_occlusion_scenario(std::uint64_t seed = 7);

}  // namespace dronemon
