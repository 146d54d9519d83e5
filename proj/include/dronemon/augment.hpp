#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dronemon/geometry.hpp"
#include "dronemon/image.hpp"

namespace dronemon {

class AugmentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// RGBA drone sprite. Alpha is binary (0 or 255) and at least one pixel is opaque.
struct ForegroundAsset {
    ImageBuffer sprite;
    std::string source_id;
};

/// Checks the asset invariants; throws AugmentError on violation.
void validate_asset(const ForegroundAsset& asset);

/// Builds an asset from an arbitrary RGBA image, thresholding alpha at 128.
ForegroundAsset make_asset(ImageBuffer rgba, std::string source_id);

/// Inclusive-exclusive pixel rectangle of the opaque pixels of an RGBA image.
struct PixelRect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
    bool operator==(const PixelRect&) const = default;
};

std::optional<PixelRect> opaque_bounds(const ImageBuffer& rgba);

/// Crops the sprite canvas to the tight bound of its opaque pixels.
ForegroundAsset crop_to_opaque(const ForegroundAsset& asset);

/// Scales then rotates the sprite about its center. The canvas grows so no
/// opaque pixel is lost, and alpha is re-binarized after resampling.
/// Translation is ignored here; it is a placement parameter.
ForegroundAsset transform_foreground(const ForegroundAsset& asset, const AffineTransform& t);

// --- illumination -----------------------------------------------------------

enum class ShadowMode { lines, perlin };

/// Per-pixel attenuation, 1.0 = unshadowed.
struct ShadowMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Multi-octave 2-D gradient noise mapped to [0, 1].
std::vector<double> perlin_field(int width, int height, std::uint64_t seed, int octaves = 4,
                                 double persistence = 0.5, double cell = 16.0);

ShadowMap make_shadow_map(int width, int height, ShadowMode mode, std::uint64_t seed);
ForegroundAsset apply_shadow(const ForegroundAsset& asset, const ShadowMap& map);
ForegroundAsset to_monochrome(const ForegroundAsset& asset);

// --- image quality ----------------------------------------------------------

struct GaussianBlur {
    double sigma = 1.0;
};

struct MotionBlur {
    double length = 1.0;
    double angle_deg = 0.0;
};

using BlurKind = std::variant<GaussianBlur, MotionBlur>;

ForegroundAsset blur(const ForegroundAsset& asset, const BlurKind& kind);

// --- compositing ------------------------------------------------------------

struct AugmentationPolicy {
    std::pair<double, double> rotation_range{-30.0, 30.0};
    /// Drone width as a fraction of the background width.
    std::pair<double, double> scale_range{0.02, 0.20};
    double shadow_probability = 0.3;
    double monochrome_probability = 0.2;
    double blur_probability = 0.3;
    std::uint64_t seed = 0;
    int drones_per_image = 1;

    void validate() const;
};

struct DronePlacement {
    std::size_t asset_index = 0;
    std::string source_id;
    double rotation_deg = 0.0;
    double width_fraction = 0.0;
    double scale = 1.0;
    int x = 0;
    int y = 0;
    int attempts = 1;
    std::optional<ShadowMode> shadow;
    bool monochrome = false;
    std::optional<BlurKind> blur;
};

struct SampleProvenance {
    std::uint64_t seed = 0;
    std::uint64_t sample_index = 0;
    std::vector<DronePlacement> drones;
};

struct AnnotatedSample {
    ImageBuffer image;  ///< RGB
    std::vector<BBox> boxes;
    /// Per-pixel label: 0 background, k for pixels pasted from drone k (1-based).
    std::vector<std::uint8_t> coverage;
    SampleProvenance provenance;
};

/// Pastes one sprite with an explicit transform; the translation is the top-left
/// corner of the sprite's tight opaque bound in the background.
AnnotatedSample paste_foreground(const ImageBuffer& background, const ForegroundAsset& asset,
                                 const AffineTransform& t);

/// Randomized composite; all randomness comes from (policy.seed, sample_index).
AnnotatedSample composite_sample(const ImageBuffer& background,
                                 std::span<const ForegroundAsset> assets,
                                 const AugmentationPolicy& policy, std::uint64_t sample_index);

// --- dataset generation -----------------------------------------------------

std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& manifest);
void write_manifest(const std::filesystem::path& manifest,
                    std::span<const std::filesystem::path> entries);

struct DatasetRecord {
    std::filesystem::path image;  ///< relative to the dataset directory
    std::size_t background_index = 0;
    int width = 0;
    int height = 0;
    std::vector<BBox> boxes;
    SampleProvenance provenance;
};

struct DatasetManifest {
    std::filesystem::path root;
    std::filesystem::path annotation_file;
    std::filesystem::path manifest_file;
    std::filesystem::path provenance_file;
    std::vector<DatasetRecord> records;
};

struct DatasetOptions {
    unsigned threads = 0;  ///< 0 = hardware concurrency
    bool write_voc_xml = false;
};

/// One annotation line: relative image path followed by space-separated
/// x,y,w,h groups printed with two decimals.
std::string format_annotation_line(const std::filesystem::path& image,
                                   std::span<const BBox> boxes);

/// PASCAL-VOC style XML for a single image with class "drone".
void write_voc_annotation(const std::filesystem::path& xml_path, const std::string& filename,
                          int width, int height, std::span<const BBox> boxes);

/// Loads an asset image from disk; it must carry an alpha channel.
ForegroundAsset load_asset(const std::filesystem::path& path);

DatasetManifest generate_dataset(std::span<const std::filesystem::path> backgrounds,
                                 std::span<const std::filesystem::path> assets,
                                 const AugmentationPolicy& policy, std::size_t n,
                                 const std::filesystem::path& out_dir,
                                 const DatasetOptions& options = {});

}  // namespace dronemon
