#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dronemon/augment.hpp"
#include "dronemon/fusion.hpp"

namespace dronemon {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DetectorChoice { template_match, external, none };
enum class TrackerChoice { blob, external, none };

struct RunConfig {
    FusionParams fusion;
    AugmentationPolicy policy;

    DetectorChoice detector = DetectorChoice::template_match;
    TrackerChoice tracker = TrackerChoice::blob;
    std::string detector_command;
    std::string tracker_command;
    int plugin_timeout_ms = 10000;
    std::vector<std::filesystem::path> templates;  ///< sprites for the template detector
    int template_stride = 1;

    bool compensate = false;
    int window = 8;

    std::filesystem::path backgrounds;  ///< manifest of background images
    std::filesystem::path assets;       ///< manifest of foreground sprites
    std::filesystem::path frames;
    std::filesystem::path out;
    unsigned threads = 0;
    bool voc_xml = false;

    /// Numeric ranges plus existence of every non-empty path except `out`.
    void validate() const;
};

/// Sets one key. Unknown keys and malformed values throw ConfigError.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Flat `key = value` text, `#` starts a comment. Relative paths resolve
/// against `base_dir`.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {},
                       std::string_view source = "<config>");

RunConfig load_config(const std::filesystem::path& path);

DetectorChoice parse_detector_choice(std::string_view text);
TrackerChoice parse_tracker_choice(std::string_view text);

}  // namespace dronemon
