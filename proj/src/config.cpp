#include "dronemon/config.hpp"

#include <fstream>
#include <sstream>

#include "dronemon/text.hpp"

namespace fs = std::filesystem;

namespace dronemon {

namespace {

double as_real(std::string_view key, std::string_view value) {
    const auto v = parse_real(value);
    if (!v) {
        throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(value) + "'");
    }
    return *v;
}

long long as_integer(std::string_view key, std::string_view value) {
    const auto v = parse_integer(value);
    if (!v) {
        throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(value) + "'");
    }
    return *v;
}

bool as_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no" || value == "off") {
        return false;
    }
    throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(value) + "'");
}

void check_exists(const fs::path& p, const char* what) {
    if (!p.empty() && !fs::exists(p)) {
        throw ConfigError(std::string(what) + " not found: " + p.string());
    }
}

}  // namespace

DetectorChoice parse_detector_choice(std::string_view text) {
    if (text == "template") return DetectorChoice::template_match;
    if (text == "external") return DetectorChoice::external;
    if (text == "none") return DetectorChoice::none;
    throw ConfigError("detector must be template, external or none, got '" + std::string(text) + "'");
}

TrackerChoice parse_tracker_choice(std::string_view text) {
    if (text == "blob") return TrackerChoice::blob;
    if (text == "external") return TrackerChoice::external;
    if (text == "none") return TrackerChoice::none;
    throw ConfigError("tracker must be blob, external or none, got '" + std::string(text) + "'");
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
    const std::string v(value);
    if (key == "seed") {
        const auto s = as_integer(key, value);
        if (s < 0) {
            throw ConfigError("seed must be non-negative");
        }
        c.policy.seed = static_cast<std::uint64_t>(s);
    } else if (key == "rotation_min") {
        c.policy.rotation_range.first = as_real(key, value);
    } else if (key == "rotation_max") {
        c.policy.rotation_range.second = as_real(key, value);
    } else if (key == "scale_min") {
        c.policy.scale_range.first = as_real(key, value);
    } else if (key == "scale_max") {
        c.policy.scale_range.second = as_real(key, value);
    } else if (key == "shadow_probability") {
        c.policy.shadow_probability = as_real(key, value);
    } else if (key == "monochrome_probability") {
        c.policy.monochrome_probability = as_real(key, value);
    } else if (key == "blur_probability") {
        c.policy.blur_probability = as_real(key, value);
    } else if (key == "drones_per_image") {
        c.policy.drones_per_image = static_cast<int>(as_integer(key, value));
    } else if (key == "alpha1") {
        c.fusion.alpha1 = as_real(key, value);
    } else if (key == "beta1") {
        c.fusion.beta1 = as_real(key, value);
    } else if (key == "alpha2") {
        c.fusion.alpha2 = as_real(key, value);
    } else if (key == "beta2") {
        c.fusion.beta2 = as_real(key, value);
    } else if (key == "accept_floor") {
        c.fusion.accept_floor = as_real(key, value);
    } else if (key == "lost_patience") {
        c.fusion.lost_patience = static_cast<int>(as_integer(key, value));
    } else if (key == "reseed_from_detector") {
        c.fusion.reseed_from_detector = as_bool(key, value);
    } else if (key == "colocation_iou") {
        c.fusion.colocation_iou = as_real(key, value);
    } else if (key == "detector") {
        c.detector = parse_detector_choice(value);
    } else if (key == "tracker") {
        c.tracker = parse_tracker_choice(value);
    } else if (key == "detector_cmd") {
        c.detector_command = v;
    } else if (key == "tracker_cmd") {
        c.tracker_command = v;
    } else if (key == "plugin_timeout_ms") {
        c.plugin_timeout_ms = static_cast<int>(as_integer(key, value));
    } else if (key == "templates") {
        c.templates.clear();
        for (const auto part : split(value, ',')) {
            const auto t = trim(part);
            if (!t.empty()) {
                c.templates.emplace_back(std::string(t));
            }
        }
    } else if (key == "template_stride") {
        c.template_stride = static_cast<int>(as_integer(key, value));
    } else if (key == "compensate") {
        c.compensate = as_bool(key, value);
    } else if (key == "window") {
        c.window = static_cast<int>(as_integer(key, value));
    } else if (key == "backgrounds") {
        c.backgrounds = v;
    } else if (key == "assets") {
        c.assets = v;
    } else if (key == "frames") {
        c.frames = v;
    } else if (key == "out") {
        c.out = v;
    } else if (key == "threads") {
        const auto t = as_integer(key, value);
        if (t < 0) {
            throw ConfigError("threads must be non-negative");
        }
        c.threads = static_cast<unsigned>(t);
    } else if (key == "voc_xml") {
        c.voc_xml = as_bool(key, value);
    } else {
        throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
}

void RunConfig::validate() const {
    try {
        fusion.validate();
        policy.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (window < 0) {
        throw ConfigError("window must be non-negative");
    }
    if (template_stride < 1) {
        throw ConfigError("template_stride must be at least 1");
    }
    if (plugin_timeout_ms < 1) {
        throw ConfigError("plugin_timeout_ms must be positive");
    }
    if (detector == DetectorChoice::external && detector_command.empty()) {
        throw ConfigError("detector = external needs detector_cmd");
    }
    if (tracker == TrackerChoice::external && tracker_command.empty()) {
        throw ConfigError("tracker = external needs tracker_cmd");
    }
    check_exists(backgrounds, "background manifest");
    check_exists(assets, "asset manifest");
    check_exists(frames, "frames directory");
    for (const auto& t : templates) {
        check_exists(t, "template");
    }
}

RunConfig parse_config(std::string_view text, const fs::path& base_dir, std::string_view source) {
    RunConfig config;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const auto body = trim(std::string_view(line).substr(0, hash));
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        const auto where = std::string(source) + ":" + std::to_string(line_no) + ": ";
        if (eq == std::string_view::npos) {
            throw ConfigError(where + "expected 'key = value'");
        }
        const auto key = trim(body.substr(0, eq));
        const auto value = trim(body.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(where + "empty key");
        }
        try {
            apply_setting(config, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    if (!base_dir.empty()) {
        const auto resolve = [&](fs::path& p) {
            if (!p.empty() && p.is_relative()) {
                p = base_dir / p;
            }
        };
        resolve(config.backgrounds);
        resolve(config.assets);
        resolve(config.frames);
        resolve(config.out);
        for (auto& t : config.templates) {
            resolve(t);
        }
    }
    return config;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.parent_path(), path.string());
}

}  // namespace dronemon
