#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dronemon/augment.hpp"
#include "dronemon/config.hpp"
#include "dronemon/eval.hpp"
#include "dronemon/external.hpp"
#include "dronemon/image_io.hpp"
#include "dronemon/pipeline.hpp"
#include "dronemon/plugins.hpp"
#include "dronemon/residual.hpp"
#include "dronemon/simulate.hpp"
#include "dronemon/text.hpp"

namespace fs = std::filesystem;
using namespace dronemon;

namespace {

struct Shared {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool quiet = false;
};

void add_shared(CLI::App* cmd, Shared& s) {
    cmd->add_option("--config", s.config, "flat key = value config file");
    cmd->add_option("--seed", s.seed, "overrides the config seed");
    cmd->add_option("--out", s.out, "output path");
    cmd->add_flag("--quiet", s.quiet, "suppress progress output");
}

RunConfig base_config(const Shared& s) {
    RunConfig c = s.config.empty() ? RunConfig{} : load_config(s.config);
    if (s.seed) {
        c.policy.seed = *s.seed;
    }
    if (!s.out.empty()) {
        c.out = s.out;
    }
    return c;
}

fs::path require_out(const RunConfig& c) {
    if (c.out.empty()) {
        throw ConfigError("no output path (use --out or 'out =' in the config)");
    }
    return c.out;
}

BBox parse_box_arg(const std::string& text) {
    const auto parts = split(text, ',');
    if (parts.size() != 4) {
        throw ConfigError("--seed-box wants x,y,w,h");
    }
    double v[4];
    for (int i = 0; i < 4; ++i) {
        const auto r = parse_real(trim(parts[i]));
        if (!r) {
            throw ConfigError("--seed-box: bad number in '" + text + "'");
        }
        v[i] = *r;
    }
    const BBox b{v[0], v[1], v[2], v[3]};
    if (!b.valid()) {
        throw ConfigError("--seed-box must have positive width and height");
    }
    return b;
}

// --- augment ------------------------------------------------------------------

struct AugmentArgs {
    Shared shared;
    std::size_t n = 0;
    std::string backgrounds;
    std::string assets;
    std::optional<unsigned> threads;
    bool voc = false;
};

int cmd_augment(const AugmentArgs& a) {
    RunConfig c = base_config(a.shared);
    if (!a.backgrounds.empty()) c.backgrounds = a.backgrounds;
    if (!a.assets.empty()) c.assets = a.assets;
    if (a.threads) c.threads = *a.threads;
    c.voc_xml = c.voc_xml || a.voc;
    if (c.backgrounds.empty()) {
        throw ConfigError("no background manifest (use --backgrounds)");
    }
    if (c.assets.empty()) {
        throw ConfigError("no asset manifest (use --assets)");
    }
    c.validate();
    const fs::path out = require_out(c);
    const auto backgrounds = read_manifest(c.backgrounds);
    const auto assets = read_manifest(c.assets);
    const auto manifest = generate_dataset(backgrounds, assets, c.policy, a.n, out,
                                           DatasetOptions{c.threads, c.voc_xml});
    if (!a.shared.quiet) {
        std::cout << "wrote " << manifest.records.size() << " samples\n"
                  << "manifest: " << manifest.manifest_file.string() << '\n'
                  << "annotations: " << manifest.annotation_file.string() << '\n';
    }
    return 0;
}

// --- simulate -----------------------------------------------------------------

struct SimulateArgs {
    Shared shared;
    bool canonical = false;
    std::string background;
    std::string sprite;
    std::string path;
};

int cmd_simulate(const SimulateArgs& a) {
    const RunConfig c = base_config(a.shared);
    const fs::path out = require_out(c);
    ImageBuffer background;
    ForegroundAsset sprite;
    TrackPath path;
    if (a.canonical) {
        Scenario s = canonical_occlusion_scenario(a.shared.seed.value_or(7));
        background = std::move(s.background);
        sprite = std::move(s.drone);
        path = std::move(s.path);
    } else {
        if (a.background.empty() || a.sprite.empty() || a.path.empty()) {
            throw ConfigError("simulate needs --canonical or all of --background, --sprite, --path");
        }
        background = read_image(a.background);
        sprite = load_asset(a.sprite);
        path = read_path_file(a.path);
    }
    const auto truth = simulate_sequence(background, sprite, path, out);
    write_png(out / "sprite.png", crop_to_opaque(sprite).sprite);
    if (!a.shared.quiet) {
        std::cout << "wrote " << truth.size() << " frames to " << out.string() << '\n'
                  << "ground truth: " << (out / "groundtruth.csv").string() << '\n';
    }
    return 0;
}

// --- residual -----------------------------------------------------------------

struct ResidualArgs {
    Shared shared;
    std::string frames;
    bool compensate = false;
    std::optional<int> window;
};

int cmd_residual(const ResidualArgs& a) {
    RunConfig c = base_config(a.shared);
    if (!a.frames.empty()) c.frames = a.frames;
    if (a.compensate) c.compensate = true;
    if (a.window) c.window = *a.window;
    if (c.frames.empty()) {
        throw ConfigError("no frames directory (use --frames)");
    }
    c.validate();
    const auto n = residual_sequence(c.frames, c.compensate, c.window, require_out(c));
    if (!a.shared.quiet) {
        std::cout << "wrote " << n << " residual frames to " << c.out.string() << '\n';
    }
    return 0;
}

// --- monitor ------------------------------------------------------------------

struct MonitorArgs {
    Shared shared;
    std::string frames;
    std::string detector;
    std::string tracker;
    bool compensate = false;
    std::optional<int> window;
    std::string seed_box;
    std::vector<std::string> templates;
    std::string detector_cmd;
    std::string tracker_cmd;
};

int cmd_monitor(const MonitorArgs& a) {
    RunConfig c = base_config(a.shared);
    if (!a.frames.empty()) c.frames = a.frames;
    if (!a.detector.empty()) c.detector = parse_detector_choice(a.detector);
    if (!a.tracker.empty()) c.tracker = parse_tracker_choice(a.tracker);
    if (a.compensate) c.compensate = true;
    if (a.window) c.window = *a.window;
    if (!a.templates.empty()) c.templates.assign(a.templates.begin(), a.templates.end());
    if (!a.detector_cmd.empty()) c.detector_command = a.detector_cmd;
    if (!a.tracker_cmd.empty()) c.tracker_command = a.tracker_cmd;
    if (c.frames.empty()) {
        throw ConfigError("no frames directory (use --frames)");
    }
    c.validate();
    const fs::path out = require_out(c);

    const auto paths = list_frames(c.frames);
    if (paths.empty()) {
        throw ResidualError("no numbered frames in " + c.frames.string());
    }

    const ExternalOptions ext{std::chrono::milliseconds(c.plugin_timeout_ms)};
    std::unique_ptr<Detector> detector;
    switch (c.detector) {
        case DetectorChoice::template_match: {
            if (c.templates.empty()) {
                throw ConfigError("template detector needs --templates");
            }
            std::vector<ForegroundAsset> templates;
            for (const auto& t : c.templates) {
                templates.push_back(load_asset(t));
            }
            TemplateDetectorOptions opts;
            opts.stride = c.template_stride;
            detector = std::make_unique<TemplateDetector>(std::move(templates), opts);
            break;
        }
        case DetectorChoice::external:
            detector = std::make_unique<ExternalDetector>(c.detector_command, ext);
            break;
        case DetectorChoice::none:
            break;
    }
    std::unique_ptr<Tracker> tracker;
    switch (c.tracker) {
        case TrackerChoice::blob:
            tracker = std::make_unique<ResidualBlobTracker>();
            break;
        case TrackerChoice::external:
            tracker = std::make_unique<ExternalTracker>(c.tracker_command, ext);
            break;
        case TrackerChoice::none:
            break;
    }

    MonitorRunOptions opts;
    opts.compensate = c.compensate;
    opts.window = c.window;
    if (!a.seed_box.empty()) {
        opts.seed_box = parse_box_arg(a.seed_box);
    }
    std::size_t next = 0;
    const auto run = run_monitor(
        [&]() -> std::optional<ImageBuffer> {
            if (next >= paths.size()) {
                return std::nullopt;
            }
            return to_rgb(read_image(paths[next++]));
        },
        detector.get(), tracker.get(), c.fusion, opts);
    write_track_file(out, run.rows);
    if (!a.shared.quiet) {
        std::cout << "frames: " << run.rows.size() << '\n'
                  << "accepted: " << run.accepted << '\n'
                  << "final mode: " << to_string(run.final_state.mode) << '\n';
        if (run.detector_faults + run.tracker_faults > 0) {
            std::cout << "plugin faults: detector " << run.detector_faults << ", tracker "
                      << run.tracker_faults << '\n';
        }
    }
    return 0;
}

// --- eval / compare -----------------------------------------------------------

struct EvalArgs {
    Shared shared;
    std::string results;
    std::string gt;
    std::string mode = "tracking";
    double iou_thresh = 0.5;
};

int cmd_eval(const EvalArgs& a) {
    if (!(a.iou_thresh > 0.0 && a.iou_thresh <= 1.0)) {
        throw ConfigError("--iou-thresh must lie in (0, 1]");
    }
    const auto results = read_track_file(a.results);
    const auto gt = read_track_file(a.gt);
    Curve curve;
    double auc = 0.0;
    if (a.mode == "tracking") {
        const auto aligned = align_tracks(results, gt);
        const auto r = success_curve(aligned.predictions, aligned.ground_truth);
        curve = r.curve;
        auc = r.auc;
    } else if (a.mode == "detection") {
        const auto grouped = group_detections(results, gt);
        const auto r = pr_curve(grouped.detections, grouped.ground_truth, a.iou_thresh);
        curve = r.curve;
        auc = r.auc;
    } else {
        throw ConfigError("--mode must be detection or tracking");
    }
    if (!a.shared.out.empty()) {
        write_curve_csv(a.shared.out, curve);
    }
    std::cout << format_fixed(auc, 5) << '\n';
    return 0;
}

struct CompareArgs {
    Shared shared;
    std::string run_a;
    std::string run_b;
    std::string gt;
};

int cmd_compare(const CompareArgs& a) {
    const auto report = compare_runs(a.run_a, a.run_b, a.gt);
    if (!a.shared.out.empty()) {
        write_compare_csv(a.shared.out, report);
    }
    std::cout << "run_a auc: " << format_fixed(report.run_a.auc, 5) << '\n'
              << "run_b auc: " << format_fixed(report.run_b.auc, 5) << '\n'
              << "difference: " << format_fixed(report.difference, 5) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"drone monitoring toolkit"};
    app.require_subcommand(1);

    AugmentArgs aug;
    auto* augment = app.add_subcommand("augment", "generate an annotated synthetic dataset");
    add_shared(augment, aug.shared);
    augment->add_option("-n,--count", aug.n, "number of samples")->required();
    augment->add_option("--backgrounds", aug.backgrounds, "manifest of background images");
    augment->add_option("--assets", aug.assets, "manifest of RGBA drone sprites");
    augment->add_option("--threads", aug.threads, "worker threads (0 = all cores)");
    augment->add_flag("--voc", aug.voc, "also write VOC XML annotations");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "render a moving-sprite sequence");
    add_shared(simulate, sim.shared);
    simulate->add_flag("--canonical", sim.canonical, "built-in occlusion scenario");
    simulate->add_option("--background", sim.background, "background image");
    simulate->add_option("--sprite", sim.sprite, "RGBA sprite");
    simulate->add_option("--path", sim.path, "path file, 'x y' or '-' per frame");

    ResidualArgs res;
    auto* residual = app.add_subcommand("residual", "write residual frames");
    add_shared(residual, res.shared);
    residual->add_option("--frames", res.frames, "directory of NNNNNN.png frames");
    residual->add_flag("--compensate", res.compensate, "align by global translation first");
    residual->add_option("--window", res.window, "translation search radius");

    MonitorArgs mon;
    auto* monitor = app.add_subcommand("monitor", "run the detect/track monitor");
    add_shared(monitor, mon.shared);
    monitor->add_option("--frames", mon.frames, "directory of NNNNNN.png frames");
    monitor->add_option("--detector", mon.detector, "template | external | none");
    monitor->add_option("--tracker", mon.tracker, "blob | external | none");
    monitor->add_flag("--compensate", mon.compensate, "motion-compensated residuals");
    monitor->add_option("--window", mon.window, "translation search radius");
    monitor->add_option("--seed-box", mon.seed_box, "x,y,w,h: start TRACKING here");
    monitor->add_option("--templates", mon.templates, "RGBA template images")->delimiter(',');
    monitor->add_option("--detector-cmd", mon.detector_cmd, "external detector command line");
    monitor->add_option("--tracker-cmd", mon.tracker_cmd, "external tracker command line");

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "score a results file against ground truth");
    add_shared(eval, ev.shared);
    eval->add_option("--results", ev.results, "results CSV")->required();
    eval->add_option("--gt", ev.gt, "ground-truth CSV")->required();
    eval->add_option("--mode", ev.mode, "detection | tracking")
        ->check(CLI::IsMember({"detection", "tracking"}));
    eval->add_option("--iou-thresh", ev.iou_thresh, "IoU for a true positive");

    CompareArgs cmp;
    auto* compare = app.add_subcommand("compare", "success curves of two runs side by side");
    add_shared(compare, cmp.shared);
    compare->add_option("--run-a", cmp.run_a, "first results CSV")->required();
    compare->add_option("--run-b", cmp.run_b, "second results CSV")->required();
    compare->add_option("--gt", cmp.gt, "ground-truth CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (augment->parsed()) return cmd_augment(aug);
        if (simulate->parsed()) return cmd_simulate(sim);
        if (residual->parsed()) return cmd_residual(res);
        if (monitor->parsed()) return cmd_monitor(mon);
        if (eval->parsed()) return cmd_eval(ev);
        if (compare->parsed()) return cmd_compare(cmp);
    } catch (const std::exception& e) {
        std::cerr << "dronemon: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
