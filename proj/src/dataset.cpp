#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <locale>
#include <mutex>
#include <thread>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "dronemon/augment.hpp"
#include "dronemon/image_io.hpp"
#include "dronemon/random.hpp"
#include "dronemon/text.hpp"

namespace fs = std::filesystem;

namespace dronemon {

namespace {

constexpr std::uint64_t kBackgroundStream = 0x6261636b67726e64ULL;

const char* shadow_name(const std::optional<ShadowMode>& mode) {
    if (!mode) {
        return "none";
    }
    return *mode == ShadowMode::lines ? "lines" : "perlin";
}

std::string blur_description(const std::optional<BlurKind>& kind) {
    if (!kind) {
        return "none";
    }
    if (const auto* g = std::get_if<GaussianBlur>(&*kind)) {
        return "gaussian:" + format_fixed(g->sigma, 4);
    }
    const auto& m = std::get<MotionBlur>(*kind);
    return "motion:" + format_fixed(m.length, 4) + "@" + format_fixed(m.angle_deg, 4);
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw AugmentError("cannot create output directory " + dir.string() + ": " + ec.message());
    }
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw AugmentError("cannot write " + path.string());
    }
    out.imbue(std::locale::classic());
    return out;
}

}  // namespace

std::vector<fs::path> read_manifest(const fs::path& manifest) {
    std::ifstream in(manifest);
    if (!in) {
        throw AugmentError("cannot read manifest " + manifest.string());
    }
    std::vector<fs::path> entries;
    std::string line;
    while (std::getline(in, line)) {
        const auto entry = trim(line);
        if (entry.empty() || entry.front() == '#') {
            continue;
        }
        fs::path p{std::string(entry)};
        if (p.is_relative()) {
            p = manifest.parent_path() / p;
        }
        entries.push_back(std::move(p));
    }
    if (entries.empty()) {
        throw AugmentError("manifest " + manifest.string() + " lists no files");
    }
    return entries;
}

void write_manifest(const fs::path& manifest, std::span<const fs::path> entries) {
    auto out = open_output(manifest);
    for (const auto& e : entries) {
        out << e.generic_string() << '\n';
    }
    if (!out) {
        throw AugmentError("cannot write " + manifest.string());
    }
}

std::string format_annotation_line(const fs::path& image, std::span<const BBox> boxes) {
    std::string line = image.generic_string();
    for (const auto& b : boxes) {
        line += ' ';
        line += format_fixed(b.x, 2) + ',' + format_fixed(b.y, 2) + ',' + format_fixed(b.w, 2) +
                ',' + format_fixed(b.h, 2);
    }
    return line;
}

void write_voc_annotation(const fs::path& xml_path, const std::string& filename, int width,
                          int height, std::span<const BBox> boxes) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    tree.put("annotation.folder", "images");
    tree.put("annotation.filename", filename);
    tree.put("annotation.source.database", "synthetic");
    tree.put("annotation.size.width", width);
    tree.put("annotation.size.height", height);
    tree.put("annotation.size.depth", 3);
    tree.put("annotation.segmented", 0);
    for (const auto& b : boxes) {
        pt::ptree object;
        object.put("name", "drone");
        object.put("pose", "Unspecified");
        object.put("truncated", 0);
        object.put("difficult", 0);
        // VOC boxes are 1-based inclusive pixel indices.
        object.put("bndbox.xmin", static_cast<long>(std::lround(b.x)) + 1);
        object.put("bndbox.ymin", static_cast<long>(std::lround(b.y)) + 1);
        object.put("bndbox.xmax", static_cast<long>(std::lround(b.right())));
        object.put("bndbox.ymax", static_cast<long>(std::lround(b.bottom())));
        tree.add_child("annotation.object", object);
    }
    try {
        pt::write_xml(xml_path.string(), tree, std::locale::classic(),
                      pt::xml_writer_make_settings<std::string>(' ', 2));
    } catch (const pt::xml_parser_error& e) {
        throw AugmentError(std::string("cannot write VOC annotation: ") + e.what());
    }
}

ForegroundAsset load_asset(const fs::path& path) {
    ImageBuffer img;
    try {
        img = read_image(path);
    } catch (const ImageIoError& e) {
        throw AugmentError(std::string("unreadable asset: ") + e.what());
    }
    return make_asset(std::move(img), path.filename().string());
}

DatasetManifest generate_dataset(std::span<const fs::path> backgrounds,
                                 std::span<const fs::path> assets,
                                 const AugmentationPolicy& policy, std::size_t n,
                                 const fs::path& out_dir, const DatasetOptions& options) {
    policy.validate();
    if (backgrounds.empty() || assets.empty()) {
        throw AugmentError("generate_dataset: background and asset manifests must be non-empty");
    }
    if (n == 0) {
        throw AugmentError("generate_dataset: sample count must be at least 1");
    }

    std::vector<ImageBuffer> bg_images;
    bg_images.reserve(backgrounds.size());
    for (const auto& p : backgrounds) {
        try {
            bg_images.push_back(to_rgb(read_image(p)));
        } catch (const ImageIoError& e) {
            throw AugmentError(std::string("unreadable background: ") + e.what());
        }
    }
    std::vector<ForegroundAsset> fg;
    fg.reserve(assets.size());
    for (const auto& p : assets) {
        fg.push_back(load_asset(p));
    }

    const fs::path image_dir = out_dir / "images";
    ensure_directory(image_dir);
    if (options.write_voc_xml) {
        ensure_directory(out_dir / "voc");
    }

    DatasetManifest manifest;
    manifest.root = out_dir;
    manifest.annotation_file = out_dir / "annotations.txt";
    manifest.manifest_file = out_dir / "manifest.txt";
    manifest.provenance_file = out_dir / "provenance.csv";
    manifest.records.resize(n);

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::size_t error_index = n;
    std::exception_ptr error;

    const auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                Rng pick(derive_seed(policy.seed ^ kBackgroundStream, i));
                const auto bg_index = static_cast<std::size_t>(
                    pick.uniform_int(0, static_cast<std::int64_t>(bg_images.size()) - 1));
                AnnotatedSample sample = composite_sample(bg_images[bg_index], fg, policy, i);
                const std::string name = frame_file_name(i + 1);
                write_png(image_dir / name, sample.image);
                if (options.write_voc_xml) {
                    fs::path xml = out_dir / "voc" / name;
                    xml.replace_extension(".xml");
                    write_voc_annotation(xml, name, sample.image.width(), sample.image.height(),
                                         sample.boxes);
                }
                DatasetRecord& rec = manifest.records[i];
                rec.image = fs::path("images") / name;
                rec.background_index = bg_index;
                rec.width = sample.image.width();
                rec.height = sample.image.height();
                rec.boxes = std::move(sample.boxes);
                rec.provenance = std::move(sample.provenance);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
    };

    unsigned threads = options.threads != 0 ? options.threads : std::thread::hardware_concurrency();
    threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(std::min<std::size_t>(n, 64)));
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        worker();
    }
    if (error) {
        try {
            std::rethrow_exception(error);
        } catch (const ImageIoError& e) {
            throw AugmentError(std::string("cannot write dataset image: ") + e.what());
        }
    }

    {
        auto out = open_output(manifest.annotation_file);
        for (const auto& rec : manifest.records) {
            out << format_annotation_line(rec.image, rec.boxes) << '\n';
        }
        if (!out) {
            throw AugmentError("cannot write " + manifest.annotation_file.string());
        }
    }
    {
        std::vector<fs::path> paths;
        paths.reserve(n);
        for (const auto& rec : manifest.records) {
            paths.push_back(rec.image);
        }
        write_manifest(manifest.manifest_file, paths);
    }
    {
        auto out = open_output(manifest.provenance_file);
        out << "image,background,drone,asset,rotation_deg,width_fraction,scale,x,y,attempts,"
               "shadow,monochrome,blur\n";
        for (const auto& rec : manifest.records) {
            for (std::size_t d = 0; d < rec.provenance.drones.size(); ++d) {
                const auto& p = rec.provenance.drones[d];
                out << rec.image.generic_string() << ',' << rec.background_index << ',' << d << ','
                    << p.source_id << ',' << format_fixed(p.rotation_deg, 6) << ','
                    << format_fixed(p.width_fraction, 6) << ',' << format_fixed(p.scale, 6) << ','
                    << p.x << ',' << p.y << ',' << p.attempts << ',' << shadow_name(p.shadow)
                    << ',' << (p.monochrome ? 1 : 0) << ',' << blur_description(p.blur) << '\n';
            }
        }
        if (!out) {
            throw AugmentError("cannot write " + manifest.provenance_file.string());
        }
    }
    return manifest;
}

}  // namespace dronemon
