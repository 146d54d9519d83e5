#include "dronemon/residual.hpp"

#include <algorithm>
#include <cstdlib>
#include <regex>
#include <string>

#include "dronemon/image_io.hpp"

namespace fs = std::filesystem;

namespace dronemon {

namespace {

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* who) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw ResidualError(std::string(who) + ": frame dimensions differ (" +
                            std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
                            std::to_string(b.width()) + "x" + std::to_string(b.height()) + ")");
    }
}

// a/na < b/nb without division. a <= 255*na, so the products fit in 64 bits
// for any frame under ~2.7e8 pixels.
bool mean_less(std::uint64_t a, std::uint64_t na, std::uint64_t b, std::uint64_t nb) {
    return a * nb < b * na;
}

bool mean_equal(std::uint64_t a, std::uint64_t na, std::uint64_t b, std::uint64_t nb) {
    return a * nb == b * na;
}

bool tie_preferred(int dx, int dy, int bx, int by) {
    const int l1 = std::abs(dx) + std::abs(dy);
    const int bl1 = std::abs(bx) + std::abs(by);
    if (l1 != bl1) {
        return l1 < bl1;
    }
    if (dy != by) {
        return dy < by;
    }
    return dx < bx;
}

}  // namespace

TranslationEstimate estimate_translation(const ImageBuffer& prev, const ImageBuffer& cur,
                                         int window) {
    require_same_shape(prev, cur, "estimate_translation");
    if (window < 0) {
        throw ResidualError("estimate_translation: window must be non-negative");
    }
    const int w = cur.width();
    const int h = cur.height();
    if (cur.pixel_count() > 250'000'000) {
        throw ResidualError("estimate_translation: frame too large");
    }
    window = std::min(window, std::max(w, h) - 1);
    const auto lp = luma_plane(prev);
    const auto lc = luma_plane(cur);

    TranslationEstimate best;
    bool have = false;
    for (int dy = -window; dy <= window; ++dy) {
        for (int dx = -window; dx <= window; ++dx) {
            const int x0 = std::max(0, dx);
            const int x1 = std::min(w, w + dx);
            const int y0 = std::max(0, dy);
            const int y1 = std::min(h, h + dy);
            if (x1 <= x0 || y1 <= y0) {
                continue;
            }
            std::uint64_t sad = 0;
            for (int y = y0; y < y1; ++y) {
                const std::uint8_t* c = lc.data() + static_cast<std::size_t>(y) * w;
                const std::uint8_t* p = lp.data() + static_cast<std::size_t>(y - dy) * w;
                for (int x = x0; x < x1; ++x) {
                    sad += static_cast<std::uint64_t>(std::abs(int{c[x]} - int{p[x - dx]}));
                }
            }
            const auto overlap = static_cast<std::uint64_t>(x1 - x0) * (y1 - y0);
            const bool better =
                !have || mean_less(sad, overlap, best.sad, best.overlap) ||
                (mean_equal(sad, overlap, best.sad, best.overlap) &&
                 tie_preferred(dx, dy, best.dx, best.dy));
            if (better) {
                best = {dx, dy, sad, overlap};
                have = true;
            }
        }
    }
    return best;
}

ImageBuffer shift_image(const ImageBuffer& img, int dx, int dy) {
    if (dx == 0 && dy == 0) {
        return img;
    }
    ImageBuffer out(img.width(), img.height(), img.channels());
    const int ch = img.channels();
    for (int y = 0; y < img.height(); ++y) {
        const int sy = std::clamp(y - dy, 0, img.height() - 1);
        for (int x = 0; x < img.width(); ++x) {
            const int sx = std::clamp(x - dx, 0, img.width() - 1);
            for (int c = 0; c < ch; ++c) {
                out.at(x, y, c) = img.at(sx, sy, c);
            }
        }
    }
    return out;
}

ImageBuffer residual_frame(const ImageBuffer& prev, const ImageBuffer& cur, bool compensate,
                           int window) {
    require_same_shape(prev, cur, "residual_frame");
    const ImageBuffer* aligned = &prev;
    ImageBuffer shifted;
    if (compensate) {
        const auto t = estimate_translation(prev, cur, window);
        if (t.dx != 0 || t.dy != 0) {
            shifted = shift_image(prev, t.dx, t.dy);
            aligned = &shifted;
        }
    }
    ImageBuffer out(cur.width(), cur.height(), 3);
    for (int y = 0; y < cur.height(); ++y) {
        for (int x = 0; x < cur.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
                out.at(x, y, c) =
                    static_cast<std::uint8_t>(std::abs(int{cur.at(x, y, c)} - int{aligned->at(x, y, c)}));
            }
        }
    }
    return out;
}

std::vector<ImageBuffer> residual_frames(const std::vector<ImageBuffer>& frames, bool compensate,
                                         int window) {
    std::vector<ImageBuffer> out;
    out.reserve(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const ImageBuffer& prev = i == 0 ? frames[0] : frames[i - 1];
        out.push_back(residual_frame(prev, frames[i], compensate, window));
    }
    return out;
}

std::vector<fs::path> list_frames(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw ResidualError("frame directory does not exist: " + dir.string());
    }
    static const std::regex numbered(R"(\d{6}\.png)");
    std::vector<fs::path> frames;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() &&
            std::regex_match(entry.path().filename().string(), numbered)) {
            frames.push_back(entry.path());
        }
    }
    std::sort(frames.begin(), frames.end());
    return frames;
}

std::size_t residual_sequence(const fs::path& frames_dir, bool compensate, int window,
                              const fs::path& out_dir) {
    const auto paths = list_frames(frames_dir);
    if (paths.empty()) {
        throw ResidualError("no numbered frames in " + frames_dir.string());
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw ResidualError("cannot create " + out_dir.string() + ": " + ec.message());
    }
    ImageBuffer prev;
    for (const auto& p : paths) {
        ImageBuffer cur;
        try {
            cur = to_rgb(read_image(p));
        } catch (const ImageIoError& e) {
            throw ResidualError(std::string("unreadable frame: ") + e.what());
        }
        if (prev.empty()) {
            prev = cur;
        }
        write_png(out_dir / p.filename(), residual_frame(prev, cur, compensate, window));
        prev = std::move(cur);
    }
    return paths.size();
}

}  // namespace dronemon
