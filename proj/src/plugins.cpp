#include "dronemon/plugins.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "dronemon/eval.hpp"

namespace dronemon {

const char* to_string(PluginError::Kind kind) {
    switch (kind) {
        case PluginError::Kind::protocol_violation: return "protocol-violation";
        case PluginError::Kind::timeout: return "timeout";
        case PluginError::Kind::child_exited: return "child-exited";
        case PluginError::Kind::remote_error: return "remote-error";
        case PluginError::Kind::startup_failure: return "startup-failure";
        case PluginError::Kind::not_initialized: return "not-initialized";
        case PluginError::Kind::invalid_input: return "invalid-input";
    }
    return "unknown";
}

double masked_ncc(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) {
        return 0.0;
    }
    const double n = static_cast<double>(a.size());
    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double num = 0.0;
    double va = 0.0;
    double vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        num += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va <= 1e-12 || vb <= 1e-12) {
        return 0.0;
    }
    return std::clamp(num / std::sqrt(va * vb), -1.0, 1.0);
}

std::vector<ScoredBox> clip_and_sort(std::vector<ScoredBox> boxes, int width, int height) {
    std::vector<ScoredBox> out;
    out.reserve(boxes.size());
    for (auto& b : boxes) {
        if (auto clipped = clip_to_frame(b.box, width, height)) {
            b.box = *clipped;
            out.push_back(b);
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const ScoredBox& a, const ScoredBox& b) { return a.score > b.score; });
    return out;
}

// --- template detector ---------------------------------------------------------

TemplateDetector::TemplateDetector(std::vector<ForegroundAsset> templates,
                                   TemplateDetectorOptions options)
    : options_(std::move(options)) {
    if (templates.empty()) {
        throw PluginError(PluginError::Kind::invalid_input, "template detector: no templates");
    }
    if (options_.stride < 1 || options_.scales.empty() || options_.top_k == 0) {
        throw PluginError(PluginError::Kind::invalid_input,
                          "template detector: stride, scales and top_k must be positive");
    }
    for (const auto& t : templates) {
        validate_asset(t);
        for (const double s : options_.scales) {
            if (!(s > 0.0)) {
                throw PluginError(PluginError::Kind::invalid_input,
                                  "template detector: scales must be positive");
            }
            ForegroundAsset scaled;
            try {
                scaled = transform_foreground(t, AffineTransform(0.0, s, s));
            } catch (const AugmentError&) {
                continue;
            }
            const ImageBuffer& img = scaled.sprite;
            Pattern p;
            p.width = img.width();
            p.height = img.height();
            double mean = 0.0;
            for (int y = 0; y < img.height(); ++y) {
                for (int x = 0; x < img.width(); ++x) {
                    if (img.at(x, y, 3) == 0) {
                        continue;
                    }
                    p.offsets_x.push_back(x);
                    p.offsets_y.push_back(y);
                    const double l = luma(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
                    p.centered.push_back(l);
                    mean += l;
                }
            }
            mean /= static_cast<double>(p.centered.size());
            double ss = 0.0;
            for (auto& v : p.centered) {
                v -= mean;
                ss += v * v;
            }
            p.norm = std::sqrt(ss);
            // A flat template correlates with nothing.
            if (p.norm > 1e-9) {
                patterns_.push_back(std::move(p));
            }
        }
    }
    if (patterns_.empty()) {
        throw PluginError(PluginError::Kind::invalid_input,
                          "template detector: every template is flat or vanishes when scaled");
    }
}

double TemplateDetector::score_at(const Pattern& p, const std::vector<std::uint8_t>& luma_img,
                                  int stride_w, int x, int y) const {
    double sum = 0.0;
    double sum_sq = 0.0;
    double cross = 0.0;
    const std::size_t n = p.centered.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double w =
            luma_img[static_cast<std::size_t>(y + p.offsets_y[i]) * stride_w + x + p.offsets_x[i]];
        sum += w;
        sum_sq += w * w;
        cross += p.centered[i] * w;
    }
    const double var = sum_sq - sum * sum / static_cast<double>(n);
    if (var <= 1e-9) {
        return 0.0;
    }
    return std::clamp(cross / (p.norm * std::sqrt(var)), -1.0, 1.0);
}

std::vector<ScoredBox> TemplateDetector::detect(const ImageBuffer& image,
                                                const std::optional<BBox>& roi) {
    const int iw = image.width();
    const int ih = image.height();
    const bool fits_somewhere = std::any_of(patterns_.begin(), patterns_.end(), [&](const Pattern& p) {
        return p.width <= iw && p.height <= ih;
    });
    if (!fits_somewhere) {
        throw PluginError(PluginError::Kind::invalid_input,
                          "template detector: every template is larger than the image");
    }
    int rx0 = 0;
    int ry0 = 0;
    int rx1 = iw;
    int ry1 = ih;
    if (roi) {
        const auto clipped = clip_to_frame(*roi, iw, ih);
        if (!clipped) {
            return {};
        }
        rx0 = static_cast<int>(std::floor(clipped->x));
        ry0 = static_cast<int>(std::floor(clipped->y));
        rx1 = static_cast<int>(std::ceil(clipped->right()));
        ry1 = static_cast<int>(std::ceil(clipped->bottom()));
    }
    const auto lum = luma_plane(image);

    struct Hit {
        double score;
        std::size_t pattern;
        int x;
        int y;
    };
    const auto hit_box = [&](const Hit& h) {
        const Pattern& p = patterns_[h.pattern];
        return BBox{static_cast<double>(h.x), static_cast<double>(h.y),
                    static_cast<double>(p.width), static_cast<double>(p.height)};
    };
    // Descending score; position breaks ties so results never depend on scan order.
    const auto order = [](const Hit& a, const Hit& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.y != b.y) return a.y < b.y;
        if (a.x != b.x) return a.x < b.x;
        return a.pattern < b.pattern;
    };
    const auto suppress = [&](std::vector<Hit>& hits, std::size_t keep) {
        std::sort(hits.begin(), hits.end(), order);
        std::vector<Hit> kept;
        for (const auto& h : hits) {
            if (kept.size() >= keep) {
                break;
            }
            const BBox b = hit_box(h);
            const bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const Hit& k) {
                return iou(b, hit_box(k)) >= options_.nms_iou;
            });
            if (!overlaps) {
                kept.push_back(h);
            }
        }
        hits = std::move(kept);
    };

    std::vector<Hit> coarse;
    const int stride = options_.stride;
    for (std::size_t pi = 0; pi < patterns_.size(); ++pi) {
        const Pattern& p = patterns_[pi];
        for (int y = ry0; y + p.height <= ry1; y += stride) {
            for (int x = rx0; x + p.width <= rx1; x += stride) {
                const double s = score_at(p, lum, iw, x, y);
                if (s > 0.0) {
                    coarse.push_back({s, pi, x, y});
                }
            }
        }
    }
    suppress(coarse, options_.top_k * 4);

    std::vector<Hit> refined;
    for (const auto& h : coarse) {
        const Pattern& p = patterns_[h.pattern];
        Hit best = h;
        for (int y = std::max(ry0, h.y - stride + 1); y <= std::min(ry1 - p.height, h.y + stride - 1); ++y) {
            for (int x = std::max(rx0, h.x - stride + 1); x <= std::min(rx1 - p.width, h.x + stride - 1); ++x) {
                const Hit cand{score_at(p, lum, iw, x, y), h.pattern, x, y};
                if (order(cand, best)) {
                    best = cand;
                }
            }
        }
        refined.push_back(best);
    }
    suppress(refined, options_.top_k);

    std::vector<ScoredBox> out;
    for (const auto& h : refined) {
        out.push_back({hit_box(h), h.score, ScoreSource::detector});
    }
    return clip_and_sort(std::move(out), iw, ih);
}

// --- residual blob tracker -------------------------------------------------------

BBox ResidualBlobTracker::init(const ImageBuffer&, const BBox& box) {
    if (!box.valid()) {
        throw PluginError(PluginError::Kind::invalid_input,
                          "blob tracker: initial box must have positive size");
    }
    box_ = box;
    return box;
}

ScoredBox ResidualBlobTracker::update(const ImageBuffer& residual) {
    if (!box_) {
        throw PluginError(PluginError::Kind::not_initialized, "blob tracker: update before init");
    }
    const BBox prev = *box_;
    const ScoredBox lost{prev, 0.0, ScoreSource::tracker};
    const auto region = clip_to_frame(scale_about_center(prev, options_.search_factor),
                                      residual.width(), residual.height());
    if (!region) {
        return lost;
    }
    const int x0 = static_cast<int>(std::floor(region->x));
    const int y0 = static_cast<int>(std::floor(region->y));
    const int x1 = static_cast<int>(std::ceil(region->right()));
    const int y1 = static_cast<int>(std::ceil(region->bottom()));
    const int rw = x1 - x0;
    const int rh = y1 - y0;

    std::vector<std::uint8_t> mask(static_cast<std::size_t>(rw) * rh, 0);
    for (int y = 0; y < rh; ++y) {
        for (int x = 0; x < rw; ++x) {
            const int l = luma(residual.at(x0 + x, y0 + y, 0), residual.at(x0 + x, y0 + y, 1),
                               residual.at(x0 + x, y0 + y, 2));
            mask[static_cast<std::size_t>(y) * rw + x] = l > options_.threshold ? 1 : 0;
        }
    }

    // Largest 8-connected component; raster order decides ties.
    std::vector<int> label(mask.size(), 0);
    int next_label = 0;
    std::size_t best_count = 0;
    int bx0 = 0, by0 = 0, bx1 = -1, by1 = -1;
    std::deque<int> queue;
    for (int start = 0; start < rw * rh; ++start) {
        if (!mask[static_cast<std::size_t>(start)] || label[static_cast<std::size_t>(start)]) {
            continue;
        }
        ++next_label;
        std::size_t count = 0;
        int cx0 = rw, cy0 = rh, cx1 = -1, cy1 = -1;
        label[static_cast<std::size_t>(start)] = next_label;
        queue.push_back(start);
        while (!queue.empty()) {
            const int idx = queue.front();
            queue.pop_front();
            const int px = idx % rw;
            const int py = idx / rw;
            ++count;
            cx0 = std::min(cx0, px);
            cy0 = std::min(cy0, py);
            cx1 = std::max(cx1, px);
            cy1 = std::max(cy1, py);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = px + dx;
                    const int ny = py + dy;
                    if (nx < 0 || ny < 0 || nx >= rw || ny >= rh) {
                        continue;
                    }
                    const auto n = static_cast<std::size_t>(ny) * rw + nx;
                    if (mask[n] && !label[n]) {
                        label[n] = next_label;
                        queue.push_back(static_cast<int>(n));
                    }
                }
            }
        }
        if (count > best_count) {
            best_count = count;
            bx0 = cx0;
            by0 = cy0;
            bx1 = cx1;
            by1 = cy1;
        }
    }
    if (best_count == 0) {
        return lost;
    }

    const double comp_w = bx1 - bx0 + 1;
    const double comp_h = by1 - by0 + 1;
    const double comp_area = comp_w * comp_h;
    const double cx = x0 + bx0 + 0.5 * comp_w;
    const double cy = y0 + by0 + 0.5 * comp_h;
    const double w = 0.5 * comp_w + 0.5 * prev.w;
    const double h = 0.5 * comp_h + 0.5 * prev.h;
    const BBox moved{cx - 0.5 * w, cy - 0.5 * h, w, h};

    const double fill = static_cast<double>(best_count) / comp_area;
    const double coverage = std::min(1.0, comp_area / prev.area());
    const double score = std::clamp(fill * coverage, 0.0, 1.0);

    const auto clipped = clip_to_frame(moved, residual.width(), residual.height());
    if (!clipped) {
        return lost;
    }
    box_ = *clipped;
    return {*clipped, score, ScoreSource::tracker};
}

}  // namespace dronemon
