#include "dronemon/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dronemon/random.hpp"

namespace dronemon {

void validate_asset(const ForegroundAsset& asset) {
    const auto& img = asset.sprite;
    if (img.empty() || img.channels() != 4) {
        throw AugmentError("foreground asset '" + asset.source_id + "' must be an RGBA image");
    }
    bool any_opaque = false;
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const auto a = img.data()[i * 4 + 3];
        if (a != 0 && a != 255) {
            throw AugmentError("foreground asset '" + asset.source_id + "' has non-binary alpha");
        }
        any_opaque = any_opaque || a == 255;
    }
    if (!any_opaque) {
        throw AugmentError("foreground asset '" + asset.source_id + "' has no opaque pixel");
    }
}

ForegroundAsset make_asset(ImageBuffer rgba, std::string source_id) {
    if (rgba.channels() != 4) {
        throw AugmentError("foreground asset '" + source_id + "' has no alpha channel");
    }
    auto px = rgba.data();
    for (std::size_t i = 0; i < rgba.pixel_count(); ++i) {
        auto& a = px[i * 4 + 3];
        a = a >= 128 ? 255 : 0;
        if (a == 0) {
            px[i * 4] = px[i * 4 + 1] = px[i * 4 + 2] = 0;
        }
    }
    ForegroundAsset asset{std::move(rgba), std::move(source_id)};
    validate_asset(asset);
    return asset;
}

std::optional<PixelRect> opaque_bounds(const ImageBuffer& rgba) {
    int x0 = rgba.width();
    int y0 = rgba.height();
    int x1 = -1;
    int y1 = -1;
    for (int y = 0; y < rgba.height(); ++y) {
        for (int x = 0; x < rgba.width(); ++x) {
            if (rgba.at(x, y, 3) != 0) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
        }
    }
    if (x1 < 0) {
        return std::nullopt;
    }
    return PixelRect{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

ForegroundAsset crop_to_opaque(const ForegroundAsset& asset) {
    const auto bounds = opaque_bounds(asset.sprite);
    if (!bounds) {
        throw AugmentError("foreground asset '" + asset.source_id + "' has no opaque pixel");
    }
    if (bounds->w == asset.sprite.width() && bounds->h == asset.sprite.height()) {
        return asset;
    }
    ImageBuffer out(bounds->w, bounds->h, 4);
    for (int y = 0; y < bounds->h; ++y) {
        for (int x = 0; x < bounds->w; ++x) {
            for (int c = 0; c < 4; ++c) {
                out.at(x, y, c) = asset.sprite.at(bounds->x + x, bounds->y + y, c);
            }
        }
    }
    return {std::move(out), asset.source_id};
}

ForegroundAsset transform_foreground(const ForegroundAsset& asset, const AffineTransform& t) {
    const ImageBuffer& src = asset.sprite;
    if (src.channels() != 4) {
        throw AugmentError("transform_foreground: sprite must be RGBA");
    }
    const double scaled_w = src.width() * t.scale_x();
    const double scaled_h = src.height() * t.scale_y();
    const double theta = t.rotation() * std::numbers::pi / 180.0;
    const double cos_t = std::cos(theta);
    const double sin_t = std::sin(theta);

    int out_w = 0;
    int out_h = 0;
    double sx = t.scale_x();
    double sy = t.scale_y();
    if (t.rotation() == 0.0) {
        // Integral canvas; the effective scale is snapped to it so identity
        // and integer scales land exactly on pixel centers.
        out_w = static_cast<int>(std::lround(scaled_w));
        out_h = static_cast<int>(std::lround(scaled_h));
        sx = static_cast<double>(out_w) / src.width();
        sy = static_cast<double>(out_h) / src.height();
        if (out_w == src.width() && out_h == src.height()) {
            validate_asset(asset);
            return asset;
        }
    } else {
        const double bw = std::fabs(scaled_w * cos_t) + std::fabs(scaled_h * sin_t);
        const double bh = std::fabs(scaled_w * sin_t) + std::fabs(scaled_h * cos_t);
        out_w = static_cast<int>(std::ceil(bw - 1e-9));
        out_h = static_cast<int>(std::ceil(bh - 1e-9));
    }
    if (out_w < 1 || out_h < 1) {
        throw AugmentError("transform_foreground: scale leaves '" + asset.source_id +
                           "' with zero pixels");
    }

    const double eff_w = src.width() * sx;
    const double eff_h = src.height() * sy;
    ImageBuffer out(out_w, out_h, 4);
    for (int v = 0; v < out_h; ++v) {
        for (int u = 0; u < out_w; ++u) {
            const double dx = u + 0.5 - 0.5 * out_w;
            const double dy = v + 0.5 - 0.5 * out_h;
            // Inverse rotation into the scaled, unrotated sprite frame.
            const double p = cos_t * dx + sin_t * dy;
            const double q = -sin_t * dx + cos_t * dy;
            const double xs = (p + 0.5 * eff_w) / sx - 0.5;
            const double ys = (q + 0.5 * eff_h) / sy - 0.5;

            const int x0 = static_cast<int>(std::floor(xs));
            const int y0 = static_cast<int>(std::floor(ys));
            const double fx = xs - x0;
            const double fy = ys - y0;
            double alpha = 0.0;
            double rgb[3] = {0.0, 0.0, 0.0};
            for (int k = 0; k < 4; ++k) {
                const int xi = x0 + (k & 1);
                const int yi = y0 + (k >> 1);
                const double wgt = ((k & 1) ? fx : 1.0 - fx) * ((k >> 1) ? fy : 1.0 - fy);
                if (wgt == 0.0 || xi < 0 || yi < 0 || xi >= src.width() || yi >= src.height()) {
                    continue;
                }
                const double a = wgt * src.at(xi, yi, 3);
                alpha += a;
                for (int c = 0; c < 3; ++c) {
                    rgb[c] += a * src.at(xi, yi, c);
                }
            }
            if (std::lround(alpha) >= 128) {
                for (int c = 0; c < 3; ++c) {
                    out.at(u, v, c) = static_cast<std::uint8_t>(
                        std::clamp(std::lround(rgb[c] / alpha), 0L, 255L));
                }
                out.at(u, v, 3) = 255;
            }
        }
    }
    ForegroundAsset result{std::move(out), asset.source_id};
    if (!opaque_bounds(result.sprite)) {
        throw AugmentError("transform_foreground: no opaque pixel survives resampling of '" +
                           asset.source_id + "'");
    }
    return result;
}

void AugmentationPolicy::validate() const {
    const auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!(rotation_range.first < rotation_range.second)) {
        throw AugmentError("augmentation policy: rotation range must be non-empty");
    }
    if (!(scale_range.first > 0.0 && scale_range.first < scale_range.second)) {
        throw AugmentError("augmentation policy: scale range must be non-empty and positive");
    }
    if (!prob_ok(shadow_probability) || !prob_ok(monochrome_probability) ||
        !prob_ok(blur_probability)) {
        throw AugmentError("augmentation policy: probabilities must lie in [0, 1]");
    }
    if (drones_per_image < 1 || drones_per_image > 254) {
        throw AugmentError("augmentation policy: drones_per_image must be in [1, 254]");
    }
}

namespace {

// Writes the opaque pixels of `sprite` at (x, y) and labels them in `coverage`.
void paste(ImageBuffer& canvas, std::vector<std::uint8_t>& coverage, const ImageBuffer& sprite,
           int x, int y, std::uint8_t label) {
    for (int v = 0; v < sprite.height(); ++v) {
        for (int u = 0; u < sprite.width(); ++u) {
            if (sprite.at(u, v, 3) == 0) {
                continue;
            }
            for (int c = 0; c < 3; ++c) {
                canvas.at(x + u, y + v, c) = sprite.at(u, v, c);
            }
            coverage[static_cast<std::size_t>(y + v) * canvas.width() + x + u] = label;
        }
    }
}

// Open interval draw; the lower end of [lo, hi) is redrawn.
double uniform_open(Rng& rng, double lo, double hi) {
    double v = rng.uniform(lo, hi);
    while (v <= lo) {
        v = rng.uniform(lo, hi);
    }
    return v;
}

}  // namespace

AnnotatedSample paste_foreground(const ImageBuffer& background, const ForegroundAsset& asset,
                                 const AffineTransform& t) {
    const ForegroundAsset sprite = crop_to_opaque(
        transform_foreground(asset, AffineTransform(t.rotation(), t.scale_x(), t.scale_y())));
    const int x = static_cast<int>(std::lround(t.translate_x()));
    const int y = static_cast<int>(std::lround(t.translate_y()));
    const int w = sprite.sprite.width();
    const int h = sprite.sprite.height();
    if (x < 0 || y < 0 || x + w > background.width() || y + h > background.height()) {
        throw AugmentError("paste_foreground: sprite does not fit inside the background");
    }
    AnnotatedSample sample;
    sample.image = to_rgb(background);
    sample.coverage.assign(background.pixel_count(), 0);
    paste(sample.image, sample.coverage, sprite.sprite, x, y, 1);
    sample.boxes.push_back(BBox{static_cast<double>(x), static_cast<double>(y),
                                static_cast<double>(w), static_cast<double>(h)});
    DronePlacement placement;
    placement.source_id = asset.source_id;
    placement.rotation_deg = t.rotation();
    placement.scale = t.scale_x();
    placement.width_fraction = static_cast<double>(w) / background.width();
    placement.x = x;
    placement.y = y;
    sample.provenance.drones.push_back(std::move(placement));
    return sample;
}

AnnotatedSample composite_sample(const ImageBuffer& background,
                                 std::span<const ForegroundAsset> assets,
                                 const AugmentationPolicy& policy, std::uint64_t sample_index) {
    policy.validate();
    if (background.width() < 64 || background.height() < 64) {
        throw AugmentError("composite_sample: background must be at least 64x64");
    }
    if (assets.empty()) {
        throw AugmentError("composite_sample: no foreground assets");
    }
    constexpr int kMaxAttempts = 10;

    Rng rng(derive_seed(policy.seed, sample_index));
    AnnotatedSample sample;
    sample.image = to_rgb(background);
    sample.coverage.assign(background.pixel_count(), 0);
    sample.provenance.seed = policy.seed;
    sample.provenance.sample_index = sample_index;

    for (int d = 0; d < policy.drones_per_image; ++d) {
        DronePlacement placement;
        placement.asset_index =
            static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(assets.size()) - 1));
        const ForegroundAsset& asset = assets[placement.asset_index];
        placement.source_id = asset.source_id;

        std::optional<ForegroundAsset> sprite;
        for (int attempt = 1; attempt <= kMaxAttempts && !sprite; ++attempt) {
            placement.attempts = attempt;
            placement.rotation_deg =
                uniform_open(rng, policy.rotation_range.first, policy.rotation_range.second);
            placement.width_fraction =
                rng.uniform(policy.scale_range.first, policy.scale_range.second);
            placement.scale =
                placement.width_fraction * background.width() / asset.sprite.width();
            // Placement is drawn on every attempt so the stream consumption is
            // independent of which attempt fails.
            const double fx = rng.uniform();
            const double fy = rng.uniform();

            ForegroundAsset candidate;
            try {
                candidate = crop_to_opaque(transform_foreground(
                    asset, AffineTransform(placement.rotation_deg, placement.scale, placement.scale)));
            } catch (const AugmentError&) {
                continue;
            }
            const int w = candidate.sprite.width();
            const int h = candidate.sprite.height();
            if (w > background.width() || h > background.height()) {
                continue;
            }
            placement.x = std::min(static_cast<int>(fx * (background.width() - w + 1)),
                                   background.width() - w);
            placement.y = std::min(static_cast<int>(fy * (background.height() - h + 1)),
                                   background.height() - h);
            const BBox box{static_cast<double>(placement.x), static_cast<double>(placement.y),
                           static_cast<double>(w), static_cast<double>(h)};
            const bool overlaps = std::any_of(sample.boxes.begin(), sample.boxes.end(),
                                              [&](const BBox& other) {
                                                  return bbox_intersection_area(box, other) > 0.0;
                                              });
            if (overlaps) {
                continue;
            }
            sprite = std::move(candidate);
        }
        if (!sprite) {
            throw AugmentError("sample " + std::to_string(sample_index) + ": could not place '" +
                               asset.source_id + "' inside the background after " +
                               std::to_string(kMaxAttempts) + " attempts");
        }

        if (rng.bernoulli(policy.shadow_probability)) {
            placement.shadow = rng.bernoulli(0.5) ? ShadowMode::lines : ShadowMode::perlin;
            const std::uint64_t shadow_seed = rng.next();
            sprite = apply_shadow(*sprite, make_shadow_map(sprite->sprite.width(),
                                                           sprite->sprite.height(),
                                                           *placement.shadow, shadow_seed));
        }
        if (rng.bernoulli(policy.monochrome_probability)) {
            placement.monochrome = true;
            sprite = to_monochrome(*sprite);
        }
        if (rng.bernoulli(policy.blur_probability)) {
            if (rng.bernoulli(0.5)) {
                placement.blur = GaussianBlur{rng.uniform(0.5, 1.5)};
            } else {
                const double length = rng.uniform(2.0, 6.0);
                placement.blur = MotionBlur{length, rng.uniform(0.0, 180.0)};
            }
            sprite = blur(*sprite, *placement.blur);
        }

        paste(sample.image, sample.coverage, sprite->sprite, placement.x, placement.y,
              static_cast<std::uint8_t>(d + 1));
        sample.boxes.push_back(BBox{static_cast<double>(placement.x),
                                    static_cast<double>(placement.y),
                                    static_cast<double>(sprite->sprite.width()),
                                    static_cast<double>(sprite->sprite.height())});
        sample.provenance.drones.push_back(std::move(placement));
    }
    return sample;
}

}  // namespace dronemon
