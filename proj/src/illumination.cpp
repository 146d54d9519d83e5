#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

#include "dronemon/augment.hpp"
#include "dronemon/random.hpp"

namespace dronemon {

namespace {

// Classic 2-D gradient noise over a seeded 256-entry permutation lattice.
class GradientNoise {
public:
    explicit GradientNoise(std::uint64_t seed) {
        std::array<int, 256> p{};
        std::iota(p.begin(), p.end(), 0);
        Rng rng(seed);
        for (int i = 255; i > 0; --i) {
            std::swap(p[i], p[static_cast<std::size_t>(rng.uniform_int(0, i))]);
        }
        for (int i = 0; i < 512; ++i) {
            perm_[i] = p[i & 255];
        }
    }

    /// Noise in roughly [-1, 1]; exactly 0 on lattice points.
    double operator()(double x, double y) const {
        const double fx = std::floor(x);
        const double fy = std::floor(y);
        const int xi = static_cast<int>(static_cast<long long>(fx) & 255);
        const int yi = static_cast<int>(static_cast<long long>(fy) & 255);
        const double xf = x - fx;
        const double yf = y - fy;
        const double u = fade(xf);
        const double v = fade(yf);
        const int aa = perm_[perm_[xi] + yi];
        const int ab = perm_[perm_[xi] + yi + 1];
        const int ba = perm_[perm_[xi + 1] + yi];
        const int bb = perm_[perm_[xi + 1] + yi + 1];
        const double x1 = lerp(grad(aa, xf, yf), grad(ba, xf - 1.0, yf), u);
        const double x2 = lerp(grad(ab, xf, yf - 1.0), grad(bb, xf - 1.0, yf - 1.0), u);
        return lerp(x1, x2, v);
    }

private:
    static double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }
    static double lerp(double a, double b, double t) { return a + t * (b - a); }
    static double grad(int hash, double x, double y) {
        switch (hash & 7) {
            case 0: return x + y;
            case 1: return -x + y;
            case 2: return x - y;
            case 3: return -x - y;
            case 4: return x;
            case 5: return -x;
            case 6: return y;
            default: return -y;
        }
    }

    std::array<int, 512> perm_{};
};

ShadowMap lines_map(int width, int height, Rng& rng) {
    ShadowMap map{width, height, std::vector<double>(static_cast<std::size_t>(width) * height, 1.0)};
    const double dark = rng.uniform(0.3, 0.7);
    const int bands = static_cast<int>(rng.uniform_int(1, 3));
    const double extent = std::max(width, height);
    for (int b = 0; b < bands; ++b) {
        const double px = rng.uniform(0.0, width);
        const double py = rng.uniform(0.0, height);
        const double angle = rng.uniform(0.0, std::numbers::pi);
        const double half = 0.5 * std::max(1.0, rng.uniform(0.1, 0.4) * extent);
        const double nx = -std::sin(angle);
        const double ny = std::cos(angle);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const double dist = (x + 0.5 - px) * nx + (y + 0.5 - py) * ny;
                if (std::fabs(dist) <= half) {
                    map.values[static_cast<std::size_t>(y) * width + x] = dark;
                }
            }
        }
    }
    return map;
}

ShadowMap perlin_map(int width, int height, std::uint64_t seed, Rng& rng) {
    const std::vector<double> noise = perlin_field(width, height, seed);
    const std::size_t n = noise.size();
    const double dark = rng.uniform(0.3, 0.7);
    const double quantile = rng.uniform(0.2, 0.8);

    // Attenuate the k lowest-noise pixels; k is pinned to [20%, 80%] of n.
    auto k = static_cast<std::size_t>(std::llround(quantile * static_cast<double>(n)));
    const auto lo = static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(n)));
    const auto hi = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(n)));
    if (lo <= hi) {
        k = std::clamp(k, lo, hi);
    }
    k = std::min(k, n);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return noise[a] < noise[b]; });

    ShadowMap map{width, height, std::vector<double>(n, 1.0)};
    const double edge = k < n ? noise[order[k]] : 1.0;
    for (std::size_t r = 0; r < k; ++r) {
        const std::size_t i = order[r];
        // Soft edge: darkest at the noise minimum, approaching 1 at the cut.
        const double t = edge > 0.0 ? noise[i] / edge : 0.0;
        map.values[i] = std::min(dark + (1.0 - dark) * t * t, std::nextafter(1.0, 0.0));
    }
    return map;
}

ForegroundAsset map_rgb(const ForegroundAsset& asset, auto&& fn) {
    ForegroundAsset out = asset;
    ImageBuffer& img = out.sprite;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            fn(img, x, y);
        }
    }
    return out;
}

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (auto& v : k) {
        v /= sum;
    }
    return k;
}

// Square kernel with odd side; a line of unit-spaced samples splatted bilinearly.
std::vector<double> motion_kernel(double length, double angle_deg, int& side) {
    const int samples = std::max(1, static_cast<int>(std::lround(length)));
    const double theta = angle_deg * std::numbers::pi / 180.0;
    const double dx = std::cos(theta);
    const double dy = std::sin(theta);
    const int radius = (samples - 1) / 2 + 1;
    side = 2 * radius + 1;
    std::vector<double> k(static_cast<std::size_t>(side) * side, 0.0);
    const double weight = 1.0 / samples;
    for (int s = 0; s < samples; ++s) {
        const double t = s - 0.5 * (samples - 1);
        const double px = t * dx + radius;
        const double py = t * dy + radius;
        const int x0 = static_cast<int>(std::floor(px));
        const int y0 = static_cast<int>(std::floor(py));
        const double fx = px - x0;
        const double fy = py - y0;
        const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
        for (int c = 0; c < 4; ++c) {
            const int xi = x0 + (c & 1);
            const int yi = y0 + (c >> 1);
            if (w[c] == 0.0) {
                continue;
            }
            k[static_cast<std::size_t>(yi) * side + xi] += weight * w[c];
        }
    }
    return k;
}

std::uint8_t to_sample(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

std::vector<double> perlin_field(int width, int height, std::uint64_t seed, int octaves,
                                 double persistence, double cell) {
    const GradientNoise noise(seed);
    std::vector<double> field(static_cast<std::size_t>(width) * height, 0.0);
    double amplitude = 1.0;
    double frequency = 1.0 / cell;
    for (int o = 0; o < octaves; ++o) {
        // Per-octave offset keeps lattice zeros from lining up across octaves.
        const double ox = 17.31 * (o + 1);
        const double oy = 41.77 * (o + 1);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                field[static_cast<std::size_t>(y) * width + x] +=
                    amplitude * noise((x + 0.5) * frequency + ox, (y + 0.5) * frequency + oy);
            }
        }
        amplitude *= persistence;
        frequency *= 2.0;
    }
    const auto [mn, mx] = std::minmax_element(field.begin(), field.end());
    const double lo = *mn;
    const double range = *mx - *mn;
    for (auto& v : field) {
        v = range > 0.0 ? (v - lo) / range : 0.5;
    }
    return field;
}

ShadowMap make_shadow_map(int width, int height, ShadowMode mode, std::uint64_t seed) {
    if (width <= 0 || height <= 0) {
        throw AugmentError("make_shadow_map: dimensions must be positive");
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(mode)));
    return mode == ShadowMode::lines ? lines_map(width, height, rng)
                                     : perlin_map(width, height, seed, rng);
}

ForegroundAsset apply_shadow(const ForegroundAsset& asset, const ShadowMap& map) {
    if (map.width != asset.sprite.width() || map.height != asset.sprite.height()) {
        throw AugmentError("apply_shadow: shadow map size does not match the sprite");
    }
    return map_rgb(asset, [&](ImageBuffer& img, int x, int y) {
        const double a = map.at(x, y);
        for (int c = 0; c < 3; ++c) {
            img.at(x, y, c) = to_sample(img.at(x, y, c) * a);
        }
    });
}

ForegroundAsset to_monochrome(const ForegroundAsset& asset) {
    return map_rgb(asset, [](ImageBuffer& img, int x, int y) {
        const auto v = static_cast<std::uint8_t>(
            luma(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)));
        img.at(x, y, 0) = img.at(x, y, 1) = img.at(x, y, 2) = v;
    });
}

ForegroundAsset blur(const ForegroundAsset& asset, const BlurKind& kind) {
    const ImageBuffer& src = asset.sprite;
    const int w = src.width();
    const int h = src.height();
    ForegroundAsset out = asset;

    if (const auto* g = std::get_if<GaussianBlur>(&kind)) {
        if (!(g->sigma > 0.0) || !std::isfinite(g->sigma)) {
            throw AugmentError("blur: gaussian sigma must be positive");
        }
        const auto k = gaussian_kernel(g->sigma);
        const int r = static_cast<int>(k.size() / 2);
        std::vector<double> tmp(static_cast<std::size_t>(w) * h * 3);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < 3; ++c) {
                    double acc = 0.0;
                    for (int i = -r; i <= r; ++i) {
                        acc += k[static_cast<std::size_t>(i + r)] *
                               src.at(std::clamp(x + i, 0, w - 1), y, c);
                    }
                    tmp[(static_cast<std::size_t>(y) * w + x) * 3 + c] = acc;
                }
            }
        }
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < 3; ++c) {
                    double acc = 0.0;
                    for (int i = -r; i <= r; ++i) {
                        const int yy = std::clamp(y + i, 0, h - 1);
                        acc += k[static_cast<std::size_t>(i + r)] *
                               tmp[(static_cast<std::size_t>(yy) * w + x) * 3 + c];
                    }
                    out.sprite.at(x, y, c) = to_sample(acc);
                }
            }
        }
        return out;
    }

    const auto& m = std::get<MotionBlur>(kind);
    if (!(m.length >= 1.0) || !std::isfinite(m.length) || !std::isfinite(m.angle_deg)) {
        throw AugmentError("blur: motion length must be at least 1");
    }
    int side = 0;
    const auto k = motion_kernel(m.length, m.angle_deg, side);
    const int r = side / 2;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int j = -r; j <= r; ++j) {
                    for (int i = -r; i <= r; ++i) {
                        const double kv = k[static_cast<std::size_t>(j + r) * side + (i + r)];
                        if (kv == 0.0) {
                            continue;
                        }
                        acc += kv * src.at(std::clamp(x + i, 0, w - 1), std::clamp(y + j, 0, h - 1), c);
                    }
                }
                out.sprite.at(x, y, c) = to_sample(acc);
            }
        }
    }
    return out;
}

}  // namespace dronemon
