#include "dronemon/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dronemon {

double bbox_intersection_area(const BBox& a, const BBox& b) {
    const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
    const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
    if (iw <= 0.0 || ih <= 0.0) {
        return 0.0;
    }
    return iw * ih;
}

double bbox_union_area(const BBox& a, const BBox& b) {
    return a.area() + b.area() - bbox_intersection_area(a, b);
}

BBox scale_about_center(const BBox& box, double factor) {
    const double w = box.w * factor;
    const double h = box.h * factor;
    return {box.center_x() - 0.5 * w, box.center_y() - 0.5 * h, w, h};
}

std::optional<BBox> clip_to_frame(const BBox& box, int width, int height) {
    const double x0 = std::max(box.x, 0.0);
    const double y0 = std::max(box.y, 0.0);
    const double x1 = std::min(box.right(), static_cast<double>(width));
    const double y1 = std::min(box.bottom(), static_cast<double>(height));
    if (x1 <= x0 || y1 <= y0) {
        return std::nullopt;
    }
    return BBox{x0, y0, x1 - x0, y1 - y0};
}

double normalize_degrees(double degrees) {
    double r = std::fmod(degrees, 360.0);
    if (r <= -180.0) {
        r += 360.0;
    } else if (r > 180.0) {
        r -= 360.0;
    }
    return r;
}

AffineTransform::AffineTransform(double rotation_deg, double scale_x, double scale_y,
                                 double translate_x, double translate_y)
    : rotation_(normalize_degrees(rotation_deg)),
      scale_x_(scale_x),
      scale_y_(scale_y),
      translate_x_(translate_x),
      translate_y_(translate_y) {
    if (!(scale_x > 0.0) || !(scale_y > 0.0) || !std::isfinite(scale_x) ||
        !std::isfinite(scale_y)) {
        throw std::invalid_argument("AffineTransform: scale factors must be positive and finite");
    }
    if (!std::isfinite(rotation_deg) || !std::isfinite(translate_x) ||
        !std::isfinite(translate_y)) {
        throw std::invalid_argument("AffineTransform: non-finite parameter");
    }
}

}  // namespace dronemon
