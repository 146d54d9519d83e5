#pragma once

#include <optional>

namespace dronemon {

/// Axis-aligned box in continuous pixel coordinates.
///
/// Origin is the top-left image corner and y grows downward. Integer pixel
/// (i, j) covers the unit square [i, i+1) x [j, j+1), so a box (x, y, w, h)
/// with integer fields covers exactly w*h pixels.
struct BBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double right() const { return x + w; }
    double bottom() const { return y + h; }
    double area() const { return w * h; }
    double center_x() const { return x + 0.5 * w; }
    double center_y() const { return y + 0.5 * h; }
    bool valid() const { return w > 0.0 && h > 0.0; }

    bool operator==(const BBox&) const = default;
};

double bbox_intersection_area(const BBox& a, const BBox& b);
double bbox_union_area(const BBox& a, const BBox& b);

/// Box with the same center and both sides multiplied by `factor`.
BBox scale_about_center(const BBox& box, double factor);

/// Intersection of `box` with the frame [0,width) x [0,height); empty when
/// nothing of the box remains.
std::optional<BBox> clip_to_frame(const BBox& box, int width, int height);

/// Rotation, anisotropic scale and translation of a foreground sprite.
/// Rotation is kept normalized to (-180, 180] degrees; scales are > 0.
class AffineTransform {
public:
    AffineTransform() = default;
    AffineTransform(double rotation_deg, double scale_x, double scale_y,
                    double translate_x = 0.0, double translate_y = 0.0);

    static AffineTransform identity() { return {}; }

    double rotation() const { return rotation_; }
    double scale_x() const { return scale_x_; }
    double scale_y() const { return scale_y_; }
    double translate_x() const { return translate_x_; }
    double translate_y() const { return translate_y_; }

private:
    double rotation_ = 0.0;
    double scale_x_ = 1.0;
    double scale_y_ = 1.0;
    double translate_x_ = 0.0;
    double translate_y_ = 0.0;
};

double normalize_degrees(double degrees);

}  // namespace dronemon
