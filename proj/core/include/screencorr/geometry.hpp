#pragma once

namespace screencorr {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned box in normalized screen coordinates, origin at the top-left.
struct BoundingBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  Point center() const { return {(x1 + x2) * 0.5, (y1 + y2) * 0.5}; }

  /// Ordered corners inside the unit square.
  bool valid() const;

  BoundingBox translated(double dx, double dy) const { return {x1 + dx, y1 + dy, x2 + dx, y2 + dy}; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Intersection over union; 0 when the union is empty.
double iou(const BoundingBox& a, const BoundingBox& b);

}  // namespace screencorr
