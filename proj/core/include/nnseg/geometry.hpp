#pragma once

#include <vector>

namespace nnseg {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
    Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
    Point2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Point2&) const = default;
};

/// Axis-aligned box; (x, y) is the top-left corner in pixels.
struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    Point2 center() const { return {x + 0.5 * w, y + 0.5 * h}; }
    BoundingBox translated(Point2 d) const { return {x + d.x, y + d.y, w, h}; }
    bool operator==(const BoundingBox&) const = default;
};

/// Moves `box` inside a width x height frame, shrinking it only when it is
/// larger than the frame.
BoundingBox clamp_to_frame(const BoundingBox& box, int width, int height);

/// True when the box overlaps the frame with positive area.
bool intersects_frame(const BoundingBox& box, int width, int height);

/// Per-frame cumulative offset; entry 0 is the origin.
using Trajectory = std::vector<Point2>;

/// Per-frame face boxes plus the raw and smoothed stabilization trajectories.
struct BoxTrack {
    std::vector<BoundingBox> boxes;
    Trajectory raw;      ///< empty until a trajectory is estimated
    Trajectory smoothed; ///< empty until smoothed
};

} // namespace nnseg
