#include "nnseg/geometry.hpp"

#include <algorithm>

namespace nnseg {

BoundingBox clamp_to_frame(const BoundingBox& box, int width, int height) {
    BoundingBox b = box;
    b.w = std::min(b.w, static_cast<double>(width));
    b.h = std::min(b.h, static_cast<double>(height));
    b.x = std::clamp(b.x, 0.0, width - b.w);
    b.y = std::clamp(b.y, 0.0, height - b.h);
    return b;
}

bool intersects_frame(const BoundingBox& box, int width, int height) {
    return box.w > 0.0 && box.h > 0.0 && box.x < width && box.y < height && box.x + box.w > 0.0 &&
           box.y + box.h > 0.0;
}

} // namespace nnseg
