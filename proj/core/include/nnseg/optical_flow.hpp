#pragma once

#include <filesystem>
#include <vector>

#include "nnseg/image.hpp"
#include "nnseg/video_io.hpp"

namespace nnseg {

/// Per-pixel displacement (pixels per frame) from one frame to the next.
struct FlowField {
    Image u;
    Image v;

    int width() const { return u.width(); }
    int height() const { return u.height(); }
};

/// Polynomial-expansion dense flow parameters.
struct FlowParams {
    int levels = 3;            ///< pyramid levels including full resolution
    double pyr_scale = 0.5;
    int window = 15;           ///< box aggregation window side
    int iterations = 3;        ///< per level
    int poly_n = 5;            ///< expansion neighbourhood radius
    double poly_sigma = 1.1;
};

/// Coefficients of the local quadratic model
/// f(x, y) ~ c + bx*x + by*y + axx*x^2 + ayy*y^2 + axy*x*y, one image per term.
struct PolyExpansion {
    Image c, bx, by, axx, ayy, axy;
};

PolyExpansion poly_expand(const Image& img, int poly_n, double poly_sigma);

FlowField dense_flow(const Frame& prev, const Frame& next, const FlowParams& params = {});

enum class HsvNorm { PerFrame, Fixed };

struct HsvParams {
    HsvNorm norm = HsvNorm::PerFrame;
    double max_mag = 0.0; ///< used by Fixed mode; must be positive there
};

/// Channels: hue = direction in [0,1), saturation = 1, value = normalized magnitude.
ColorImage flow_to_hsv(const FlowField& flow, const HsvParams& params = {});

ColorImage hsv_to_rgb(const ColorImage& hsv);

struct FlowSequence {
    std::vector<FlowField> fields;
    std::vector<ColorImage> hsv_frames;
};

struct ClipFlowParams {
    FlowParams flow;
    HsvParams hsv;
    int jobs = 1;
};

/// Dense flow and HSV encoding for every adjacent pair; length N-1.
FlowSequence clip_flow_encode(const FrameSequence& seq, const ClipFlowParams& params = {});

/// Middlebury-style `.flo` file: "PIEH", int32 width, int32 height, then
/// interleaved (u, v) float32, all little-endian.
void write_flo(const FlowField& flow, const std::filesystem::path& path);
FlowField read_flo(const std::filesystem::path& path);

} // namespace nnseg
