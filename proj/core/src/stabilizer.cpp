#include "nnseg/stabilizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nnseg/error.hpp"
#include "nnseg/rng.hpp"

namespace nnseg {

namespace {

double median(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

bool inside(const Point2& p, const BoundingBox& b) {
    return p.x >= b.x && p.x < b.x + b.w && p.y >= b.y && p.y < b.y + b.h;
}

std::vector<Point2> detect_points(const Frame& frame, const CornerParams& params, const std::optional<BoundingBox>& region) {
    if (!region) return detect_corners(frame, params).points;
    CornerParams wide = params;
    wide.max_corners = std::numeric_limits<int>::max();
    std::vector<Point2> out;
    for (const auto& p : detect_corners(frame, wide).points) {
        if (static_cast<int>(out.size()) >= params.max_corners) break;
        if (inside(p, *region)) out.push_back(p);
    }
    return out;
}

int odd_window(double window_s, double fps) {
    int n = static_cast<int>(std::lround(window_s * fps));
    if (n < 1) n = 1;
    if (n % 2 == 0) ++n;
    return n;
}

} // namespace

Trajectory estimate_trajectory(const FrameSequence& seq, const TrajectoryParams& params,
                               std::optional<BoundingBox> region) {
    if (seq.frames.size() < 2) throw ValidationError("estimate_trajectory: at least 2 frames required");

    Trajectory traj(seq.frames.size());
    Point2 last_step{0.0, 0.0};
    std::vector<Point2> points = detect_points(seq.frames[0], params.corners, region);

    for (std::size_t i = 1; i < seq.frames.size(); ++i) {
        if (static_cast<int>(points.size()) < params.min_valid_corners)
            points = detect_points(seq.frames[i - 1], params.corners, region);

        std::vector<double> dxs, dys;
        std::vector<Point2> kept;
        if (!points.empty()) {
            const LkResult lk = lk_track(seq.frames[i - 1], seq.frames[i], points, params.lk);
            for (std::size_t k = 0; k < points.size(); ++k) {
                if (!lk.status[k]) continue;
                dxs.push_back(lk.points[k].x - points[k].x);
                dys.push_back(lk.points[k].y - points[k].y);
                kept.push_back(lk.points[k]);
            }
        }
        if (!dxs.empty()) last_step = {median(dxs), median(dys)};
        traj[i] = traj[i - 1] + last_step;
        points = std::move(kept);
    }
    return traj;
}

std::vector<double> moving_average(const std::vector<double>& values, int window) {
    if (window < 1) throw ValidationError("moving_average: window must be >= 1");
    const int n = static_cast<int>(values.size());
    const int half = window / 2;
    std::vector<double> out(values.size());
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - half);
        const int hi = std::min(n - 1, i + half);
        // Summing offsets from the first value keeps constant runs exact.
        const double ref = values[lo];
        double sum = 0.0;
        for (int k = lo; k <= hi; ++k) sum += values[k] - ref;
        out[i] = ref + sum / (hi - lo + 1);
    }
    return out;
}

Trajectory smooth_trajectory(const Trajectory& traj, double window_s, double fps) {
    if (!(window_s > 0.0)) throw ValidationError("smooth_trajectory: window must be positive");
    if (!(fps > 0.0)) throw ValidationError("smooth_trajectory: fps must be positive");
    const int window = odd_window(window_s, fps);
    std::vector<double> xs, ys;
    for (const auto& p : traj) {
        xs.push_back(p.x);
        ys.push_back(p.y);
    }
    xs = moving_average(xs, window);
    ys = moving_average(ys, window);
    Trajectory out(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) out[i] = {xs[i], ys[i]};
    return out;
}

BoundingBox crop_rect(const BoxTrack& track, std::size_t i, double margin, int frame_w, int frame_h) {
    BoundingBox b = track.boxes.at(i);
    if (!track.raw.empty() && !track.smoothed.empty()) b = b.translated(track.smoothed.at(i) - track.raw.at(i));
    b.x -= margin * b.w;
    b.y -= margin * b.h;
    b.w *= 1.0 + 2.0 * margin;
    b.h *= 1.0 + 2.0 * margin;
    return clamp_to_frame(b, frame_w, frame_h);
}

FrameSequence stabilized_crop(const FrameSequence& seq, const BoxTrack& track, const CropParams& params) {
    if (params.out_size < 8) throw ValidationError("stabilized_crop: out_size must be >= 8");
    if (params.margin < 0.0) throw ValidationError("stabilized_crop: margin must be non-negative");
    if (track.boxes.size() != seq.frames.size()) throw ValidationError("stabilized_crop: track does not cover all frames");
    if ((!track.raw.empty() && track.raw.size() != seq.frames.size()) ||
        (!track.smoothed.empty() && track.smoothed.size() != seq.frames.size()))
        throw ValidationError("stabilized_crop: trajectory length mismatch");

    const int out = params.out_size;
    FrameSequence result;
    result.fps = seq.fps;
    result.frames.reserve(seq.frames.size());
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        const BoundingBox r = crop_rect(track, i, params.margin, seq.width(), seq.height());
        const double sx = r.w / out;
        const double sy = r.h / out;
        Image img(out, out);
        for (int v = 0; v < out; ++v)
            for (int u = 0; u < out; ++u)
                img.at(u, v) = seq.frames[i].pixels.bilinear(r.x + (u + 0.5) * sx - 0.5, r.y + (v + 0.5) * sy - 0.5);
        result.frames.push_back(Frame{std::move(img), seq.frames[i].index});
    }
    return result;
}

FrameSequence augment(const FrameSequence& seq, const AugmentParams& params) {
    if (params.rotation_deg < 0.0 || params.scale_min <= 0.0 || params.scale_max < params.scale_min ||
        params.flip_probability < 0.0 || params.flip_probability > 1.0)
        throw ValidationError("augment: invalid parameters");

    Rng rng(params.seed);
    const double angle = rng.uniform(-params.rotation_deg, params.rotation_deg) * std::numbers::pi / 180.0;
    const double scale = rng.uniform(params.scale_min, params.scale_max);
    const bool flip = rng.bernoulli(params.flip_probability);

    const int w = seq.width();
    const int h = seq.height();
    const double cx = 0.5 * (w - 1);
    const double cy = 0.5 * (h - 1);
    const double cs = std::cos(angle) / scale;
    const double sn = std::sin(angle) / scale;
    const bool identity_warp = angle == 0.0 && scale == 1.0;

    FrameSequence out;
    out.fps = seq.fps;
    for (const auto& frame : seq.frames) {
        Image img(w, h);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double qx = x;
                double qy = y;
                if (!identity_warp) {
                    const double rx = x - cx;
                    const double ry = y - cy;
                    qx = cx + cs * rx + sn * ry;
                    qy = cy - sn * rx + cs * ry;
                }
                if (flip) qx = (w - 1) - qx;
                img.at(x, y) = std::clamp(frame.pixels.bilinear(qx, qy), 0.0f, 1.0f);
            }
        }
        out.frames.push_back(Frame{std::move(img), frame.index});
    }
    return out;
}

StabilizeResult stabilize(const FrameSequence& seq, const DetectionMap& detections, const StabilizeParams& params) {
    validate(seq);
    StabilizeResult result;
    result.track = propagate_bbox(seq, detections, params.mosse);
    if (seq.frames.size() >= 2) {
        // The corner trajectory follows the content precisely; what remains
        // between it and the tracked boxes is tracker noise plus slow drift.
        // Smoothing that offset and displacing the boxes by (smoothed - raw)
        // pins the crop to the content up to the slow part.
        const Trajectory content = estimate_trajectory(seq, params.trajectory);
        const Point2 origin = result.track.boxes.front().center();
        Trajectory offset(seq.frames.size());
        for (std::size_t i = 0; i < offset.size(); ++i)
            offset[i] = result.track.boxes[i].center() - origin - content[i];
        result.track.raw = std::move(offset);
        result.track.smoothed = smooth_trajectory(result.track.raw, params.smooth_window_s, seq.fps);
    } else {
        result.track.raw = result.track.smoothed = Trajectory(1);
    }
    result.crop = stabilized_crop(seq, result.track, params.crop);
    return result;
}

double jitter_std(const Trajectory& traj, int window) {
    if (traj.empty()) return 0.0;
    std::vector<double> xs, ys;
    for (const auto& p : traj) {
        xs.push_back(p.x);
        ys.push_back(p.y);
    }
    const auto mx = moving_average(xs, window);
    const auto my = moving_average(ys, window);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        for (double r : {xs[i] - mx[i], ys[i] - my[i]}) {
            sum += r;
            sum2 += r * r;
        }
    }
    const double n = 2.0 * static_cast<double>(traj.size());
    const double mean = sum / n;
    return std::sqrt(std::max(0.0, sum2 / n - mean * mean));
}

} // namespace nnseg
