#pragma once

#include <cstdint>
#include <optional>

#include "nnseg/geometry.hpp"
#include "nnseg/tracker.hpp"
#include "nnseg/video_io.hpp"

namespace nnseg {

struct TrajectoryParams {
    CornerParams corners;
    LkParams lk;
    int min_valid_corners = 20; ///< re-detect below this count
};

/// Cumulative per-frame content offset from tracked corners. Each pair's
/// displacement is the coordinate-wise median of valid LK displacements; a
/// pair with no valid corners repeats the previous displacement.
/// When `region` is set, corners are only detected inside it.
Trajectory estimate_trajectory(const FrameSequence& seq, const TrajectoryParams& params = {},
                               std::optional<BoundingBox> region = std::nullopt);

/// Centered moving average over round(window_s * fps) frames (forced odd),
/// truncated at the edges.
Trajectory smooth_trajectory(const Trajectory& traj, double window_s, double fps);

/// Scalar version used for trajectories and segment scores alike.
std::vector<double> moving_average(const std::vector<double>& values, int window);

struct CropParams {
    double margin = 0.1; ///< fraction of box size added on each side
    int out_size = 112;
};

/// Displaces each box by (smoothed - raw), expands it by the margin, clamps it
/// into the frame and resamples the crop to out_size x out_size.
FrameSequence stabilized_crop(const FrameSequence& seq, const BoxTrack& track, const CropParams& params = {});

/// Crop rectangle actually sampled for frame i by stabilized_crop.
BoundingBox crop_rect(const BoxTrack& track, std::size_t i, double margin, int frame_w, int frame_h);

struct AugmentParams {
    double rotation_deg = 15.0; ///< angle drawn from [-rotation_deg, rotation_deg]
    double scale_min = 0.9;
    double scale_max = 1.1;
    double flip_probability = 0.5;
    std::uint64_t seed = 0;
};

/// Per-clip random rotation/scale/flip, identical for every frame.
FrameSequence augment(const FrameSequence& seq, const AugmentParams& params);

struct StabilizeParams {
    TrajectoryParams trajectory;
    MosseParams mosse;
    double smooth_window_s = 1.5;
    CropParams crop;
};

struct StabilizeResult {
    FrameSequence crop;
    BoxTrack track;
};

/// Full preprocessing: box propagation, trajectory, smoothing, crop.
/// The track's raw trajectory is the box path minus the corner trajectory
/// (both relative to frame 0), i.e. how far the boxes stray from the content;
/// the crop therefore follows the content shifted by the smoothed stray.
StabilizeResult stabilize(const FrameSequence& seq, const DetectionMap& detections, const StabilizeParams& params = {});

/// High-frequency jitter: std of (trajectory - its moving average), pooled
/// over both axes.
double jitter_std(const Trajectory& traj, int window);

} // namespace nnseg
