#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "nnseg/fft.hpp"
#include "nnseg/geometry.hpp"
#include "nnseg/video_io.hpp"

namespace nnseg {

// ---------------------------------------------------------------------------
// Shi-Tomasi corners

struct CornerSet {
    std::vector<Point2> points;
    std::vector<double> scores; ///< minimum eigenvalue at each point
};

struct CornerParams {
    int max_corners = 200;
    double quality = 0.01;
    double min_distance = 8.0;
    int block_size = 3;
};

/// Local maxima of the structure-tensor minimum eigenvalue, at least
/// `quality` times the global maximum, greedily picked by descending score
/// with `min_distance` suppression. Points carry a parabolic sub-pixel
/// refinement of the response peak.
CornerSet detect_corners(const Frame& frame, const CornerParams& params = {});

/// Minimum-eigenvalue response map used by detect_corners.
Image min_eigen_response(const Image& img, int block_size);

// ---------------------------------------------------------------------------
// Pyramidal Lucas-Kanade

struct LkParams {
    int levels = 3;           ///< pyramid levels including full resolution
    int window = 15;          ///< odd window side in pixels
    int max_iterations = 10;  ///< per level
    double epsilon = 0.01;    ///< convergence tolerance in pixels
    double min_eigen = 1e-6;  ///< min eigenvalue of the per-pixel-normalized tensor
};

struct LkResult {
    std::vector<Point2> points;
    std::vector<bool> status;
};

LkResult lk_track(const Frame& prev, const Frame& next, const std::vector<Point2>& points,
                  const LkParams& params = {});

// ---------------------------------------------------------------------------
// MOSSE correlation filter

struct MosseParams {
    double learning_rate = 0.125;
    double epsilon = 1e-5;
    double psr_threshold = 8.0;
    int perturbations = 8;
    double target_sigma = 2.0; ///< Gaussian peak width in pixels
    std::uint64_t seed = 0;    ///< drives the init-time affine perturbations
};

struct MosseUpdate;

/// Frequency-domain filter state for a single target. Single owner.
class MosseState {
public:
    MosseState() = default;

    bool initialized() const { return fft_ != nullptr; }
    const BoundingBox& box() const { return box_; }
    int window_width() const { return win_w_; }
    int window_height() const { return win_h_; }
    const MosseParams& params() const { return params_; }

    /// Conjugate filter H* = A / (B + eps).
    Spectrum filter() const;

private:
    friend MosseState mosse_init(const Frame&, const BoundingBox&, const MosseParams&);
    friend MosseUpdate mosse_update(MosseState&, const Frame&);
    friend Image mosse_response(const MosseState&, const Frame&);

    MosseParams params_;
    BoundingBox box_;
    int win_w_ = 0;
    int win_h_ = 0;
    int frame_w_ = 0;
    int frame_h_ = 0;
    std::shared_ptr<const Fft2d> fft_;
    std::vector<double> cosine_window_;
    Spectrum target_;
    Spectrum numerator_;
    Spectrum denominator_;
};

struct MosseUpdate {
    BoundingBox box;
    double psr = 0.0;
    bool lost = false; ///< psr below threshold; box held, filter not updated
};

MosseState mosse_init(const Frame& frame, const BoundingBox& bbox, const MosseParams& params = {});

MosseUpdate mosse_update(MosseState& state, const Frame& frame);

/// Correlation response of the current filter against the window at the
/// state's box. The zero-displacement peak sits at (w/2, h/2).
Image mosse_response(const MosseState& state, const Frame& frame);

/// Peak-to-sidelobe ratio; the sidelobe excludes an 11x11 window at the peak.
double peak_to_sidelobe(const Image& response, int peak_x, int peak_y);

// ---------------------------------------------------------------------------
// Box propagation

using DetectionMap = std::map<int, BoundingBox>;

/// Every frame gets the box tracked from its nearest detection (ties go to
/// the earlier detection); boxes are clamped inside the frame.
BoxTrack propagate_bbox(const FrameSequence& seq, const DetectionMap& detections,
                        const MosseParams& params = {});

/// Reads a `frame,x,y,w,h` CSV.
DetectionMap read_detections(const std::filesystem::path& path);
void write_detections(const DetectionMap& detections, const std::filesystem::path& path);

/// Pluggable face detector.
class FaceDetector {
public:
    virtual ~FaceDetector() = default;
    virtual std::optional<BoundingBox> detect(const Frame& frame) const = 0;
};

/// Detector that replays a fixed detections map.
class ReplayDetector final : public FaceDetector {
public:
    explicit ReplayDetector(DetectionMap detections) : detections_(std::move(detections)) {}
    std::optional<BoundingBox> detect(const Frame& frame) const override;

private:
    DetectionMap detections_;
};

/// Runs `detector` frame by frame until the first face is found.
DetectionMap detect_first_face(const FrameSequence& seq, const FaceDetector& detector);

} // namespace nnseg
