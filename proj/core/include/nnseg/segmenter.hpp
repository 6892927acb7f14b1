#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nnseg/classifier.hpp"
#include "nnseg/events.hpp"
#include "nnseg/optical_flow.hpp"
#include "nnseg/stabilizer.hpp"
#include "nnseg/video_io.hpp"

namespace nnseg {

/// How window outcomes become a segment track.
///  - Tiled: non-overlapping windows, each window's outcome covers the window.
///  - Sliding: windows every stride, each outcome covers the window's middle segment.
///  - Smoothed: sliding scores, moving-averaged over one window length, then thresholded.
enum class AggregationMode { Tiled, Sliding, Smoothed };

std::string_view to_string(AggregationMode mode);
AggregationMode parse_aggregation_mode(std::string_view s);

struct WindowSpec {
    double start_s = 0.0;
    double end_s = 0.0;
    double assign_start_s = 0.0;
    double assign_end_s = 0.0;
};

struct CoverParams {
    double window_s = 2.5;
    double stride_s = 0.5; ///< window_s / stride_s must be an odd integer
};

/// Windows covering [0, duration). Tiled drops a trailing partial window;
/// sliding starts at 0, stride, ..., duration - window. Smoothed uses the
/// sliding cover.
std::vector<WindowSpec> cover_windows(double duration_s, AggregationMode mode, const CoverParams& params = {});

/// Per-segment scores and labels over [0, duration).
struct SegmentTrack {
    std::string source;
    double resolution_s = 0.5;
    double duration_s = 0.0;
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
};

/// Turns aligned window scores into a labeled track (label = score >= threshold).
/// Uncovered edge segments copy the nearest covered segment.
SegmentTrack aggregate(const std::vector<WindowScore>& scores, AggregationMode mode, double threshold,
                       double duration_s, const CoverParams& params = {});

struct EventParams {
    double min_dur_s = 0.5;
    double merge_gap_s = 0.0;
};

/// Maximal positive runs, merged across gaps shorter than merge_gap_s, then
/// filtered by min_dur_s. Confidence is the mean segment score over the event.
EventList extract_events(const SegmentTrack& track, const EventParams& params = {});

struct SegmentConfig {
    AggregationMode mode = AggregationMode::Smoothed;
    double threshold = 0.5;
    CoverParams cover;
    EventParams events;
    ClipFlowParams flow;
    int jobs = 1;
};

struct SegmentResult {
    std::vector<WindowScore> scores;
    SegmentTrack track;
    EventList events;
};

/// Scores every covering window of a face-cropped clip with `backend`, then
/// aggregates and extracts events.
SegmentResult segment_video(const FrameSequence& clip, const std::string& source, const ScoreBackend& backend,
                            const SegmentConfig& config = {});

/// Same composition for a clip with precomputed flow.
SegmentResult segment_flow(const FlowSequence& flow, double fps, double duration_s, const std::string& source,
                           const ScoreBackend& backend, const SegmentConfig& config = {});

/// Frame-free variant for score replay backends.
SegmentResult segment_scores(double duration_s, const std::string& source, const ScoreBackend& backend,
                             const SegmentConfig& config = {});

/// Raw video -> stabilized face crop -> segmentation.
SegmentResult segment_raw_video(const FrameSequence& seq, const DetectionMap& detections, const std::string& source,
                                const ScoreBackend& backend, const StabilizeParams& stabilize_params,
                                const SegmentConfig& config = {});

/// Scores for explicit windows over a flow sequence, in window order.
std::vector<WindowScore> score_windows(const FlowSequence& flow, double fps, const std::string& source,
                                       const std::vector<WindowSpec>& windows, const ScoreBackend& backend,
                                       double window_s, int jobs);

// Event CSV: source,start_s,end_s,label,confidence
void write_events(const std::vector<SourcedEvent>& events, const std::filesystem::path& path,
                  const std::vector<std::string>& header_comments = {});
std::vector<SourcedEvent> read_events(const std::filesystem::path& path);

/// Groups events by source (sorted by start time within each source).
std::map<std::string, EventList> group_by_source(const std::vector<SourcedEvent>& events);

struct TimelineLane {
    std::string source;
    double duration_s = 0.0;
    EventList ground_truth;
    EventList predictions;
};

/// SVG timeline: one lane per source, ground truth above predictions,
/// 1 px = 0.1 s.
std::string render_timeline_svg(const std::vector<TimelineLane>& lanes);

} // namespace nnseg
