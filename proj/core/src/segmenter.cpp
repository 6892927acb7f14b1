#include "nnseg/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nnseg/error.hpp"
#include "nnseg/parallel.hpp"
#include "nnseg/text.hpp"

namespace nnseg {

namespace {

constexpr double kTimeEps = 1e-9;

int window_stride_ratio(const CoverParams& p) {
    if (!(p.window_s > 0.0) || !(p.stride_s > 0.0)) throw ValidationError("cover: window and stride must be positive");
    const double ratio = p.window_s / p.stride_s;
    const long r = std::lround(ratio);
    if (std::abs(ratio - static_cast<double>(r)) > 1e-6 || r % 2 == 0)
        throw ValidationError("cover: window_s / stride_s must be an odd integer");
    return static_cast<int>(r);
}

int segment_count(double duration_s, double resolution_s) {
    return std::max(1, static_cast<int>(std::ceil(duration_s / resolution_s - 1e-9)));
}

} // namespace

std::string_view to_string(AggregationMode mode) {
    switch (mode) {
    case AggregationMode::Tiled: return "tiled";
    case AggregationMode::Sliding: return "sliding";
    case AggregationMode::Smoothed: return "smoothed";
    }
    return "smoothed";
}

AggregationMode parse_aggregation_mode(std::string_view s) {
    if (s == "tiled") return AggregationMode::Tiled;
    if (s == "sliding") return AggregationMode::Sliding;
    if (s == "smoothed") return AggregationMode::Smoothed;
    throw ValidationError("unknown aggregation mode '" + std::string(s) + "' (tiled|sliding|smoothed)");
}

std::vector<WindowSpec> cover_windows(double duration_s, AggregationMode mode, const CoverParams& params) {
    const double w = params.window_s;
    if (!(w > 0.0)) throw ValidationError("cover: window must be positive");
    if (!(duration_s >= w - kTimeEps))
        throw ValidationError("cover: duration " + format_shortest(duration_s) + " s is shorter than one window");

    std::vector<WindowSpec> out;
    if (mode == AggregationMode::Tiled) {
        const int count = static_cast<int>(std::floor(duration_s / w + kTimeEps));
        for (int k = 0; k < count; ++k) out.push_back({k * w, (k + 1) * w, k * w, (k + 1) * w});
        return out;
    }
    window_stride_ratio(params);
    const double s = params.stride_s;
    const int count = static_cast<int>(std::floor((duration_s - w) / s + kTimeEps)) + 1;
    const double offset = 0.5 * (w - s);
    for (int k = 0; k < count; ++k) {
        const double start = k * s;
        out.push_back({start, start + w, start + offset, start + offset + s});
    }
    return out;
}

SegmentTrack aggregate(const std::vector<WindowScore>& scores, AggregationMode mode, double threshold,
                       double duration_s, const CoverParams& params) {
    const auto windows = cover_windows(duration_s, mode, params);
    if (scores.size() != windows.size())
        throw ValidationError("aggregate: " + std::to_string(scores.size()) + " scores for " +
                              std::to_string(windows.size()) + " covering windows");
    for (std::size_t k = 0; k < windows.size(); ++k) {
        if (std::abs(scores[k].start_s - windows[k].start_s) > 5e-4)
            throw ValidationError("aggregate: score " + std::to_string(k) + " starts at " + format_fixed(scores[k].start_s, 3) +
                                  ", expected " + format_fixed(windows[k].start_s, 3));
        if (!(scores[k].score >= 0.0 && scores[k].score <= 1.0)) throw ValidationError("aggregate: score outside [0,1]");
    }

    SegmentTrack track;
    track.source = scores.empty() ? std::string{} : scores.front().source;
    track.duration_s = duration_s;
    track.resolution_s = mode == AggregationMode::Tiled ? params.window_s : params.stride_s;
    const int n = segment_count(duration_s, track.resolution_s);

    std::vector<double> covered;
    for (const auto& s : scores) covered.push_back(s.score);
    int first = 0;
    if (mode != AggregationMode::Tiled) {
        const int ratio = window_stride_ratio(params);
        first = (ratio - 1) / 2;
        if (mode == AggregationMode::Smoothed) covered = moving_average(covered, ratio);
    }

    track.scores.assign(static_cast<std::size_t>(n), 0.0);
    const int last = first + static_cast<int>(covered.size()) - 1;
    for (int i = 0; i < n; ++i) track.scores[i] = covered[std::clamp(i, first, last) - first];
    track.labels.resize(track.scores.size());
    for (std::size_t i = 0; i < track.scores.size(); ++i) track.labels[i] = track.scores[i] >= threshold ? 1 : 0;
    return track;
}

EventList extract_events(const SegmentTrack& track, const EventParams& params) {
    const int n = static_cast<int>(track.labels.size());
    if (track.scores.size() != track.labels.size()) throw ValidationError("extract_events: scores/labels length mismatch");
    const double res = track.resolution_s;
    auto seg_end = [&](int i) { return std::min((i + 1) * res, track.duration_s > 0 ? track.duration_s : (i + 1) * res); };

    struct Run {
        int first, last;
    };
    std::vector<Run> runs;
    for (int i = 0; i < n;) {
        if (!track.labels[i]) {
            ++i;
            continue;
        }
        int j = i;
        while (j + 1 < n && track.labels[j + 1]) ++j;
        runs.push_back({i, j});
        i = j + 1;
    }

    std::vector<Run> merged;
    for (const auto& r : runs) {
        if (!merged.empty()) {
            const double gap = r.first * res - seg_end(merged.back().last);
            if (gap < params.merge_gap_s - kTimeEps) {
                merged.back().last = r.last;
                continue;
            }
        }
        merged.push_back(r);
    }

    EventList out;
    for (const auto& r : merged) {
        Event e;
        e.start_s = r.first * res;
        e.end_s = seg_end(r.last);
        if (e.duration() < params.min_dur_s - kTimeEps) continue;
        const double ref = track.scores[r.first];
        double sum = 0.0;
        for (int i = r.first; i <= r.last; ++i) sum += track.scores[i] - ref;
        e.confidence = ref + sum / (r.last - r.first + 1);
        e.label = EventLabel::Nns;
        out.push_back(e);
    }
    return out;
}

std::vector<WindowScore> score_windows(const FlowSequence& flow, double fps, const std::string& source,
                                       const std::vector<WindowSpec>& windows, const ScoreBackend& backend,
                                       double window_s, int jobs) {
    std::vector<WindowScore> out(windows.size());
    parallel_for(windows.size(), jobs, [&](std::size_t k) {
        Window w;
        if (backend.needs_frames()) {
            w = make_window(flow, fps, source, windows[k].start_s, window_s);
        } else {
            w.source = source;
            w.start_s = windows[k].start_s;
            w.length_s = window_s;
        }
        out[k] = classify_window(backend, w);
    });
    return out;
}

SegmentResult segment_flow(const FlowSequence& flow, double fps, double duration_s, const std::string& source,
                           const ScoreBackend& backend, const SegmentConfig& config) {
    SegmentResult r;
    const auto windows = cover_windows(duration_s, config.mode, config.cover);
    r.scores = score_windows(flow, fps, source, windows, backend, config.cover.window_s, config.jobs);
    r.track = aggregate(r.scores, config.mode, config.threshold, duration_s, config.cover);
    r.track.source = source;
    r.events = extract_events(r.track, config.events);
    return r;
}

SegmentResult segment_video(const FrameSequence& clip, const std::string& source, const ScoreBackend& backend,
                            const SegmentConfig& config) {
    validate(clip);
    if (!backend.needs_frames()) return segment_scores(clip.duration_s(), source, backend, config);
    ClipFlowParams flow_params = config.flow;
    flow_params.jobs = config.jobs;
    const FlowSequence flow = clip_flow_encode(clip, flow_params);
    return segment_flow(flow, clip.fps, clip.duration_s(), source, backend, config);
}

SegmentResult segment_scores(double duration_s, const std::string& source, const ScoreBackend& backend,
                             const SegmentConfig& config) {
    if (backend.needs_frames()) throw ValidationError("segment: backend needs video frames");
    return segment_flow(FlowSequence{}, 10.0, duration_s, source, backend, config);
}

SegmentResult segment_raw_video(const FrameSequence& seq, const DetectionMap& detections, const std::string& source,
                                const ScoreBackend& backend, const StabilizeParams& stabilize_params,
                                const SegmentConfig& config) {
    if (!backend.needs_frames()) return segment_scores(seq.duration_s(), source, backend, config);
    const StabilizeResult stab = stabilize(seq, detections, stabilize_params);
    return segment_video(stab.crop, source, backend, config);
}

void write_events(const std::vector<SourcedEvent>& events, const std::filesystem::path& path,
                  const std::vector<std::string>& header_comments) {
    std::string out;
    for (const auto& c : header_comments) out += "# " + c + "\n";
    out += "source,start_s,end_s,label,confidence\n";
    for (const auto& e : events)
        out += e.source + "," + format_fixed(e.event.start_s, 3) + "," + format_fixed(e.event.end_s, 3) + "," +
               std::string(to_string(e.event.label)) + "," + format_fixed(e.event.confidence, 4) + "\n";
    write_text_file(path, out);
}

std::vector<SourcedEvent> read_events(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path, {"source", "start_s", "end_s", "label", "confidence"});
    std::vector<SourcedEvent> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        SourcedEvent e;
        e.source = row[0];
        e.event.start_s = parse_double(row[1], "start_s");
        e.event.end_s = parse_double(row[2], "end_s");
        e.event.label = parse_event_label(row[3]);
        e.event.confidence = row[4].empty() ? 1.0 : parse_double(row[4], "confidence");
        if (!(e.event.start_s < e.event.end_s))
            throw ValidationError(path.string() + ":" + std::to_string(t.row_lines[i]) + ": start must precede end");
        if (!(e.event.confidence >= 0.0 && e.event.confidence <= 1.0))
            throw ValidationError(path.string() + ":" + std::to_string(t.row_lines[i]) + ": confidence outside [0,1]");
        out.push_back(std::move(e));
    }
    return out;
}

std::map<std::string, EventList> group_by_source(const std::vector<SourcedEvent>& events) {
    std::map<std::string, EventList> out;
    for (const auto& e : events) out[e.source].push_back(e.event);
    for (auto& [src, list] : out)
        std::stable_sort(list.begin(), list.end(), [](const Event& a, const Event& b) { return a.start_s < b.start_s; });
    return out;
}

std::string render_timeline_svg(const std::vector<TimelineLane>& lanes) {
    constexpr double kPxPerSecond = 10.0;
    constexpr int kLabelWidth = 160;
    constexpr int kRowHeight = 14;
    constexpr int kLaneGap = 10;
    double max_duration = 0.0;
    for (const auto& l : lanes) max_duration = std::max(max_duration, l.duration_s);
    const int width = kLabelWidth + static_cast<int>(std::ceil(max_duration * kPxPerSecond)) + 10;
    const int lane_height = 2 * kRowHeight + kLaneGap;
    const int height = static_cast<int>(lanes.size()) * lane_height + kLaneGap;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    auto bar = [&](const Event& e, int y, const char* color) {
        svg << "<rect x=\"" << format_fixed(kLabelWidth + e.start_s * kPxPerSecond, 1) << "\" y=\"" << y << "\" width=\""
            << format_fixed((e.end_s - e.start_s) * kPxPerSecond, 1) << "\" height=\"" << kRowHeight - 2
            << "\" fill=\"" << color << "\" fill-opacity=\"" << format_fixed(0.35 + 0.65 * e.confidence, 3) << "\"/>\n";
    };
    auto escaped = [](const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '&') out += "&amp;";
            else if (c == '<') out += "&lt;";
            else if (c == '>') out += "&gt;";
            else out += c;
        }
        return out;
    };
    int y = kLaneGap;
    for (const auto& lane : lanes) {
        const std::string name = escaped(lane.source);
        svg << "<text x=\"2\" y=\"" << y + kRowHeight - 3 << "\" font-size=\"10\">" << name << " gt</text>\n";
        svg << "<text x=\"2\" y=\"" << y + 2 * kRowHeight - 3 << "\" font-size=\"10\">" << name << " pred</text>\n";
        svg << "<rect x=\"" << kLabelWidth << "\" y=\"" << y << "\" width=\""
            << format_fixed(lane.duration_s * kPxPerSecond, 1) << "\" height=\"" << 2 * kRowHeight
            << "\" fill=\"none\" stroke=\"#999\"/>\n";
        for (const auto& e : lane.ground_truth) bar(e, y + 1, "#2b8a3e");
        for (const auto& e : lane.predictions) bar(e, y + kRowHeight + 1, "#1c7ed6");
        y += lane_height;
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace nnseg
