#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "nnseg/classifier.hpp"
#include "nnseg/metrics.hpp"
#include "nnseg/optical_flow.hpp"
#include "nnseg/rng.hpp"
#include "nnseg/segmenter.hpp"
#include "nnseg/synth.hpp"
#include "nnseg/tracker.hpp"

using namespace nnseg;

namespace {

// Two frames of a small synthetic face video, the second jittered.
SynthVideo small_video(int frames, int size) {
    SynthSpec s;
    s.duration_s = frames / s.fps;
    s.width = size;
    s.height = size;
    s.face = {size * 0.25, size * 0.2, size * 0.5, size * 0.6};
    s.jitter_std_px = 1.0;
    s.seed = 3;
    return generate_video(s);
}

void BM_DenseFlow(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const SynthVideo v = small_video(2, size);
    for (auto _ : state) benchmark::DoNotOptimize(dense_flow(v.video.frames[0], v.video.frames[1]));
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_DenseFlow)->Arg(64)->Arg(112)->Unit(benchmark::kMillisecond);

void BM_ClipFlowEncode(benchmark::State& state) {
    const SynthVideo v = small_video(26, 64);
    for (auto _ : state) benchmark::DoNotOptimize(clip_flow_encode(v.video));
}
BENCHMARK(BM_ClipFlowEncode)->Unit(benchmark::kMillisecond);

void BM_LucasKanade(benchmark::State& state) {
    const SynthVideo v = small_video(2, 160);
    const CornerSet corners = detect_corners(v.video.frames[0]);
    for (auto _ : state) benchmark::DoNotOptimize(lk_track(v.video.frames[0], v.video.frames[1], corners.points));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corners.points.size()));
}
BENCHMARK(BM_LucasKanade)->Unit(benchmark::kMicrosecond);

void BM_ShiTomasi(benchmark::State& state) {
    const SynthVideo v = small_video(1, 160);
    for (auto _ : state) benchmark::DoNotOptimize(detect_corners(v.video.frames[0]));
}
BENCHMARK(BM_ShiTomasi)->Unit(benchmark::kMicrosecond);

void BM_MosseUpdate(benchmark::State& state) {
    const SynthVideo v = small_video(2, 160);
    MosseState tracker = mosse_init(v.video.frames[0], v.faces[0]);
    std::size_t k = 0;
    for (auto _ : state) benchmark::DoNotOptimize(mosse_update(tracker, v.video.frames[++k % 2]));
}
BENCHMARK(BM_MosseUpdate)->Unit(benchmark::kMicrosecond);

EventList random_events(Rng& rng, int n) {
    EventList out;
    double t = 0.0;
    for (int i = 0; i < n; ++i) {
        t += rng.uniform(0.5, 5.0);
        const double len = rng.uniform(1.0, 10.0);
        out.push_back({t, t + len});
        t += len;
    }
    return out;
}

void BM_MatchEvents(benchmark::State& state) {
    Rng rng(9);
    const int n = static_cast<int>(state.range(0));
    const EventList pred = random_events(rng, n), gt = random_events(rng, n);
    for (auto _ : state) benchmark::DoNotOptimize(match_events(pred, gt, 0.1));
}
BENCHMARK(BM_MatchEvents)->Arg(5)->Arg(50)->Arg(500)->Unit(benchmark::kMicrosecond);

void BM_ExtractFeatures(benchmark::State& state) {
    const SynthVideo v = small_video(26, 64);
    const FlowSequence flow = clip_flow_encode(v.video);
    const Window w = make_window(flow, v.video.fps, "bench", 0.0, 2.5);
    for (auto _ : state) benchmark::DoNotOptimize(extract_features(w));
}
BENCHMARK(BM_ExtractFeatures)->Unit(benchmark::kMicrosecond);

void BM_AggregateSmoothed(benchmark::State& state) {
    const double duration = 3600.0;
    const auto windows = cover_windows(duration, AggregationMode::Smoothed);
    std::vector<WindowScore> scores;
    Rng rng(4);
    for (const auto& w : windows) scores.push_back({rng.uniform(), "bench", w.start_s, w.end_s});
    for (auto _ : state) benchmark::DoNotOptimize(aggregate(scores, AggregationMode::Smoothed, 0.5, duration));
}
BENCHMARK(BM_AggregateSmoothed)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
