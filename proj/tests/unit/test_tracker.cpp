#include <gtest/gtest.h>

#include <cmath>

#include "nnseg/error.hpp"
#include "nnseg/rng.hpp"
#include "nnseg/tracker.hpp"
#include "test_support.hpp"

using namespace nnseg;
using nnseg::test::WaveTexture;
using nnseg::test::make_frame;

TEST(Corners, UniformFrameHasNone) {
    EXPECT_TRUE(detect_corners(make_frame(Image(40, 40, 0.5f))).points.empty());
}

TEST(Corners, CheckerboardCornersSitOnTileIntersections) {
    const int tile = 8;
    const CornerSet cs = detect_corners(make_frame(nnseg::test::checkerboard(64, 64, tile)));
    ASSERT_GE(cs.points.size(), 40u);
    for (const auto& p : cs.points) {
        // Intersections lie on pixel boundaries, i.e. at k*tile - 0.5 in pixel-centre coordinates.
        const double gx = std::round((p.x + 0.5) / tile) * tile - 0.5;
        const double gy = std::round((p.y + 0.5) / tile) * tile - 0.5;
        EXPECT_LE(std::abs(p.x - gx), 1.0) << p.x << "," << p.y;
        EXPECT_LE(std::abs(p.y - gy), 1.0) << p.x << "," << p.y;
        EXPECT_GT(gx, 0.0);
        EXPECT_LT(gx, 63.0);
    }
}

TEST(Corners, MaxCornersCapsAndOrdersByScore) {
    CornerParams p;
    p.max_corners = 5;
    const CornerSet cs = detect_corners(make_frame(WaveTexture(3).render(80, 80)), p);
    ASSERT_EQ(cs.points.size(), 5u);
    for (std::size_t i = 1; i < cs.scores.size(); ++i) EXPECT_GE(cs.scores[i - 1], cs.scores[i]);
}

TEST(Corners, RespectMinDistanceAndBounds) {
    CornerParams p;
    p.min_distance = 10.0;
    const CornerSet cs = detect_corners(make_frame(WaveTexture(9).render(96, 72)), p);
    ASSERT_FALSE(cs.points.empty());
    for (std::size_t i = 0; i < cs.points.size(); ++i) {
        EXPECT_GE(cs.points[i].x, 0.0);
        EXPECT_LE(cs.points[i].x, 95.0);
        EXPECT_GE(cs.points[i].y, 0.0);
        EXPECT_LE(cs.points[i].y, 71.0);
        for (std::size_t j = 0; j < i; ++j)
            EXPECT_GE(std::hypot(cs.points[i].x - cs.points[j].x, cs.points[i].y - cs.points[j].y), 10.0 - 1.0);
    }
}

namespace {

std::vector<Point2> grid_points(int w, int h, int margin, int step) {
    std::vector<Point2> pts;
    for (int y = margin; y < h - margin; y += step)
        for (int x = margin; x < w - margin; x += step) pts.push_back({double(x), double(y)});
    return pts;
}

} // namespace

TEST(LucasKanade, IdentityFramesGiveZeroDisplacement) {
    const Frame f = make_frame(WaveTexture(1).render(64, 64));
    const auto pts = grid_points(64, 64, 12, 8);
    const LkResult r = lk_track(f, f, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        EXPECT_TRUE(r.status[i]);
        EXPECT_NEAR(r.points[i].x, pts[i].x, 1e-6);
        EXPECT_NEAR(r.points[i].y, pts[i].y, 1e-6);
    }
}

TEST(LucasKanade, RecoversThreePixelShift) {
    const WaveTexture tex(2);
    const Frame a = make_frame(tex.render(96, 96));
    const Frame b = make_frame(tex.render(96, 96, 3.0, 0.0));
    const auto pts = grid_points(96, 96, 20, 8);
    const LkResult r = lk_track(a, b, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        ASSERT_TRUE(r.status[i]);
        EXPECT_NEAR(r.points[i].x - pts[i].x, 3.0, 0.2);
        EXPECT_NEAR(r.points[i].y - pts[i].y, 0.0, 0.2);
    }
}

TEST(LucasKanade, RecoversSubPixelShiftsUpToFourPixels) {
    const WaveTexture tex(4);
    const Frame a = make_frame(tex.render(96, 96));
    for (auto [dx, dy] : {std::pair{4.0, 0.0}, {0.0, -4.0}, {2.6, -2.9}, {-1.3, 0.7}, {-2.8, 2.8}}) {
        const Frame b = make_frame(tex.render(96, 96, dx, dy));
        const auto pts = grid_points(96, 96, 24, 12);
        const LkResult r = lk_track(a, b, pts);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            ASSERT_TRUE(r.status[i]);
            EXPECT_NEAR(r.points[i].x - pts[i].x, dx, 0.2);
            EXPECT_NEAR(r.points[i].y - pts[i].y, dy, 0.2);
        }
    }
}

TEST(LucasKanade, FlatRegionIsFlaggedInvalid) {
    Image img(64, 64, 0.5f);
    WaveTexture tex(7);
    for (int y = 0; y < 64; ++y)
        for (int x = 40; x < 64; ++x) img.at(x, y) = static_cast<float>(tex(x, y));
    const Frame f = make_frame(img);
    const LkResult r = lk_track(f, f, {{12.0, 32.0}, {52.0, 32.0}});
    EXPECT_FALSE(r.status[0]);
    EXPECT_TRUE(r.status[1]);
}

TEST(LucasKanade, MismatchedFramesRejected) {
    EXPECT_THROW(lk_track(make_frame(Image(20, 20)), make_frame(Image(21, 20)), {{5, 5}}), ValidationError);
}

namespace {

const BoundingBox kBox{40, 30, 40, 40};

} // namespace

TEST(Mosse, SelfCorrelationPeaksAtCentre) {
    const Frame f = make_frame(WaveTexture(11).render(128, 96));
    const MosseState s = mosse_init(f, kBox);
    const Image resp = mosse_response(s, f);
    int bx = 0, by = 0;
    for (int y = 0; y < resp.height(); ++y)
        for (int x = 0; x < resp.width(); ++x)
            if (resp.at(x, y) > resp.at(bx, by)) bx = x, by = y;
    EXPECT_EQ(bx, s.window_width() / 2);
    EXPECT_EQ(by, s.window_height() / 2);
}

TEST(Mosse, SelfMatchHoldsBoxWithHighPsr) {
    const Frame f = make_frame(WaveTexture(12).render(128, 96));
    MosseState s = mosse_init(f, kBox);
    const MosseUpdate u = mosse_update(s, f);
    EXPECT_GT(u.psr, 8.0);
    EXPECT_FALSE(u.lost);
    EXPECT_NEAR(u.box.x, kBox.x, 1e-9);
    EXPECT_NEAR(u.box.y, kBox.y, 1e-9);
}

TEST(Mosse, FollowsTranslation) {
    const WaveTexture tex(13);
    MosseState s = mosse_init(make_frame(tex.render(128, 96)), kBox);
    const MosseUpdate u = mosse_update(s, make_frame(tex.render(128, 96, 5.0, 2.0)));
    EXPECT_LE(std::abs(u.box.center().x - kBox.center().x - 5.0), 2.0);
    EXPECT_LE(std::abs(u.box.center().y - kBox.center().y - 2.0), 2.0);
}

TEST(Mosse, NoiseFrameFallsBelowThreshold) {
    MosseState s = mosse_init(make_frame(WaveTexture(14).render(128, 96)), kBox);
    Rng rng(99);
    Image noise(128, 96);
    for (auto& v : noise.data()) v = static_cast<float>(rng.uniform());
    const MosseUpdate u = mosse_update(s, make_frame(noise));
    EXPECT_LT(u.psr, 8.0);
    EXPECT_TRUE(u.lost);
    EXPECT_EQ(u.box, kBox);
}

TEST(Mosse, NoisePatchInitIsValid) {
    Rng rng(5);
    Image noise(64, 64);
    for (auto& v : noise.data()) v = static_cast<float>(rng.uniform());
    EXPECT_TRUE(mosse_init(make_frame(noise), {10, 10, 32, 32}).initialized());
}

TEST(Mosse, ContractViolations) {
    const Frame f = make_frame(WaveTexture(15).render(64, 64));
    EXPECT_THROW(mosse_init(f, {70, 10, 20, 20}), ValidationError);
    EXPECT_THROW(mosse_init(f, {10, 10, 6, 20}), ValidationError);
    MosseParams zero;
    zero.epsilon = 0.0;
    EXPECT_THROW(mosse_init(make_frame(Image(64, 64, 0.4f)), {10, 10, 32, 32}, zero), ValidationError);
    MosseState empty;
    EXPECT_THROW(mosse_update(empty, f), ValidationError);
}

TEST(Mosse, PsrFallsAsNoiseGrows) {
    // Mean PSR over 30 noise draws per amplitude must decrease monotonically.
    const WaveTexture tex(16);
    const Image clean = tex.render(128, 96);
    const MosseState init = mosse_init(make_frame(clean), kBox);
    std::vector<double> means;
    for (double amp : {0.0, 0.1, 0.25, 0.5, 1.0}) {
        double sum = 0.0;
        for (int trial = 0; trial < 30; ++trial) {
            Rng rng(1000 + trial);
            Image noisy = clean;
            for (auto& v : noisy.data()) v = static_cast<float>(std::clamp(v + amp * rng.normal(), 0.0, 1.0));
            MosseState s = init;
            sum += mosse_update(s, make_frame(noisy)).psr;
        }
        means.push_back(sum / 30.0);
    }
    for (std::size_t i = 1; i < means.size(); ++i) EXPECT_LT(means[i], means[i - 1]) << i;
}

namespace {

FrameSequence panning_sequence(const WaveTexture& tex, int frames, double step_x) {
    std::vector<Image> images;
    for (int i = 0; i < frames; ++i) images.push_back(tex.render(128, 96, step_x * i, 0.0));
    return FrameSequence::from_images(std::move(images), 10.0);
}

} // namespace

TEST(Propagate, StaticSceneKeepsBox) {
    const auto seq = panning_sequence(WaveTexture(17), 12, 0.0);
    const BoxTrack t = propagate_bbox(seq, {{0, kBox}});
    ASSERT_EQ(t.boxes.size(), 12u);
    for (const auto& b : t.boxes) EXPECT_EQ(b, kBox);
}

TEST(Propagate, NearestDetectionWinsWithEarlierTies) {
    // The scene pans by 0.5 px/frame; the detection at frame 100 is offset by
    // 20 px from where tracking from frame 0 would put it.
    const auto seq = panning_sequence(WaveTexture(18), 101, 0.5);
    const BoundingBox late{kBox.x + 50.0 - 20.0, kBox.y, kBox.w, kBox.h};
    const BoxTrack t = propagate_bbox(seq, {{0, kBox}, {100, late}});
    ASSERT_EQ(t.boxes.size(), 101u);
    for (int i = 0; i <= 100; ++i) {
        const double from_first = kBox.x + 0.5 * i;
        const double from_last = late.x - 0.5 * (100 - i);
        const double expected = i <= 50 ? from_first : from_last;
        EXPECT_NEAR(t.boxes[i].x, expected, 2.0) << i;
    }
}

TEST(Propagate, RequiresDetectionsAndClampsBoxes) {
    const auto seq = panning_sequence(WaveTexture(19), 5, 0.0);
    EXPECT_THROW(propagate_bbox(seq, {}), ValidationError);
    const BoxTrack t = propagate_bbox(seq, {{0, {100, 70, 40, 40}}});
    for (const auto& b : t.boxes) {
        EXPECT_GE(b.x, 0.0);
        EXPECT_LE(b.x + b.w, 128.0);
        EXPECT_LE(b.y + b.h, 96.0);
    }
}

TEST(Detections, CsvRoundTrip) {
    nnseg::test::TempDir dir;
    const DetectionMap d{{0, {1.5, 2, 30, 40}}, {7, {3, 4.25, 31, 41}}};
    write_detections(d, dir / "d.csv");
    EXPECT_EQ(read_detections(dir / "d.csv"), d);
}

TEST(Detections, ReplayDetectorFindsFirstFace) {
    const auto seq = panning_sequence(WaveTexture(20), 6, 0.0);
    const ReplayDetector det({{3, kBox}, {5, kBox}});
    const DetectionMap found = detect_first_face(seq, det);
    ASSERT_EQ(found.size(), 1u);
    EXPECT_EQ(found.begin()->first, 3);
}
