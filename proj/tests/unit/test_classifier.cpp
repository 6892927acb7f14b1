#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nnseg/classifier.hpp"
#include "nnseg/error.hpp"
#include "nnseg/rng.hpp"
#include "nnseg/text.hpp"
#include "test_support.hpp"

using namespace nnseg;

#ifndef NNSEG_TEST_DATA
#error "NNSEG_TEST_DATA must point at tests/data"
#endif

namespace {

const std::filesystem::path kData = NNSEG_TEST_DATA;

// Window whose value channel is uniform per frame and follows `series`.
Window series_window(const std::vector<double>& series, int size = 8) {
    Window w;
    w.source = "clip";
    for (double v : series) {
        ColorImage img(size, size);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                img.at(x, y, 1) = 1.0f;
                img.at(x, y, 2) = static_cast<float>(v);
            }
        w.hsv_frames.push_back(img);
    }
    return w;
}

std::vector<double> tone(double hz, double amp = 0.4, double offset = 0.5, int n = 25, double fs = 10.0) {
    std::vector<double> s(n);
    for (int t = 0; t < n; ++t) s[t] = offset + amp * std::sin(2.0 * std::numbers::pi * hz * t / fs);
    return s;
}

} // namespace

TEST(Features, BlackWindowIsAllZero) {
    const FeatureVector f = extract_features(series_window(std::vector<double>(25, 0.0)));
    for (double v : f) EXPECT_EQ(v, 0.0);
}

TEST(Features, TwoHertzToneLivesInTheNnsBand) {
    // 2 Hz is DFT bin 5 of 25 samples at 10 Hz: all non-DC power A^2/4 lands there.
    const FeatureVector f = extract_features(series_window(tone(2.0)));
    EXPECT_GT(f[4], 0.8);
    // Frames hold float samples, so values carry float rounding (~6e-8 relative).
    EXPECT_NEAR(f[2], 0.4 * 0.4 / 4.0, 1e-7);
    EXPECT_NEAR(f[1], 0.0, 1e-12);
    EXPECT_NEAR(f[3], 0.0, 1e-12);
    EXPECT_NEAR(f[7], 0.5, 1e-7);
    EXPECT_NEAR(f[6], 0.4 / std::sqrt(2.0), 1e-7);
}

TEST(Features, SlowDriftStaysOutOfTheNnsBand) {
    EXPECT_LT(extract_features(series_window(tone(0.3))).at(4), 0.2);
}

TEST(Features, BandsObeyParseval) {
    // Tones on bins other than 3 (1.2 Hz, between the low and NNS bands):
    // band powers must add up to half the population variance.
    Rng rng(8);
    std::vector<double> s(25, 0.5);
    for (int k : {1, 2, 4, 6, 9, 11, 12}) {
        const double a = rng.uniform(0.01, 0.05), ph = rng.uniform(0.0, 6.28);
        for (int t = 0; t < 25; ++t) s[t] += a * std::cos(2 * std::numbers::pi * k * t / 25.0 + ph);
    }
    const FeatureVector f = features_from_series(s, {});
    EXPECT_NEAR(f[1] + f[2] + f[3], 0.5 * f[6] * f[6], 1e-12);
}

TEST(Features, ConcentrationOfALocalisedPatch) {
    // 10 of 100 pixels carry all the motion energy -> concentration 1; uniform -> 0.1.
    Window w = series_window(tone(2.0, 0.0, 0.0), 10);
    for (auto& img : w.hsv_frames)
        for (int y = 0; y < 1; ++y)
            for (int x = 0; x < 10; ++x) img.at(x, y, 2) = 0.7f;
    EXPECT_NEAR(extract_features(w)[5], 1.0, 1e-9);
    EXPECT_NEAR(extract_features(series_window(tone(2.0), 10))[5], 0.1, 1e-6);
}

TEST(Features, FlipInvariant) {
    Window w = series_window(tone(2.0), 6);
    Rng rng(4);
    for (auto& img : w.hsv_frames)
        for (auto& v : img.data()) v = static_cast<float>(rng.uniform());
    Window flipped = w;
    for (auto& img : flipped.hsv_frames) {
        ColorImage m(img.width(), img.height());
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                for (int c = 0; c < 3; ++c) m.at(img.width() - 1 - x, y, c) = img.at(x, y, c);
        img = m;
    }
    const FeatureVector a = extract_features(w), b = extract_features(flipped);
    for (std::size_t i = 0; i < kFeatureCount; ++i) EXPECT_NEAR(a[i], b[i], 1e-9) << kFeatureNames[i];
}

TEST(Training, SeparableToySet) {
    // Two clusters in the first two feature dimensions, separated by x0 + x1 = 0.
    Rng rng(12);
    std::vector<LabeledFeatures> data;
    for (int i = 0; i < 200; ++i) {
        LabeledFeatures d;
        const int label = i % 2;
        d.features[0] = rng.uniform(0.2, 2.0) * (label ? 1 : -1);
        d.features[1] = rng.uniform(-1.0, 1.0) + (label ? 0.5 : -0.5);
        d.label = label;
        data.push_back(d);
    }
    const BaselineModel m = train_baseline(data, {0.1, 500, 1e-3});
    int correct = 0;
    for (const auto& d : data) correct += (m.probability(d.features) >= 0.5) == (d.label == 1);
    EXPECT_GE(correct / 200.0, 0.99);
}

TEST(Training, SingleClassRejected) {
    std::vector<LabeledFeatures> data(4);
    EXPECT_THROW(train_baseline(data), ValidationError);
    data.resize(1);
    EXPECT_THROW(train_baseline(data), ValidationError);
}

TEST(Training, BalancedSymmetricDataHasZeroBiasGradient) {
    const std::vector<std::vector<double>> x{{1.0, 2.0}, {-1.0, -2.0}, {0.5, -0.3}, {-0.5, 0.3}};
    const std::vector<int> y{1, 0, 1, 0};
    EXPECT_NEAR(logistic_gradient({0.0, 0.0}, 0.0, x, y, 0.01).bias, 0.0, 1e-15);
}

TEST(Training, GradientMatchesFiniteDifferences) {
    const std::vector<std::vector<double>> x{{1.0, 2.0}, {-1.5, 0.2}, {0.5, -0.3}, {2.0, 1.0}};
    const std::vector<int> y{1, 0, 0, 1};
    const std::vector<double> w{0.3, -0.2};
    const double b = 0.1, l2 = 0.05;
    auto loss = [&](std::vector<double> ww, double bb) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double z = bb + ww[0] * x[i][0] + ww[1] * x[i][1];
            s += std::log1p(std::exp(-z)) + (1 - y[i]) * z;
        }
        return s / x.size() + 0.5 * l2 * (ww[0] * ww[0] + ww[1] * ww[1]);
    };
    const LogisticGradient g = logistic_gradient(w, b, x, y, l2);
    const double h = 1e-6;
    for (int j = 0; j < 2; ++j) {
        auto wp = w, wm = w;
        wp[j] += h;
        wm[j] -= h;
        EXPECT_NEAR(g.weights[j], (loss(wp, b) - loss(wm, b)) / (2 * h), 1e-7);
    }
    EXPECT_NEAR(g.bias, (loss(w, b + h) - loss(w, b - h)) / (2 * h), 1e-7);
}

TEST(Baseline, SaveLoadRoundTrip) {
    nnseg::test::TempDir dir;
    BaselineModel m;
    for (std::size_t i = 0; i < kFeatureCount; ++i) m.weights[i] = 0.1 * i - 0.35 + 1e-13;
    m.bias = -2.5;
    save_baseline(m, dir / "m.txt");
    const BaselineModel r = load_baseline(dir / "m.txt");
    EXPECT_EQ(r.weights, m.weights);
    EXPECT_EQ(r.bias, m.bias);
    EXPECT_EQ(r.spec, m.spec);
    EXPECT_EQ(nnseg::read_text_file(dir / "m.txt").substr(0, 3), "v1\n");
}

TEST(Baseline, ScoreInUnitIntervalAndDeterministic) {
    BaselineModel m;
    m.weights.fill(50.0);
    const BaselineBackend backend(m);
    const Window w = series_window(tone(2.0));
    const WindowScore a = classify_window(backend, w), b = classify_window(backend, w);
    EXPECT_GE(a.score, 0.0);
    EXPECT_LE(a.score, 1.0);
    EXPECT_EQ(a.score, b.score);
    EXPECT_DOUBLE_EQ(a.end_s - a.start_s, 2.5);
}

TEST(ScoreFile, ReplaysExactEntries) {
    const ScoreFileBackend backend(std::vector<WindowScore>{{0.72, "clipA", 0.0, 2.5}, {0.1, "clipA", 0.5, 3.0}});
    Window w;
    w.source = "clipA";
    w.start_s = 0.0;
    EXPECT_DOUBLE_EQ(classify_window(backend, w).score, 0.72);
    w.start_s = 0.5000001;
    EXPECT_DOUBLE_EQ(classify_window(backend, w).score, 0.1);
    w.start_s = 1.0;
    EXPECT_THROW(classify_window(backend, w), ValidationError);
    w.source = "clipB";
    w.start_s = 0.0;
    EXPECT_THROW(classify_window(backend, w), ValidationError);
}

TEST(ScoreFile, CsvRoundTripAndMakeBackend) {
    nnseg::test::TempDir dir;
    write_scores({{0.25, "a", 0.0, 2.5}, {1.0, "b", 1.5, 4.0}}, dir / "s.csv", {"note"});
    const auto s = read_scores(dir / "s.csv");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[1].source, "b");
    EXPECT_DOUBLE_EQ(s[1].start_s, 1.5);
    const auto backend = make_backend("scorefile:" + (dir / "s.csv").string());
    EXPECT_FALSE(backend->needs_frames());
    EXPECT_THROW(make_backend("nonsense"), ValidationError);
    EXPECT_THROW(make_backend("magic:x"), ValidationError);
    EXPECT_THROW(make_backend("baseline:" + (dir / "missing.txt").string()), IoError);
}

TEST(Window, SlicesAndShiftsBackAtTheEnd) {
    FlowSequence flow;
    for (int i = 0; i < 40; ++i) {
        ColorImage img(2, 2);
        img.at(0, 0, 0) = static_cast<float>(i);
        flow.hsv_frames.push_back(img);
    }
    const Window a = make_window(flow, 10.0, "s", 0.5);
    ASSERT_EQ(a.hsv_frames.size(), 25u);
    EXPECT_EQ(a.hsv_frames.front().at(0, 0, 0), 5.0f);
    const Window b = make_window(flow, 10.0, "s", 1.5);
    EXPECT_EQ(b.hsv_frames.front().at(0, 0, 0), 15.0f);
    EXPECT_EQ(b.hsv_frames.back().at(0, 0, 0), 39.0f);
}

TEST(Onnx, TinyModelScoresAndAppliesSigmoid) {
    if (!OnnxBackend::available()) GTEST_SKIP() << "built without OpenCV DNN";
    const auto backend = make_backend("onnx:" + (kData / "tiny.onnx").string());
    // logit = 4 * mean(input) - 1; a black window has mean 1/3 (saturation 1).
    const WindowScore black = classify_window(*backend, series_window(std::vector<double>(25, 0.0)));
    EXPECT_NEAR(black.score, 1.0 / (1.0 + std::exp(-(4.0 / 3.0 - 1.0))), 1e-5);
    const WindowScore bright = classify_window(*backend, series_window(std::vector<double>(25, 1.0)));
    EXPECT_NEAR(bright.score, 1.0 / (1.0 + std::exp(-(4.0 * 2.0 / 3.0 - 1.0))), 1e-5);
}

TEST(Onnx, ShapeMismatchIsAnErrorNotAResize) {
    if (!OnnxBackend::available()) GTEST_SKIP() << "built without OpenCV DNN";
    const auto backend = make_backend("onnx:" + (kData / "tiny.onnx").string());
    EXPECT_THROW(classify_window(*backend, series_window(std::vector<double>(25, 0.0), 16)), ValidationError);
    EXPECT_THROW(classify_window(*backend, series_window(std::vector<double>(24, 0.0))), ValidationError);
}

TEST(Onnx, MetaSidecarValidation) {
    nnseg::test::TempDir dir;
    nnseg::write_text_file(dir / "m.meta", "input_size=8\nframes=25\n");
    EXPECT_THROW(read_model_meta(dir / "m.meta"), ValidationError);
    nnseg::write_text_file(dir / "m.meta", "input_size=8\nframes=25\nemits=probability\n");
    const OnnxModelMeta m = read_model_meta(dir / "m.meta");
    EXPECT_EQ(m.input_size, 8);
    EXPECT_FALSE(m.emits_logit);
}
