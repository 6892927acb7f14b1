#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "nnseg/image.hpp"
#include "nnseg/optical_flow.hpp"

namespace nnseg {

/// HSV-encoded flow frames of one fixed-length window (26 frames -> 25 fields
/// at the default 2.5 s / 10 Hz).
struct Window {
    std::vector<ColorImage> hsv_frames;
    std::string source;
    double start_s = 0.0;
    double length_s = 2.5;
};

struct WindowScore {
    double score = 0.0;
    std::string source;
    double start_s = 0.0;
    double end_s = 0.0;
};

/// Slices the window starting at `start_s` out of a clip's flow sequence.
/// The window spans round(length_s * fps) flow fields; windows running past
/// the last field are shifted back to end on it.
Window make_window(const FlowSequence& flow, double fps, const std::string& source, double start_s,
                   double length_s = 2.5);

// ---------------------------------------------------------------------------
// Spectral baseline

inline constexpr std::size_t kFeatureCount = 8;
using FeatureVector = std::array<double, kFeatureCount>;

/// Feature layout, in order.
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames{
    "energy",       // mean squared per-frame motion
    "band_low",     // spectral energy of the motion series, low band
    "band_nns",     // ... periodic-motion band
    "band_high",    // ... high band
    "nns_ratio",    // band_nns / total non-DC spectral energy
    "concentration",// share of per-pixel motion energy in the top pixels
    "temporal_std", // std of the motion series
    "mean_motion",  // mean of the motion series
};

struct FeatureSpec {
    double sample_rate_hz = 10.0;
    std::array<std::pair<double, double>, 3> bands{{{0.0, 1.0}, {1.5, 3.0}, {3.0, 5.0}}};
    double top_fraction = 0.1;

    bool operator==(const FeatureSpec&) const = default;
};

/// Per-frame mean of the HSV value channel.
std::vector<double> motion_series(const Window& w);

FeatureVector extract_features(const Window& w, const FeatureSpec& spec = {});

/// Same features from a precomputed motion series and per-pixel energy map.
FeatureVector features_from_series(const std::vector<double>& series, const std::vector<double>& pixel_energy,
                                   const FeatureSpec& spec = {});

struct BaselineModel {
    FeatureSpec spec;
    FeatureVector weights{};
    double bias = 0.0;

    double logit(const FeatureVector& f) const;
    double probability(const FeatureVector& f) const;
};

struct TrainParams {
    double learning_rate = 0.1;
    int epochs = 500;
    double l2 = 1e-3;
};

struct LabeledFeatures {
    FeatureVector features{};
    int label = 0; ///< 1 = NNS
};

/// L2-regularized logistic regression by full-batch gradient descent from
/// zero weights. Features are standardized internally and the returned model
/// is expressed on raw features.
BaselineModel train_baseline(const std::vector<LabeledFeatures>& data, const TrainParams& params = {},
                             const FeatureSpec& spec = {});

/// Mean logistic-loss gradient (plus l2 * w on the weights) at (weights, bias).
struct LogisticGradient {
    std::vector<double> weights;
    double bias = 0.0;
};
LogisticGradient logistic_gradient(const std::vector<double>& weights, double bias,
                                   const std::vector<std::vector<double>>& x, const std::vector<int>& y, double l2);

void save_baseline(const BaselineModel& model, const std::filesystem::path& path);
BaselineModel load_baseline(const std::filesystem::path& path);

double sigmoid(double z);

// ---------------------------------------------------------------------------
// Backends

class ScoreBackend {
public:
    virtual ~ScoreBackend() = default;
    /// Score in [0,1]. Must be safe to call concurrently.
    virtual double score(const Window& w) const = 0;
    /// True when the backend reads window content (false for score replay).
    virtual bool needs_frames() const { return true; }
};

class BaselineBackend final : public ScoreBackend {
public:
    explicit BaselineBackend(BaselineModel model) : model_(std::move(model)) {}
    double score(const Window& w) const override;
    const BaselineModel& model() const { return model_; }

private:
    BaselineModel model_;
};

/// Replays scores from a `source,start_s,end_s,score` CSV; start times are
/// matched exactly after rounding to milliseconds.
class ScoreFileBackend final : public ScoreBackend {
public:
    explicit ScoreFileBackend(const std::filesystem::path& path);
    explicit ScoreFileBackend(const std::vector<WindowScore>& scores);
    double score(const Window& w) const override;
    bool needs_frames() const override { return false; }

    /// Sources present in the file, sorted.
    std::vector<std::string> sources() const;

private:
    std::map<std::pair<std::string, long long>, double> scores_;
};

struct OnnxModelMeta {
    int input_size = 0;
    int frames = 0;
    bool emits_logit = false;
};

OnnxModelMeta read_model_meta(const std::filesystem::path& path);

/// Runs an ONNX window classifier. Input tensor layout is
/// [1, frames, 3, input_size, input_size] holding HSV channels in [0,1];
/// the first output element is the score (sigmoid applied when the sidecar
/// says `emits=logit`). Windows whose shape differs from the sidecar are
/// rejected, never resized.
class OnnxBackend final : public ScoreBackend {
public:
    OnnxBackend(const std::filesystem::path& model, const std::filesystem::path& meta);
    ~OnnxBackend() override;
    double score(const Window& w) const override;
    const OnnxModelMeta& meta() const { return meta_; }

    static bool available();

private:
    struct Impl;
    OnnxModelMeta meta_;
    std::unique_ptr<Impl> impl_;
};

/// `baseline:<model.txt>`, `onnx:<model.onnx>`, or `scorefile:<scores.csv>`.
/// The ONNX sidecar is `<stem>.meta` beside the model, falling back to
/// `model.meta` in the same directory.
std::unique_ptr<ScoreBackend> make_backend(const std::string& spec);

WindowScore classify_window(const ScoreBackend& backend, const Window& w);

std::vector<WindowScore> read_scores(const std::filesystem::path& path);
void write_scores(const std::vector<WindowScore>& scores, const std::filesystem::path& path,
                  const std::vector<std::string>& header_comments = {});

} // namespace nnseg
