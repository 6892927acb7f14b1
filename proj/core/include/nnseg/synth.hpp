#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nnseg/annotations.hpp"
#include "nnseg/geometry.hpp"
#include "nnseg/text.hpp"
#include "nnseg/video_io.hpp"

namespace nnseg {

/// Parameters of a synthetic monochrome infant-face video.
struct SynthSpec {
    double duration_s = 60.0;
    double fps = 10.0;
    int width = 160;
    int height = 120;
    BoundingBox face{50, 25, 60, 70};

    double suck_hz = 2.0;
    double amplitude_px = 2.0;
    int sucks_min = 6;
    int sucks_max = 12;
    /// Explicit burst start times; when empty, bursts are placed at random
    /// with `burst_rate_per_min`.
    std::vector<double> bursts;
    double burst_rate_per_min = 0.0;

    double jitter_std_px = 0.0; ///< random-walk step std
    double jitter_max_px = 5.0; ///< walk is clamped to +-jitter_max_px
    double noise_std = 0.01;
    double drift_px = 0.0; ///< slow horizontal head sway amplitude
    double drift_hz = 0.3;

    std::string subject = "synth";
    std::string coder = "gen";
    std::uint64_t seed = 0;
};

/// Throws ValidationError on a Nyquist violation, negative amplitude or
/// noise, a face box outside the frame, or bursts that overrun the duration
/// or overlap.
void validate(const SynthSpec& spec);

/// Applies `key=value` pairs to `spec`; unknown keys are rejected.
void apply_synth_keys(SynthSpec& spec, const KeyValues& kv, std::string_view origin);
SynthSpec read_synth_spec(const std::filesystem::path& path);
/// Every field as `key=value` lines, readable by read_synth_spec.
KeyValues synth_spec_keys(const SynthSpec& spec);

struct SynthVideo {
    FrameSequence video;
    AnnotationSet annotations;       ///< one nns event per burst
    Trajectory jitter;               ///< global translation per frame
    std::vector<BoundingBox> faces;  ///< ground-truth face box per frame
};

/// Renders value-noise background and face textures, a mouth patch that is
/// displaced vertically by amplitude * sin(2 pi f (t - burst start)) during
/// each burst, the global jitter walk, and clamped Gaussian pixel noise.
/// Bit-identical for equal specs.
SynthVideo generate_video(const SynthSpec& spec);

/// Smooth value noise in roughly [0, 1], evaluated at continuous coordinates.
double value_noise(std::uint64_t seed, double x, double y);

} // namespace nnseg
