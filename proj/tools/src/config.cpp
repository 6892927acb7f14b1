#include "config.hpp"

#include <algorithm>

#include "nnseg/error.hpp"
#include "nnseg/text.hpp"

namespace nnseg::cli {

const std::vector<KeySpec>& schema() {
    using K = KeyKind;
    static const std::vector<KeySpec> keys{
        {"fps", "10", K::Real, "frame rate assumed when a video has no meta.txt"},
        {"jobs", "1", K::Integer, "worker threads for per-frame and per-window work"},
        {"seed", "0", K::Integer, "seed for every random draw"},
        // stabilizer
        {"smooth_window_s", "1.5", K::Real, "moving-average window for the box trajectory (s)"},
        {"crop_margin", "0.1", K::Real, "face-crop margin as a fraction of the box size"},
        {"crop_size", "112", K::Integer, "side of the square face crop (px)"},
        {"corners_max", "200", K::Integer, "Shi-Tomasi corner budget"},
        {"corners_quality", "0.01", K::Real, "corner quality relative to the strongest response"},
        {"corners_min_distance", "8", K::Real, "minimum corner spacing (px)"},
        {"min_valid_corners", "20", K::Integer, "re-detect corners below this many tracked points"},
        {"lk_levels", "3", K::Integer, "Lucas-Kanade pyramid levels"},
        {"lk_window", "15", K::Integer, "Lucas-Kanade window side (px, odd)"},
        {"lk_iterations", "10", K::Integer, "Lucas-Kanade iterations per level"},
        {"mosse_learning_rate", "0.125", K::Real, "MOSSE running-average rate"},
        {"mosse_epsilon", "1e-05", K::Real, "MOSSE filter regularizer"},
        {"mosse_psr_threshold", "8", K::Real, "MOSSE peak-to-sidelobe failure threshold"},
        {"augment", "off", K::Choice, "apply one random rotation/scale/flip per clip", {"off", "on"}},
        {"augment_rotation_deg", "15", K::Real, "rotation range (+-deg)"},
        {"augment_scale_min", "0.9", K::Real, "minimum scale factor"},
        {"augment_scale_max", "1.1", K::Real, "maximum scale factor"},
        {"augment_flip_p", "0.5", K::Real, "horizontal flip probability"},
        // optical flow
        {"flow_levels", "3", K::Integer, "dense-flow pyramid levels"},
        {"flow_pyr_scale", "0.5", K::Real, "dense-flow pyramid scale"},
        {"flow_window", "15", K::Integer, "dense-flow averaging window (px)"},
        {"flow_iterations", "3", K::Integer, "dense-flow iterations per level"},
        {"poly_n", "5", K::Integer, "polynomial expansion radius (px)"},
        {"poly_sigma", "1.1", K::Real, "polynomial expansion Gaussian sigma"},
        {"hsv_norm", "per-frame", K::Choice, "HSV value scaling", {"per-frame", "fixed"}},
        {"hsv_max_mag", "4", K::Real, "flow magnitude mapped to value 1 in fixed mode (px)"},
        // classification and segmentation
        {"backend", "", K::Text, "baseline:<model>, onnx:<model.onnx> or scorefile:<scores.csv>"},
        {"window_s", "2.5", K::Real, "classification window length (s)"},
        {"stride_s", "0.5", K::Real, "sliding-window stride (s)"},
        {"mode", "smoothed", K::Choice, "aggregation mode", {"tiled", "sliding", "smoothed"}},
        {"threshold", "0.5", K::Real, "score threshold (>= is positive)"},
        {"min_dur_s", "0.5", K::Real, "shortest event kept (s)"},
        {"merge_gap_s", "0", K::Real, "merge events separated by less than this (s)"},
        // evaluation
        {"iou_thresholds", "0.1,0.3,0.5", K::Text, "comma-separated IoU thresholds"},
        {"kappa_window_s", "10", K::Real, "incidence window for Cohen's kappa (s)"},
        // sampling
        {"n_pos", "80", K::Integer, "positive clips per annotation set"},
        {"n_neg", "80", K::Integer, "negative clips per annotation set"},
        {"clip_s", "2.5", K::Real, "classification clip length (s)"},
        {"n_mixed", "0", K::Integer, "mixed clips per annotation set"},
        {"mixed_clip_s", "60", K::Real, "mixed clip length (s)"},
        // baseline training
        {"train_learning_rate", "0.1", K::Real, "gradient-descent step"},
        {"train_epochs", "500", K::Integer, "full-batch gradient steps"},
        {"train_l2", "0.001", K::Real, "L2 penalty on standardized weights"},
    };
    return keys;
}

const KeySpec& key_spec(std::string_view name) {
    const auto& s = schema();
    const auto it = std::find_if(s.begin(), s.end(), [&](const KeySpec& k) { return k.name == name; });
    if (it == s.end()) throw ValidationError("unknown configuration key '" + std::string(name) + "'");
    return *it;
}

Config::Config() {
    for (const auto& k : schema()) values_[k.name] = k.default_value;
}

void Config::set(const std::string& key, const std::string& value, std::string_view origin) {
    const KeySpec& spec = key_spec(key);
    const std::string what = std::string(origin) + ": " + key;
    switch (spec.kind) {
    case KeyKind::Real: parse_double(value, what); break;
    case KeyKind::Integer: parse_int(value, what); break;
    case KeyKind::Choice:
        if (std::find(spec.choices.begin(), spec.choices.end(), value) == spec.choices.end()) {
            std::string allowed;
            for (const auto& c : spec.choices) allowed += (allowed.empty() ? "" : "|") + c;
            throw ValidationError(what + ": expected " + allowed + ", got '" + value + "'");
        }
        break;
    case KeyKind::Text: break;
    }
    values_[key] = value;
}

void Config::load_file(const std::filesystem::path& path) {
    for (const auto& [k, v] : read_key_values(path)) set(k, v, path.string());
}

const std::string& Config::text(const std::string& key) const {
    key_spec(key);
    return values_.at(key);
}

double Config::real(const std::string& key) const { return parse_double(text(key), key); }

int Config::integer(const std::string& key) const { return static_cast<int>(parse_int(text(key), key)); }

std::vector<double> Config::reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& part : split(text(key), ',')) out.push_back(parse_double(part, key));
    return out;
}

std::vector<std::string> Config::describe(const std::vector<std::string>& keys) const {
    std::vector<std::string> out;
    for (const auto& k : keys) out.push_back(k + "=" + text(k));
    return out;
}

StabilizeParams stabilize_params(const Config& c) {
    StabilizeParams p;
    p.smooth_window_s = c.real("smooth_window_s");
    p.crop.margin = c.real("crop_margin");
    p.crop.out_size = c.integer("crop_size");
    p.trajectory.corners.max_corners = c.integer("corners_max");
    p.trajectory.corners.quality = c.real("corners_quality");
    p.trajectory.corners.min_distance = c.real("corners_min_distance");
    p.trajectory.min_valid_corners = c.integer("min_valid_corners");
    p.trajectory.lk.levels = c.integer("lk_levels");
    p.trajectory.lk.window = c.integer("lk_window");
    p.trajectory.lk.max_iterations = c.integer("lk_iterations");
    p.mosse.learning_rate = c.real("mosse_learning_rate");
    p.mosse.epsilon = c.real("mosse_epsilon");
    p.mosse.psr_threshold = c.real("mosse_psr_threshold");
    p.mosse.seed = static_cast<std::uint64_t>(c.integer("seed"));
    return p;
}

ClipFlowParams flow_params(const Config& c) {
    ClipFlowParams p;
    p.flow.levels = c.integer("flow_levels");
    p.flow.pyr_scale = c.real("flow_pyr_scale");
    p.flow.window = c.integer("flow_window");
    p.flow.iterations = c.integer("flow_iterations");
    p.flow.poly_n = c.integer("poly_n");
    p.flow.poly_sigma = c.real("poly_sigma");
    p.hsv.norm = c.text("hsv_norm") == "fixed" ? HsvNorm::Fixed : HsvNorm::PerFrame;
    p.hsv.max_mag = c.real("hsv_max_mag");
    p.jobs = c.integer("jobs");
    return p;
}

AggregationMode aggregation_mode(const Config& c) { return parse_aggregation_mode(c.text("mode")); }

SegmentConfig segment_config(const Config& c) {
    SegmentConfig s;
    s.mode = aggregation_mode(c);
    s.threshold = c.real("threshold");
    s.cover.window_s = c.real("window_s");
    s.cover.stride_s = c.real("stride_s");
    s.events.min_dur_s = c.real("min_dur_s");
    s.events.merge_gap_s = c.real("merge_gap_s");
    s.flow = flow_params(c);
    s.jobs = c.integer("jobs");
    return s;
}

} // namespace nnseg::cli
