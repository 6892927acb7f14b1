#include "nnseg/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <sstream>

#include "nnseg/error.hpp"
#include "nnseg/text.hpp"

namespace nnseg {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Window make_window(const FlowSequence& flow, double fps, const std::string& source, double start_s, double length_s) {
    const int fields = static_cast<int>(std::lround(length_s * fps));
    const int total = static_cast<int>(flow.hsv_frames.size());
    if (fields < 1) throw ValidationError("make_window: window shorter than one frame interval");
    if (fields > total)
        throw ValidationError("make_window: clip has " + std::to_string(total) + " flow fields, window needs " +
                              std::to_string(fields));
    int first = static_cast<int>(std::lround(start_s * fps));
    first = std::clamp(first, 0, total - fields);
    Window w;
    w.source = source;
    w.start_s = start_s;
    w.length_s = length_s;
    w.hsv_frames.assign(flow.hsv_frames.begin() + first, flow.hsv_frames.begin() + first + fields);
    return w;
}

// ---------------------------------------------------------------------------
// Features

std::vector<double> motion_series(const Window& w) {
    std::vector<double> series;
    series.reserve(w.hsv_frames.size());
    for (const auto& f : w.hsv_frames) {
        const std::size_t n = static_cast<std::size_t>(f.width()) * f.height();
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += f.data()[3 * i + 2];
        series.push_back(n ? sum / static_cast<double>(n) : 0.0);
    }
    return series;
}

FeatureVector features_from_series(const std::vector<double>& series, const std::vector<double>& pixel_energy,
                                   const FeatureSpec& spec) {
    FeatureVector f{};
    const std::size_t n = series.size();
    if (n == 0) return f;
    const double nd = static_cast<double>(n);

    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / nd;
    double sq = 0.0, var = 0.0;
    for (double s : series) {
        sq += s * s;
        var += (s - mean) * (s - mean);
    }
    f[0] = sq / nd;
    f[6] = std::sqrt(var / nd);
    f[7] = mean;

    // One-sided power spectrum of the mean-removed series.
    double total = 0.0;
    std::array<double, 3> bands{};
    for (std::size_t k = 1; k <= n / 2; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t t = 0; t < n; ++t) {
            const double phase = -2.0 * std::numbers::pi * static_cast<double>(k * t) / nd;
            acc += (series[t] - mean) * std::complex<double>(std::cos(phase), std::sin(phase));
        }
        const double power = std::norm(acc) / (nd * nd);
        const double freq = static_cast<double>(k) * spec.sample_rate_hz / nd;
        total += power;
        for (std::size_t b = 0; b < bands.size(); ++b) {
            const auto [lo, hi] = spec.bands[b];
            // A lower edge shared with the previous band belongs to that band.
            const bool shared_edge = b > 0 && lo == spec.bands[b - 1].second;
            const bool above_lo = shared_edge ? freq > lo : freq >= lo;
            if (above_lo && freq <= hi) bands[b] += power;
        }
    }
    f[1] = bands[0];
    f[2] = bands[1];
    f[3] = bands[2];
    f[4] = total > 0.0 ? bands[1] / total : 0.0;

    if (!pixel_energy.empty()) {
        std::vector<double> e = pixel_energy;
        const double sum = std::accumulate(e.begin(), e.end(), 0.0);
        if (sum > 0.0) {
            const std::size_t top = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::ceil(spec.top_fraction * static_cast<double>(e.size()))));
            std::nth_element(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(top - 1), e.end(), std::greater<>());
            const double top_sum = std::accumulate(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(top), 0.0);
            f[5] = top_sum / sum;
        }
    }
    return f;
}

FeatureVector extract_features(const Window& w, const FeatureSpec& spec) {
    std::vector<double> energy;
    if (!w.hsv_frames.empty()) {
        const int width = w.hsv_frames.front().width();
        const int height = w.hsv_frames.front().height();
        energy.assign(static_cast<std::size_t>(width) * height, 0.0);
        for (const auto& f : w.hsv_frames) {
            if (f.width() != width || f.height() != height) throw ValidationError("extract_features: mixed frame sizes");
            for (std::size_t i = 0; i < energy.size(); ++i) {
                const double v = f.data()[3 * i + 2];
                energy[i] += v * v;
            }
        }
    }
    return features_from_series(motion_series(w), energy, spec);
}

// ---------------------------------------------------------------------------
// Logistic baseline

double BaselineModel::logit(const FeatureVector& f) const {
    double z = bias;
    for (std::size_t i = 0; i < kFeatureCount; ++i) z += weights[i] * f[i];
    return z;
}

double BaselineModel::probability(const FeatureVector& f) const { return sigmoid(logit(f)); }

LogisticGradient logistic_gradient(const std::vector<double>& weights, double bias,
                                   const std::vector<std::vector<double>>& x, const std::vector<int>& y, double l2) {
    if (x.size() != y.size() || x.empty()) throw ValidationError("logistic_gradient: bad data");
    LogisticGradient g;
    g.weights.assign(weights.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double z = bias;
        for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * x[i][j];
        const double err = sigmoid(z) - y[i];
        for (std::size_t j = 0; j < weights.size(); ++j) g.weights[j] += err * x[i][j];
        g.bias += err;
    }
    const double n = static_cast<double>(x.size());
    for (std::size_t j = 0; j < weights.size(); ++j) g.weights[j] = g.weights[j] / n + l2 * weights[j];
    g.bias /= n;
    return g;
}

BaselineModel train_baseline(const std::vector<LabeledFeatures>& data, const TrainParams& params,
                             const FeatureSpec& spec) {
    if (data.size() < 2) throw ValidationError("train_baseline: at least 2 examples required");
    const bool has_pos = std::any_of(data.begin(), data.end(), [](const auto& d) { return d.label == 1; });
    const bool has_neg = std::any_of(data.begin(), data.end(), [](const auto& d) { return d.label == 0; });
    if (!has_pos || !has_neg) throw ValidationError("train_baseline: both classes must be present");
    if (params.epochs < 1 || !(params.learning_rate > 0.0) || params.l2 < 0.0)
        throw ValidationError("train_baseline: invalid hyperparameters");

    const double n = static_cast<double>(data.size());
    FeatureVector mean{}, scale{};
    for (const auto& d : data)
        for (std::size_t j = 0; j < kFeatureCount; ++j) mean[j] += d.features[j] / n;
    for (const auto& d : data)
        for (std::size_t j = 0; j < kFeatureCount; ++j) scale[j] += (d.features[j] - mean[j]) * (d.features[j] - mean[j]) / n;
    for (auto& s : scale) s = s > 1e-24 ? std::sqrt(s) : 1.0;

    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (const auto& d : data) {
        if (d.label != 0 && d.label != 1) throw ValidationError("train_baseline: labels must be 0 or 1");
        std::vector<double> row(kFeatureCount);
        for (std::size_t j = 0; j < kFeatureCount; ++j) row[j] = (d.features[j] - mean[j]) / scale[j];
        x.push_back(std::move(row));
        y.push_back(d.label);
    }

    std::vector<double> w(kFeatureCount, 0.0);
    double b = 0.0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        const auto g = logistic_gradient(w, b, x, y, params.l2);
        for (std::size_t j = 0; j < kFeatureCount; ++j) w[j] -= params.learning_rate * g.weights[j];
        b -= params.learning_rate * g.bias;
    }

    BaselineModel model;
    model.spec = spec;
    model.bias = b;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        model.weights[j] = w[j] / scale[j];
        model.bias -= w[j] * mean[j] / scale[j];
    }
    return model;
}

namespace {

std::string spec_line(const FeatureSpec& s) {
    std::string line = "features fps=" + format_shortest(s.sample_rate_hz) + " bands=";
    for (std::size_t b = 0; b < s.bands.size(); ++b)
        line += (b ? "," : "") + format_shortest(s.bands[b].first) + ":" + format_shortest(s.bands[b].second);
    line += " top=" + format_shortest(s.top_fraction) + " stats=";
    for (std::size_t i = 0; i < kFeatureCount; ++i) line += (i ? "," : "") + std::string(kFeatureNames[i]);
    return line;
}

FeatureSpec parse_spec_line(const std::string& line) {
    std::istringstream in(line);
    std::string tok;
    in >> tok;
    if (tok != "features") throw ValidationError("baseline model: expected feature-spec line");
    FeatureSpec s;
    bool have_stats = false;
    while (in >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw ValidationError("baseline model: bad feature-spec token '" + tok + "'");
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "fps") {
            s.sample_rate_hz = parse_double(val, "fps");
        } else if (key == "top") {
            s.top_fraction = parse_double(val, "top");
        } else if (key == "bands") {
            const auto parts = split(val, ',');
            if (parts.size() != 3) throw ValidationError("baseline model: expected 3 bands");
            for (std::size_t b = 0; b < 3; ++b) {
                const auto lohi = split(parts[b], ':');
                if (lohi.size() != 2) throw ValidationError("baseline model: bad band '" + parts[b] + "'");
                s.bands[b] = {parse_double(lohi[0], "band"), parse_double(lohi[1], "band")};
            }
        } else if (key == "stats") {
            const auto names = split(val, ',');
            if (names.size() != kFeatureCount) throw ValidationError("baseline model: feature dimension mismatch");
            for (std::size_t i = 0; i < kFeatureCount; ++i)
                if (names[i] != kFeatureNames[i]) throw ValidationError("baseline model: unknown feature '" + names[i] + "'");
            have_stats = true;
        } else {
            throw ValidationError("baseline model: unknown feature-spec key '" + key + "'");
        }
    }
    if (!have_stats) throw ValidationError("baseline model: feature-spec line lacks stats");
    return s;
}

} // namespace

void save_baseline(const BaselineModel& model, const std::filesystem::path& path) {
    std::string out = "v1\n" + spec_line(model.spec) + "\n";
    for (std::size_t i = 0; i < kFeatureCount; ++i) out += (i ? " " : "") + format_shortest(model.weights[i]);
    out += "\n" + format_shortest(model.bias) + "\n";
    write_text_file(path, out);
}

BaselineModel load_baseline(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (!line.empty()) lines.push_back(line);
    }
    if (lines.size() != 4 || lines[0] != "v1") throw ValidationError(path.string() + ": not a v1 baseline model");
    BaselineModel m;
    m.spec = parse_spec_line(lines[1]);
    std::istringstream ws(lines[2]);
    std::vector<std::string> tokens;
    for (std::string t; ws >> t;) tokens.push_back(t);
    if (tokens.size() != kFeatureCount) throw ValidationError(path.string() + ": weight count does not match feature spec");
    for (std::size_t i = 0; i < kFeatureCount; ++i) m.weights[i] = parse_double(tokens[i], "weight");
    m.bias = parse_double(lines[3], "bias");
    return m;
}

// ---------------------------------------------------------------------------
// Backends

double BaselineBackend::score(const Window& w) const { return model_.probability(extract_features(w, model_.spec)); }

namespace {
long long millis(double s) { return std::llround(s * 1000.0); }
} // namespace

ScoreFileBackend::ScoreFileBackend(const std::filesystem::path& path) : ScoreFileBackend(read_scores(path)) {}

ScoreFileBackend::ScoreFileBackend(const std::vector<WindowScore>& scores) {
    for (const auto& s : scores) {
        if (!scores_.emplace(std::make_pair(s.source, millis(s.start_s)), s.score).second)
            throw ValidationError("score file: duplicate entry for " + s.source + " at " + format_fixed(s.start_s, 3));
    }
}

double ScoreFileBackend::score(const Window& w) const {
    const auto it = scores_.find({w.source, millis(w.start_s)});
    if (it == scores_.end())
        throw ValidationError("score file: no score for source '" + w.source + "' at start " + format_fixed(w.start_s, 3));
    return it->second;
}

std::vector<std::string> ScoreFileBackend::sources() const {
    std::vector<std::string> out;
    for (const auto& [key, score] : scores_)
        if (out.empty() || out.back() != key.first) out.push_back(key.first);
    return out;
}

OnnxModelMeta read_model_meta(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    OnnxModelMeta meta;
    bool size = false, frames = false, emits = false;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ValidationError(path.string() + ": expected key=value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "input_size") {
            meta.input_size = static_cast<int>(parse_int(val, "input_size"));
            size = true;
        } else if (key == "frames") {
            meta.frames = static_cast<int>(parse_int(val, "frames"));
            frames = true;
        } else if (key == "emits") {
            if (val != "logit" && val != "probability") throw ValidationError(path.string() + ": emits must be logit|probability");
            meta.emits_logit = val == "logit";
            emits = true;
        } else {
            throw ValidationError(path.string() + ": unknown key '" + key + "'");
        }
    }
    if (!size || !frames || !emits) throw ValidationError(path.string() + ": input_size, frames and emits are required");
    if (meta.input_size <= 0 || meta.frames <= 0) throw ValidationError(path.string() + ": sizes must be positive");
    return meta;
}

std::unique_ptr<ScoreBackend> make_backend(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw ValidationError("backend must be kind:path, got '" + spec + "'");
    const std::string kind = spec.substr(0, colon);
    const std::filesystem::path path = spec.substr(colon + 1);
    if (kind == "baseline") return std::make_unique<BaselineBackend>(load_baseline(path));
    if (kind == "scorefile") return std::make_unique<ScoreFileBackend>(path);
    if (kind == "onnx") {
        // `<stem>.meta` next to the model, else the trainer's default `model.meta`.
        std::filesystem::path meta = path;
        meta.replace_extension(".meta");
        if (!std::filesystem::exists(meta) && std::filesystem::exists(path.parent_path() / "model.meta"))
            meta = path.parent_path() / "model.meta";
        return std::make_unique<OnnxBackend>(path, meta);
    }
    throw ValidationError("unknown backend kind '" + kind + "' (baseline|onnx|scorefile)");
}

WindowScore classify_window(const ScoreBackend& backend, const Window& w) {
    if (backend.needs_frames() && w.hsv_frames.empty()) throw ValidationError("classify_window: window has no frames");
    const double s = backend.score(w);
    if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("classify_window: backend produced a score outside [0,1]");
    return {s, w.source, w.start_s, w.start_s + w.length_s};
}

std::vector<WindowScore> read_scores(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path, {"source", "start_s", "end_s", "score"});
    std::vector<WindowScore> out;
    for (const auto& row : t.rows) {
        WindowScore s{parse_double(row[3], "score"), row[0], parse_double(row[1], "start_s"), parse_double(row[2], "end_s")};
        if (s.source.empty()) throw ValidationError(path.string() + ": empty source id");
        if (!(s.score >= 0.0 && s.score <= 1.0)) throw ValidationError(path.string() + ": score outside [0,1]");
        if (!(s.end_s > s.start_s)) throw ValidationError(path.string() + ": end_s must exceed start_s");
        out.push_back(std::move(s));
    }
    return out;
}

void write_scores(const std::vector<WindowScore>& scores, const std::filesystem::path& path,
                  const std::vector<std::string>& header_comments) {
    std::string out;
    for (const auto& c : header_comments) out += "# " + c + "\n";
    out += "source,start_s,end_s,score\n";
    for (const auto& s : scores)
        out += s.source + "," + format_fixed(s.start_s, 3) + "," + format_fixed(s.end_s, 3) + "," + format_fixed(s.score, 6) + "\n";
    write_text_file(path, out);
}

} // namespace nnseg
