#include "nnseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nnseg/error.hpp"
#include "nnseg/rng.hpp"

namespace nnseg {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double lattice(std::uint64_t seed, long long ix, long long iy) {
    const std::uint64_t h = splitmix(seed ^ splitmix(static_cast<std::uint64_t>(ix) * 0x632be59bd9b4e019ULL ^
                                                     static_cast<std::uint64_t>(iy) * 0x8cb92ba72f3d8dd7ULL));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double fade(double t) { return t * t * (3.0 - 2.0 * t); }

double noise_octave(std::uint64_t seed, double x, double y) {
    const double fx = std::floor(x), fy = std::floor(y);
    const auto ix = static_cast<long long>(fx), iy = static_cast<long long>(fy);
    const double tx = fade(x - fx), ty = fade(y - fy);
    const double a = lattice(seed, ix, iy), b = lattice(seed, ix + 1, iy);
    const double c = lattice(seed, ix, iy + 1), d = lattice(seed, ix + 1, iy + 1);
    return (a + (b - a) * tx) * (1.0 - ty) + (c + (d - c) * tx) * ty;
}

struct Burst {
    double start, end;
};

std::vector<Burst> plan_bursts(const SynthSpec& spec, Rng& rng) {
    auto draw_length = [&] {
        const auto n = spec.sucks_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.sucks_max - spec.sucks_min + 1)));
        return n / spec.suck_hz;
    };
    std::vector<Burst> out;
    if (!spec.bursts.empty()) {
        for (double s : spec.bursts) out.push_back({s, s + draw_length()});
    } else if (spec.burst_rate_per_min > 0.0) {
        const int count = static_cast<int>(std::lround(spec.burst_rate_per_min * spec.duration_s / 60.0));
        constexpr double kMinGap = 1.0; // keeps bursts distinct under the <1 s merge rule
        int rejections = 0;
        while (static_cast<int>(out.size()) < count && rejections < 1000) {
            const double len = draw_length();
            if (len > spec.duration_s) break;
            const double start = std::round(rng.uniform(0.0, spec.duration_s - len) * 1000.0) / 1000.0;
            const bool clash = std::any_of(out.begin(), out.end(), [&](const Burst& b) {
                return start < b.end + kMinGap && b.start < start + len + kMinGap;
            });
            if (clash) {
                ++rejections;
                continue;
            }
            out.push_back({start, start + len});
        }
    }
    std::sort(out.begin(), out.end(), [](const Burst& a, const Burst& b) { return a.start < b.start; });
    return out;
}

void check_bursts(const std::vector<Burst>& bursts, double duration) {
    for (std::size_t i = 0; i < bursts.size(); ++i) {
        if (bursts[i].start < 0.0 || bursts[i].end > duration + 1e-9)
            throw ValidationError("synth: burst at " + format_shortest(bursts[i].start) + " s runs outside the video");
        if (i > 0 && bursts[i].start < bursts[i - 1].end)
            throw ValidationError("synth: bursts at " + format_shortest(bursts[i - 1].start) + " s and " +
                                  format_shortest(bursts[i].start) + " s overlap");
    }
}

} // namespace

double value_noise(std::uint64_t seed, double x, double y) {
    constexpr double scales[] = {12.0, 6.0, 3.0};
    constexpr double weights[] = {0.5, 0.3, 0.2};
    double v = 0.0;
    for (int o = 0; o < 3; ++o) v += weights[o] * noise_octave(seed + static_cast<std::uint64_t>(o), x / scales[o], y / scales[o]);
    return v;
}

void validate(const SynthSpec& s) {
    if (!(s.duration_s > 0.0)) throw ValidationError("synth: duration_s must be positive");
    if (!(s.fps > 0.0)) throw ValidationError("synth: fps must be positive");
    if (s.width < 16 || s.height < 16) throw ValidationError("synth: frame must be at least 16x16");
    if (!(s.suck_hz > 0.0) || !(s.suck_hz < s.fps / 2.0))
        throw ValidationError("synth: suck_hz must lie in (0, fps/2) (Nyquist)");
    if (s.drift_px != 0.0 && !(s.drift_hz > 0.0 && s.drift_hz < s.fps / 2.0))
        throw ValidationError("synth: drift_hz must lie in (0, fps/2) (Nyquist)");
    if (s.amplitude_px < 0.0) throw ValidationError("synth: amplitude_px must be >= 0");
    if (s.sucks_min < 1 || s.sucks_max < s.sucks_min) throw ValidationError("synth: need 1 <= sucks_min <= sucks_max");
    if (s.jitter_std_px < 0.0 || s.jitter_max_px < 0.0 || s.noise_std < 0.0 || s.drift_px < 0.0)
        throw ValidationError("synth: jitter, noise and drift must be >= 0");
    if (s.burst_rate_per_min < 0.0) throw ValidationError("synth: burst_rate_per_min must be >= 0");
    if (!(s.face.w >= 8 && s.face.h >= 8) || s.face.x < 0 || s.face.y < 0 || s.face.x + s.face.w > s.width ||
        s.face.y + s.face.h > s.height)
        throw ValidationError("synth: face box must lie inside the frame and be at least 8x8");
    for (double b : s.bursts) {
        if (b < 0.0) throw ValidationError("synth: burst start must be >= 0");
        if (b + s.sucks_max / s.suck_hz > s.duration_s + 1e-9)
            throw ValidationError("synth: burst at " + format_shortest(b) + " s can run past the end of the video");
    }
    std::vector<double> starts = s.bursts;
    std::sort(starts.begin(), starts.end());
    for (std::size_t i = 1; i < starts.size(); ++i)
        if (starts[i] < starts[i - 1] + s.sucks_max / s.suck_hz)
            throw ValidationError("synth: bursts at " + format_shortest(starts[i - 1]) + " s and " +
                                  format_shortest(starts[i]) + " s can overlap");
}

void apply_synth_keys(SynthSpec& s, const KeyValues& kv, std::string_view origin) {
    for (const auto& [key, value] : kv) {
        const std::string what = std::string(origin) + ": " + key;
        auto num = [&] { return parse_double(value, what); };
        auto integer = [&] { return static_cast<int>(parse_int(value, what)); };
        if (key == "duration_s") s.duration_s = num();
        else if (key == "fps") s.fps = num();
        else if (key == "width") s.width = integer();
        else if (key == "height") s.height = integer();
        else if (key == "face_x") s.face.x = num();
        else if (key == "face_y") s.face.y = num();
        else if (key == "face_w") s.face.w = num();
        else if (key == "face_h") s.face.h = num();
        else if (key == "suck_hz") s.suck_hz = num();
        else if (key == "amplitude_px") s.amplitude_px = num();
        else if (key == "sucks_min") s.sucks_min = integer();
        else if (key == "sucks_max") s.sucks_max = integer();
        else if (key == "bursts") {
            s.bursts.clear();
            if (!trim(value).empty())
                for (const auto& b : split(value, ',')) s.bursts.push_back(parse_double(b, what));
        } else if (key == "burst_rate_per_min") s.burst_rate_per_min = num();
        else if (key == "jitter_std_px") s.jitter_std_px = num();
        else if (key == "jitter_max_px") s.jitter_max_px = num();
        else if (key == "noise_std") s.noise_std = num();
        else if (key == "drift_px") s.drift_px = num();
        else if (key == "drift_hz") s.drift_hz = num();
        else if (key == "subject") s.subject = value;
        else if (key == "coder") s.coder = value;
        else if (key == "seed") {
            const long long v = parse_int(value, what);
            if (v < 0) throw ValidationError(what + ": seed must be >= 0");
            s.seed = static_cast<std::uint64_t>(v);
        } else
            throw ValidationError(std::string(origin) + ": unknown synth key '" + key + "'");
    }
}

SynthSpec read_synth_spec(const std::filesystem::path& path) {
    SynthSpec s;
    apply_synth_keys(s, read_key_values(path), path.string());
    validate(s);
    return s;
}

KeyValues synth_spec_keys(const SynthSpec& s) {
    std::string bursts;
    for (double b : s.bursts) bursts += (bursts.empty() ? "" : ",") + format_shortest(b);
    return {{"duration_s", format_shortest(s.duration_s)},
            {"fps", format_shortest(s.fps)},
            {"width", std::to_string(s.width)},
            {"height", std::to_string(s.height)},
            {"face_x", format_shortest(s.face.x)},
            {"face_y", format_shortest(s.face.y)},
            {"face_w", format_shortest(s.face.w)},
            {"face_h", format_shortest(s.face.h)},
            {"suck_hz", format_shortest(s.suck_hz)},
            {"amplitude_px", format_shortest(s.amplitude_px)},
            {"sucks_min", std::to_string(s.sucks_min)},
            {"sucks_max", std::to_string(s.sucks_max)},
            {"bursts", bursts},
            {"burst_rate_per_min", format_shortest(s.burst_rate_per_min)},
            {"jitter_std_px", format_shortest(s.jitter_std_px)},
            {"jitter_max_px", format_shortest(s.jitter_max_px)},
            {"noise_std", format_shortest(s.noise_std)},
            {"drift_px", format_shortest(s.drift_px)},
            {"drift_hz", format_shortest(s.drift_hz)},
            {"subject", s.subject},
            {"coder", s.coder},
            {"seed", std::to_string(s.seed)}};
}

SynthVideo generate_video(const SynthSpec& spec) {
    validate(spec);
    Rng rng(spec.seed);
    const auto bursts = plan_bursts(spec, rng);
    check_bursts(bursts, spec.duration_s);

    SynthVideo out;
    out.annotations.subject = spec.subject;
    out.annotations.coder = spec.coder;
    out.annotations.duration_s = spec.duration_s;
    for (const auto& b : bursts) out.annotations.events.push_back({b.start, b.end, EventLabel::Nns, 1.0});

    const int n = std::max(1, static_cast<int>(std::floor(spec.duration_s * spec.fps + 1e-9)));
    const std::uint64_t bg_seed = splitmix(spec.seed ^ 0x6267ULL);
    const std::uint64_t face_seed = splitmix(spec.seed ^ 0x66616365ULL);

    Point2 jitter{0.0, 0.0};
    const double face_cx = spec.face.x + 0.5 * spec.face.w, face_cy = spec.face.y + 0.5 * spec.face.h;
    const double rx = 0.5 * spec.face.w, ry = 0.5 * spec.face.h;
    const double mouth_x = face_cx, mouth_y = spec.face.y + 0.72 * spec.face.h;
    const double sigma = 0.12 * spec.face.w;
    const double inv_2s2 = 1.0 / (2.0 * sigma * sigma);
    const double inv_2m2 = 1.0 / (2.0 * 0.36 * sigma * sigma);

    std::vector<Image> frames;
    frames.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double t = k / spec.fps;
        if (k > 0 && spec.jitter_std_px > 0.0) {
            jitter.x = std::clamp(jitter.x + rng.normal(0.0, spec.jitter_std_px), -spec.jitter_max_px, spec.jitter_max_px);
            jitter.y = std::clamp(jitter.y + rng.normal(0.0, spec.jitter_std_px), -spec.jitter_max_px, spec.jitter_max_px);
        }
        const double drift = spec.drift_px * std::sin(2.0 * std::numbers::pi * spec.drift_hz * t);
        double mouth = 0.0;
        for (const auto& b : bursts)
            if (t >= b.start && t < b.end) mouth = spec.amplitude_px * std::sin(2.0 * std::numbers::pi * spec.suck_hz * (t - b.start));
        out.jitter.push_back(jitter);
        out.faces.push_back(spec.face.translated({jitter.x + drift, jitter.y}));

        Image img(spec.width, spec.height);
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x) {
                // Scene coordinates, then face-local coordinates.
                const double px = x - jitter.x, py = y - jitter.y;
                const double bg = 0.15 + 0.35 * value_noise(bg_seed, px, py);
                const double qx = px - drift, qy = py;
                const double ex = (qx - face_cx) / rx, ey = (qy - face_cy) / ry;
                const double edge = (1.0 - std::sqrt(ex * ex + ey * ey)) * std::min(rx, ry);
                const double alpha = std::clamp(edge + 0.5, 0.0, 1.0);
                double v = bg;
                if (alpha > 0.0) {
                    const double dx = qx - mouth_x, dy = qy - mouth_y;
                    const double sy = qy - mouth * std::exp(-(dx * dx + dy * dy) * inv_2s2);
                    const double my = sy - mouth_y;
                    const double face = 0.45 + 0.4 * value_noise(face_seed, qx, sy) -
                                        0.2 * std::exp(-(dx * dx + my * my) * inv_2m2);
                    v = alpha * face + (1.0 - alpha) * bg;
                }
                if (spec.noise_std > 0.0) v += rng.normal(0.0, spec.noise_std);
                img.at(x, y) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        frames.push_back(std::move(img));
    }
    out.video = FrameSequence::from_images(std::move(frames), spec.fps);
    return out;
}

} // namespace nnseg
