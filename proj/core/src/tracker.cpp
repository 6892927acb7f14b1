#include "nnseg/tracker.hpp"

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "nnseg/error.hpp"
#include "nnseg/rng.hpp"
#include "nnseg/text.hpp"

namespace nnseg {

// ---------------------------------------------------------------------------
// Shi-Tomasi

Image min_eigen_response(const Image& img, int block_size) {
    const int w = img.width();
    const int h = img.height();
    Image gx, gy;
    gradients(img, gx, gy);

    Image xx(w, h), xy(w, h), yy(w, h);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const float dx = gx.data()[i];
        const float dy = gy.data()[i];
        xx.data()[i] = dx * dx;
        xy.data()[i] = dx * dy;
        yy.data()[i] = dy * dy;
    }
    const std::vector<float> box(static_cast<std::size_t>(block_size), 1.0f);
    xx = convolve_separable(xx, box, box);
    xy = convolve_separable(xy, box, box);
    yy = convolve_separable(yy, box, box);

    Image response(w, h);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double a = xx.data()[i];
        const double b = xy.data()[i];
        const double c = yy.data()[i];
        const double half_diff = 0.5 * (a - c);
        const double lambda = 0.5 * (a + c) - std::sqrt(half_diff * half_diff + b * b);
        response.data()[i] = static_cast<float>(std::max(0.0, lambda));
    }
    return response;
}

namespace {

double parabolic_offset(double left, double center, double right) {
    const double denom = left - 2.0 * center + right;
    if (std::abs(denom) < 1e-20) return 0.0;
    return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

} // namespace

CornerSet detect_corners(const Frame& frame, const CornerParams& params) {
    const Image& img = frame.pixels;
    const int w = img.width();
    const int h = img.height();
    if (w < 3 || h < 3) throw ValidationError("detect_corners: frame must be at least 3x3");
    if (!(params.quality > 0.0 && params.quality <= 1.0)) throw ValidationError("detect_corners: quality must be in (0,1]");

    const Image response = min_eigen_response(img, params.block_size);
    const float max_response = *std::max_element(response.data().begin(), response.data().end());
    CornerSet out;
    if (!(max_response > 0.0f) || params.max_corners <= 0) return out;
    const float threshold = static_cast<float>(params.quality) * max_response;

    struct Candidate {
        float score;
        int x, y;
    };
    std::vector<Candidate> candidates;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float r = response.at(x, y);
            if (r < threshold || r <= 0.0f) continue;
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    if (response.clamped(x + dx, y + dy) > r) {
                        is_max = false;
                        break;
                    }
            if (is_max) candidates.push_back({r, x, y});
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

    const double min_d2 = params.min_distance * params.min_distance;
    for (const auto& c : candidates) {
        if (static_cast<int>(out.points.size()) >= params.max_corners) break;
        const double ox = parabolic_offset(response.clamped(c.x - 1, c.y), c.score, response.clamped(c.x + 1, c.y));
        const double oy = parabolic_offset(response.clamped(c.x, c.y - 1), c.score, response.clamped(c.x, c.y + 1));
        const Point2 p{std::clamp(c.x + ox, 0.0, w - 1.0), std::clamp(c.y + oy, 0.0, h - 1.0)};
        bool far_enough = true;
        for (const auto& q : out.points) {
            const double dx = p.x - q.x;
            const double dy = p.y - q.y;
            if (dx * dx + dy * dy < min_d2) {
                far_enough = false;
                break;
            }
        }
        if (!far_enough) continue;
        out.points.push_back(p);
        out.scores.push_back(c.score);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lucas-Kanade

namespace {

struct PyramidLevel {
    Image img;
    Image gx;
    Image gy;
};

std::vector<PyramidLevel> build_pyramid(const Image& base, int levels, bool with_gradients) {
    std::vector<PyramidLevel> pyr(static_cast<std::size_t>(levels));
    pyr[0].img = base;
    for (int l = 1; l < levels; ++l) pyr[l].img = pyr[l - 1].img.width() > 1 ? pyr_down(pyr[l - 1].img) : pyr[l - 1].img;
    if (with_gradients)
        for (auto& level : pyr) gradients(level.img, level.gx, level.gy);
    return pyr;
}

} // namespace

LkResult lk_track(const Frame& prev, const Frame& next, const std::vector<Point2>& points, const LkParams& params) {
    const Image& a = prev.pixels;
    const Image& b = next.pixels;
    if (a.width() != b.width() || a.height() != b.height())
        throw ValidationError("lk_track: frames differ in size");
    if (params.levels < 1 || params.window < 3 || params.window % 2 == 0)
        throw ValidationError("lk_track: levels >= 1 and an odd window >= 3 required");

    const auto pyr_prev = build_pyramid(a, params.levels, true);
    const auto pyr_next = build_pyramid(b, params.levels, false);
    const int radius = params.window / 2;
    const int n_win = params.window * params.window;

    LkResult result;
    result.points.resize(points.size());
    result.status.assign(points.size(), true);

    std::vector<float> patch(n_win), patch_gx(n_win), patch_gy(n_win);
    std::vector<std::uint8_t> inside(n_win);

    for (std::size_t i = 0; i < points.size(); ++i) {
        const Point2 pt = points[i];
        Point2 guess{0.0, 0.0};
        bool ok = std::isfinite(pt.x) && std::isfinite(pt.y);

        for (int level = params.levels - 1; level >= 0 && ok; --level) {
            const auto& lp = pyr_prev[level];
            const auto& ln = pyr_next[level];
            const double scale = 1.0 / static_cast<double>(1 << level);
            const Point2 p = pt * scale;
            const double max_x = lp.img.width() - 1.0;
            const double max_y = lp.img.height() - 1.0;
            auto in_frame = [&](double x, double y) { return x >= 0.0 && y >= 0.0 && x <= max_x && y <= max_y; };

            // Window pixels outside the frame carry replicated borders that do
            // not move with the content, so they are left out of the fit.
            double gxx = 0.0, gxy = 0.0, gyy = 0.0;
            int valid = 0;
            int k = 0;
            for (int dy = -radius; dy <= radius; ++dy) {
                for (int dx = -radius; dx <= radius; ++dx, ++k) {
                    const double sx = p.x + dx;
                    const double sy = p.y + dy;
                    inside[k] = in_frame(sx, sy);
                    if (!inside[k]) continue;
                    patch[k] = lp.img.bilinear(sx, sy);
                    patch_gx[k] = lp.gx.bilinear(sx, sy);
                    patch_gy[k] = lp.gy.bilinear(sx, sy);
                    gxx += patch_gx[k] * patch_gx[k];
                    gxy += patch_gx[k] * patch_gy[k];
                    gyy += patch_gy[k] * patch_gy[k];
                    ++valid;
                }
            }
            // Coarse levels where the point hugs the border are skipped.
            if (level > 0 && valid * 2 < n_win) {
                guess = guess * 2.0;
                continue;
            }
            const double half_diff = 0.5 * (gxx - gyy);
            const double min_eig = 0.5 * (gxx + gyy) - std::sqrt(half_diff * half_diff + gxy * gxy);
            if (valid == 0 || min_eig / valid < params.min_eigen) {
                ok = false;
                break;
            }

            Point2 v{0.0, 0.0};
            for (int iter = 0; iter < params.max_iterations; ++iter) {
                double hxx = 0.0, hxy = 0.0, hyy = 0.0, bx = 0.0, by = 0.0;
                k = 0;
                for (int dy = -radius; dy <= radius; ++dy) {
                    for (int dx = -radius; dx <= radius; ++dx, ++k) {
                        if (!inside[k]) continue;
                        const double nx = p.x + guess.x + v.x + dx;
                        const double ny = p.y + guess.y + v.y + dy;
                        if (!in_frame(nx, ny)) continue;
                        const double diff = patch[k] - ln.img.bilinear(nx, ny);
                        hxx += patch_gx[k] * patch_gx[k];
                        hxy += patch_gx[k] * patch_gy[k];
                        hyy += patch_gy[k] * patch_gy[k];
                        bx += diff * patch_gx[k];
                        by += diff * patch_gy[k];
                    }
                }
                const double det = hxx * hyy - hxy * hxy;
                if (!(det > 1e-12)) break;
                const Point2 delta{(hyy * bx - hxy * by) / det, (hxx * by - hxy * bx) / det};
                v = v + delta;
                if (std::hypot(delta.x, delta.y) < params.epsilon) break;
            }
            guess = level > 0 ? (guess + v) * 2.0 : guess + v;
        }

        const Point2 tracked = pt + guess;
        if (!ok || !std::isfinite(tracked.x) || !std::isfinite(tracked.y) || tracked.x < 0.0 || tracked.y < 0.0 ||
            tracked.x > a.width() - 1.0 || tracked.y > a.height() - 1.0)
            ok = false;
        result.points[i] = ok ? tracked : pt;
        result.status[i] = ok;
    }
    return result;
}

// ---------------------------------------------------------------------------
// MOSSE

namespace {

constexpr int kSidelobeRadius = 5; // 11x11 exclusion

struct Affine {
    double angle = 0.0;
    double scale = 1.0;
};

// Samples the raw window around the box center, optionally warped.
std::vector<double> sample_window(const Image& frame, const BoundingBox& box, int ww, int wh, const Affine& warp) {
    std::vector<double> out(static_cast<std::size_t>(ww) * wh);
    const Point2 c = box.center();
    const double cs = std::cos(warp.angle) / warp.scale;
    const double sn = std::sin(warp.angle) / warp.scale;
    for (int y = 0; y < wh; ++y) {
        for (int x = 0; x < ww; ++x) {
            const double rx = x - ww / 2;
            const double ry = y - wh / 2;
            const double sx = c.x + cs * rx - sn * ry;
            const double sy = c.y + sn * rx + cs * ry;
            out[static_cast<std::size_t>(y) * ww + x] = frame.bilinear(sx, sy);
        }
    }
    return out;
}

// Log transform, zero-mean unit-variance normalization, cosine taper.
std::vector<double> preprocess(std::vector<double> patch, const std::vector<double>& window) {
    for (auto& v : patch) v = std::log1p(255.0 * v);
    const double n = static_cast<double>(patch.size());
    const double mean = std::accumulate(patch.begin(), patch.end(), 0.0) / n;
    double var = 0.0;
    for (double v : patch) var += (v - mean) * (v - mean);
    const double stddev = std::sqrt(var / n);
    for (std::size_t i = 0; i < patch.size(); ++i) patch[i] = (patch[i] - mean) / (stddev + 1e-5) * window[i];
    return patch;
}

std::vector<double> hann_window(int w, int h) {
    std::vector<double> out(static_cast<std::size_t>(w) * h);
    auto hann = [](int i, int n) { return n > 1 ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1)) : 1.0; };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out[static_cast<std::size_t>(y) * w + x] = hann(x, w) * hann(y, h);
    return out;
}

std::vector<double> gaussian_peak(int w, int h, double sigma) {
    std::vector<double> out(static_cast<std::size_t>(w) * h);
    const double cx = w / 2;
    const double cy = h / 2;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out[static_cast<std::size_t>(y) * w + x] =
                std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2.0 * sigma * sigma));
    return out;
}

Image to_image(const std::vector<double>& v, int w, int h) {
    Image img(w, h);
    for (std::size_t i = 0; i < v.size(); ++i) img.data()[i] = static_cast<float>(v[i]);
    return img;
}

} // namespace

Spectrum MosseState::filter() const {
    Spectrum h(numerator_.size());
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = numerator_[i] / (denominator_[i] + params_.epsilon);
    return h;
}

MosseState mosse_init(const Frame& frame, const BoundingBox& bbox, const MosseParams& params) {
    const Image& img = frame.pixels;
    if (bbox.w < 8 || bbox.h < 8) throw ValidationError("mosse_init: box must be at least 8x8");
    if (bbox.x < 0 || bbox.y < 0 || bbox.x + bbox.w > img.width() || bbox.y + bbox.h > img.height())
        throw ValidationError("mosse_init: box outside frame");
    if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0))
        throw ValidationError("mosse_init: learning rate must be in (0,1]");
    if (params.epsilon < 0.0) throw ValidationError("mosse_init: epsilon must be non-negative");

    MosseState s;
    s.params_ = params;
    s.box_ = bbox;
    s.win_w_ = static_cast<int>(std::lround(bbox.w));
    s.win_h_ = static_cast<int>(std::lround(bbox.h));
    s.frame_w_ = img.width();
    s.frame_h_ = img.height();
    s.fft_ = std::make_shared<const Fft2d>(s.win_w_, s.win_h_);
    s.cosine_window_ = hann_window(s.win_w_, s.win_h_);
    s.target_ = s.fft_->forward(gaussian_peak(s.win_w_, s.win_h_, params.target_sigma));

    const std::size_t n = s.target_.size();
    s.numerator_.assign(n, {0.0, 0.0});
    s.denominator_.assign(n, {0.0, 0.0});

    Rng rng(params.seed);
    for (int k = 0; k <= params.perturbations; ++k) {
        Affine warp;
        if (k > 0) {
            warp.angle = rng.uniform(-0.1, 0.1);
            warp.scale = rng.uniform(0.95, 1.05);
        }
        const auto f = s.fft_->forward(preprocess(sample_window(img, bbox, s.win_w_, s.win_h_, warp), s.cosine_window_));
        for (std::size_t i = 0; i < n; ++i) {
            s.numerator_[i] += s.target_[i] * std::conj(f[i]);
            s.denominator_[i] += f[i] * std::conj(f[i]);
        }
    }
    for (const auto& d : s.denominator_)
        if (std::abs(d) + params.epsilon <= 0.0)
            throw ValidationError("mosse_init: degenerate filter (zero-energy patch with epsilon 0)");
    return s;
}

Image mosse_response(const MosseState& state, const Frame& frame) {
    if (!state.initialized()) throw ValidationError("mosse: state not initialized");
    if (frame.pixels.width() != state.frame_w_ || frame.pixels.height() != state.frame_h_)
        throw ValidationError("mosse: frame size differs from the tracked video");
    const auto f = state.fft_->forward(
        preprocess(sample_window(frame.pixels, state.box_, state.win_w_, state.win_h_, {}), state.cosine_window_));
    const Spectrum h = state.filter();
    Spectrum g(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) g[i] = f[i] * h[i];
    return to_image(state.fft_->inverse_real(g), state.win_w_, state.win_h_);
}

double peak_to_sidelobe(const Image& response, int peak_x, int peak_y) {
    const double peak = response.at(peak_x, peak_y);
    double sum = 0.0, sum2 = 0.0;
    std::size_t count = 0;
    for (int y = 0; y < response.height(); ++y) {
        for (int x = 0; x < response.width(); ++x) {
            if (std::abs(x - peak_x) <= kSidelobeRadius && std::abs(y - peak_y) <= kSidelobeRadius) continue;
            const double v = response.at(x, y);
            sum += v;
            sum2 += v * v;
            ++count;
        }
    }
    if (count < 2) return 0.0;
    const double mean = sum / static_cast<double>(count);
    const double var = std::max(0.0, sum2 / static_cast<double>(count) - mean * mean);
    const double stddev = std::sqrt(var);
    if (stddev < 1e-12) return peak > mean ? std::numeric_limits<double>::infinity() : 0.0;
    return (peak - mean) / stddev;
}

MosseUpdate mosse_update(MosseState& state, const Frame& frame) {
    const Image response = mosse_response(state, frame);
    const auto it = std::max_element(response.data().begin(), response.data().end());
    const int idx = static_cast<int>(it - response.data().begin());
    const int px = idx % response.width();
    const int py = idx / response.width();

    MosseUpdate out;
    out.psr = peak_to_sidelobe(response, px, py);
    if (!(out.psr >= state.params_.psr_threshold)) {
        out.box = state.box_;
        out.lost = true;
        return out;
    }

    // Integer argmax: a static target keeps its box exactly. Displacements
    // beyond half the window wrap around.
    double dx = px - state.win_w_ / 2;
    double dy = py - state.win_h_ / 2;
    if (dx > state.win_w_ / 2.0) dx -= state.win_w_;
    if (dy > state.win_h_ / 2.0) dy -= state.win_h_;
    state.box_ = clamp_to_frame(state.box_.translated({dx, dy}), state.frame_w_, state.frame_h_);

    const auto f = state.fft_->forward(
        preprocess(sample_window(frame.pixels, state.box_, state.win_w_, state.win_h_, {}), state.cosine_window_));
    const double eta = state.params_.learning_rate;
    for (std::size_t i = 0; i < f.size(); ++i) {
        state.numerator_[i] = eta * state.target_[i] * std::conj(f[i]) + (1.0 - eta) * state.numerator_[i];
        state.denominator_[i] = eta * f[i] * std::conj(f[i]) + (1.0 - eta) * state.denominator_[i];
    }
    out.box = state.box_;
    return out;
}

// ---------------------------------------------------------------------------
// Propagation

BoxTrack propagate_bbox(const FrameSequence& seq, const DetectionMap& detections, const MosseParams& params) {
    if (detections.empty()) throw ValidationError("propagate_bbox: no detections");
    const int n = static_cast<int>(seq.frames.size());
    const int w = seq.width();
    const int h = seq.height();
    for (const auto& [frame, box] : detections) {
        if (frame < 0 || frame >= n) throw ValidationError("propagate_bbox: detection frame out of range");
        if (!intersects_frame(box, w, h)) throw ValidationError("propagate_bbox: detection box outside frame");
    }

    // Owner of each frame: nearest detection, ties toward the earlier one.
    std::vector<int> det_frames;
    for (const auto& [frame, box] : detections) det_frames.push_back(frame);
    std::vector<int> owner(static_cast<std::size_t>(n));
    for (int f = 0; f < n; ++f) {
        int best = det_frames.front();
        for (int d : det_frames)
            if (std::abs(d - f) < std::abs(best - f)) best = d;
        owner[f] = best;
    }

    BoxTrack track;
    track.boxes.resize(static_cast<std::size_t>(n));
    for (const auto& [det, raw_box] : detections) {
        const BoundingBox box = clamp_to_frame(raw_box, w, h);
        track.boxes[det] = box;
        for (int dir : {+1, -1}) {
            MosseState state = mosse_init(seq.frames[det], box, params);
            for (int f = det + dir; f >= 0 && f < n && owner[f] == det; f += dir)
                track.boxes[f] = mosse_update(state, seq.frames[f]).box;
        }
    }
    return track;
}

DetectionMap read_detections(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path, {"frame", "x", "y", "w", "h"});
    DetectionMap out;
    for (const auto& row : table.rows) {
        const int frame = static_cast<int>(parse_int(row[0], "frame"));
        BoundingBox box{parse_double(row[1], "x"), parse_double(row[2], "y"), parse_double(row[3], "w"),
                        parse_double(row[4], "h")};
        if (frame < 0) throw ValidationError("detections: negative frame index");
        if (box.w <= 0 || box.h <= 0) throw ValidationError("detections: non-positive box size");
        if (!out.emplace(frame, box).second) throw ValidationError("detections: duplicate frame " + std::to_string(frame));
    }
    return out;
}

void write_detections(const DetectionMap& detections, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "frame,x,y,w,h\n";
    for (const auto& [frame, b] : detections)
        out << frame << ',' << format_fixed(b.x, 3) << ',' << format_fixed(b.y, 3) << ',' << format_fixed(b.w, 3) << ','
            << format_fixed(b.h, 3) << '\n';
    write_text_file(path, out.str());
}

std::optional<BoundingBox> ReplayDetector::detect(const Frame& frame) const {
    const auto it = detections_.find(frame.index);
    if (it == detections_.end()) return std::nullopt;
    return it->second;
}

DetectionMap detect_first_face(const FrameSequence& seq, const FaceDetector& detector) {
    for (const auto& frame : seq.frames) {
        if (auto box = detector.detect(frame)) return {{frame.index, *box}};
    }
    return {};
}

} // namespace nnseg
