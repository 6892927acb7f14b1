#include "nnseg/optical_flow.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

#include "nnseg/error.hpp"
#include "nnseg/parallel.hpp"

namespace nnseg {

namespace {

using Mat6 = std::array<std::array<double, 6>, 6>;

Mat6 invert6(Mat6 m) {
    Mat6 inv{};
    for (int i = 0; i < 6; ++i) inv[i][i] = 1.0;
    for (int col = 0; col < 6; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 6; ++r)
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        if (std::abs(m[pivot][col]) < 1e-15) throw Error("poly_expand: singular normal matrix");
        std::swap(m[col], m[pivot]);
        std::swap(inv[col], inv[pivot]);
        const double d = m[col][col];
        for (int k = 0; k < 6; ++k) {
            m[col][k] /= d;
            inv[col][k] /= d;
        }
        for (int r = 0; r < 6; ++r) {
            if (r == col) continue;
            const double f = m[r][col];
            if (f == 0.0) continue;
            for (int k = 0; k < 6; ++k) {
                m[r][k] -= f * m[col][k];
                inv[r][k] -= f * inv[col][k];
            }
        }
    }
    return inv;
}

// Images are processed in 0..255 units so the solver regularization matches
// the conditioning of 8-bit data.
constexpr float kIntensityScale = 255.0f;

struct Coeffs {
    std::vector<float> bx, by, a11, a22, a12; // a12 is the off-diagonal of A (axy / 2)
};

Coeffs to_coeffs(const PolyExpansion& p) {
    Coeffs c;
    c.bx = p.bx.data();
    c.by = p.by.data();
    c.a11 = p.axx.data();
    c.a22 = p.ayy.data();
    c.a12.resize(p.axy.size());
    for (std::size_t i = 0; i < c.a12.size(); ++i) c.a12[i] = 0.5f * p.axy.data()[i];
    return c;
}

// Bilinear sample position shared by the five coefficient images.
struct Tap {
    std::size_t i00, i01, i10, i11;
    float w00, w01, w10, w11;

    Tap(int w, int h, double x, double y) {
        x = std::clamp(x, 0.0, w - 1.0);
        y = std::clamp(y, 0.0, h - 1.0);
        const int x0 = static_cast<int>(x);
        const int y0 = static_cast<int>(y);
        const int x1 = std::min(x0 + 1, w - 1);
        const int y1 = std::min(y0 + 1, h - 1);
        const float fx = static_cast<float>(x - x0);
        const float fy = static_cast<float>(y - y0);
        i00 = static_cast<std::size_t>(y0) * w + x0;
        i01 = static_cast<std::size_t>(y0) * w + x1;
        i10 = static_cast<std::size_t>(y1) * w + x0;
        i11 = static_cast<std::size_t>(y1) * w + x1;
        w00 = (1 - fy) * (1 - fx);
        w01 = (1 - fy) * fx;
        w10 = fy * (1 - fx);
        w11 = fy * fx;
    }

    double operator()(const std::vector<float>& d) const {
        return w00 * d[i00] + w01 * d[i01] + w10 * d[i10] + w11 * d[i11];
    }
};

// One Farneback refinement pass: builds the per-pixel normal equations from
// the two expansions under the current flow, aggregates them with a Gaussian
// and solves the 2x2 systems.
void update_flow(const Coeffs& r0, const Coeffs& r1, int w, int h, int window, Image& u, Image& v) {
    const std::size_t n = static_cast<std::size_t>(w) * h;
    Image g11(w, h), g12(w, h), g22(w, h), h1(w, h), h2(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double dx = u.data()[i];
            const double dy = v.data()[i];
            const double fx = x + dx;
            const double fy = y + dy;
            const Tap tap(w, h, fx, fy);
            const double a11 = 0.5 * (r0.a11[i] + tap(r1.a11));
            const double a12 = 0.5 * (r0.a12[i] + tap(r1.a12));
            const double a22 = 0.5 * (r0.a22[i] + tap(r1.a22));
            const double db1 = 0.5 * (r0.bx[i] - tap(r1.bx)) + a11 * dx + a12 * dy;
            const double db2 = 0.5 * (r0.by[i] - tap(r1.by)) + a12 * dx + a22 * dy;
            g11.data()[i] = static_cast<float>(a11 * a11 + a12 * a12);
            g12.data()[i] = static_cast<float>(a12 * (a11 + a22));
            g22.data()[i] = static_cast<float>(a12 * a12 + a22 * a22);
            h1.data()[i] = static_cast<float>(a11 * db1 + a12 * db2);
            h2.data()[i] = static_cast<float>(a12 * db1 + a22 * db2);
        }
    }
    // Box aggregation over the full window averages out pixel noise better
    // than a Gaussian of the same support.
    const int radius = window / 2;
    const std::vector<float> k(static_cast<std::size_t>(2 * radius + 1), 1.0f / static_cast<float>(2 * radius + 1));
    g11 = convolve_separable(g11, k, k);
    g12 = convolve_separable(g12, k, k);
    g22 = convolve_separable(g22, k, k);
    h1 = convolve_separable(h1, k, k);
    h2 = convolve_separable(h2, k, k);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = g11.data()[i], b = g12.data()[i], c = g22.data()[i];
        const double idet = 1.0 / (a * c - b * b + 1e-3);
        u.data()[i] = static_cast<float>((c * h1.data()[i] - b * h2.data()[i]) * idet);
        v.data()[i] = static_cast<float>((a * h2.data()[i] - b * h1.data()[i]) * idet);
    }
}

} // namespace

PolyExpansion poly_expand(const Image& img, int poly_n, double poly_sigma) {
    if (poly_n < 1 || poly_sigma <= 0.0) throw ValidationError("poly_expand: invalid parameters");
    const int n = poly_n;
    std::vector<double> g(2 * n + 1);
    for (int i = -n; i <= n; ++i) g[i + n] = std::exp(-0.5 * i * i / (poly_sigma * poly_sigma));

    // Normal matrix for basis {1, x, y, x^2, y^2, xy} under weights g(x)g(y).
    Mat6 normal{};
    for (int y = -n; y <= n; ++y) {
        for (int x = -n; x <= n; ++x) {
            const double wgt = g[x + n] * g[y + n];
            const std::array<double, 6> b{1.0, double(x), double(y), double(x * x), double(y * y), double(x * y)};
            for (int r = 0; r < 6; ++r)
                for (int c = 0; c < 6; ++c) normal[r][c] += wgt * b[r] * b[c];
        }
    }
    const Mat6 inv = invert6(normal);

    const int w = img.width();
    const int h = img.height();
    // Horizontal moments: sum_x x^k g(x) f(p + x), k = 0..2, over
    // edge-replicated rows.
    const std::size_t npix = static_cast<std::size_t>(w) * h;
    std::array<std::vector<double>, 3> hor{std::vector<double>(npix), std::vector<double>(npix),
                                           std::vector<double>(npix)};
    std::vector<double> row(static_cast<std::size_t>(w + 2 * n));
    for (int y = 0; y < h; ++y) {
        const float* src = img.data().data() + static_cast<std::size_t>(y) * w;
        for (int i = 0; i < w + 2 * n; ++i) row[i] = src[std::clamp(i - n, 0, w - 1)] * kIntensityScale;
        const std::size_t base = static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            double m0 = 0, m1 = 0, m2 = 0;
            for (int k = -n; k <= n; ++k) {
                const double gf = g[k + n] * row[x + k + n];
                m0 += gf;
                m1 += k * gf;
                m2 += k * k * gf;
            }
            hor[0][base + x] = m0;
            hor[1][base + x] = m1;
            hor[2][base + x] = m2;
        }
    }

    // Vertical moments accumulated row by row, in basis order {1, x, y, x^2, y^2, xy}.
    PolyExpansion out{Image(w, h), Image(w, h), Image(w, h), Image(w, h), Image(w, h), Image(w, h)};
    std::array<std::vector<double>, 6> rhs;
    for (auto& r : rhs) r.resize(static_cast<std::size_t>(w));
    Image* dst[6] = {&out.c, &out.bx, &out.by, &out.axx, &out.ayy, &out.axy};
    for (int y = 0; y < h; ++y) {
        for (auto& r : rhs) std::fill(r.begin(), r.end(), 0.0);
        for (int k = -n; k <= n; ++k) {
            const std::size_t base = static_cast<std::size_t>(std::clamp(y + k, 0, h - 1)) * w;
            const double gk = g[k + n];
            const double* h0 = hor[0].data() + base;
            const double* h1 = hor[1].data() + base;
            const double* h2 = hor[2].data() + base;
            for (int x = 0; x < w; ++x) {
                rhs[0][x] += gk * h0[x];
                rhs[1][x] += gk * h1[x];
                rhs[2][x] += gk * k * h0[x];
                rhs[3][x] += gk * h2[x];
                rhs[4][x] += gk * k * k * h0[x];
                rhs[5][x] += gk * k * h1[x];
            }
        }
        const std::size_t base = static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x)
            for (int i = 0; i < 6; ++i) {
                double r = 0.0;
                for (int j = 0; j < 6; ++j) r += inv[i][j] * rhs[j][x];
                dst[i]->data()[base + x] = static_cast<float>(r);
            }
    }
    return out;
}

namespace {

struct Level {
    int w = 0, h = 0;
    Coeffs coeffs;
};

void check_params(const FlowParams& params) {
    if (params.levels < 1 || !(params.pyr_scale > 0.0 && params.pyr_scale < 1.0) || params.window < 3 ||
        params.iterations < 1 || params.poly_n < 1 || !(params.poly_sigma > 0.0))
        throw ValidationError("dense_flow: invalid parameters");
}

// Expansions of every pyramid level used for a frame, coarsest first.
std::vector<Level> expand_pyramid(const Image& img, const FlowParams& params) {
    std::vector<Level> out;
    for (int level = params.levels - 1; level >= 0; --level) {
        const double scale = std::pow(params.pyr_scale, level);
        const int lw = std::max(1, static_cast<int>(std::lround(img.width() * scale)));
        const int lh = std::max(1, static_cast<int>(std::lround(img.height() * scale)));
        if ((lw < 2 * params.poly_n + 1 || lh < 2 * params.poly_n + 1) && level > 0) continue;
        const Image scaled =
            level > 0 ? resize_bilinear(gaussian_blur(img, (1.0 / scale - 1.0) * 0.5), lw, lh) : img;
        out.push_back({lw, lh, to_coeffs(poly_expand(scaled, params.poly_n, params.poly_sigma))});
    }
    return out;
}

FlowField flow_from_pyramids(const std::vector<Level>& a, const std::vector<Level>& b, const FlowParams& params) {
    Image u, v;
    for (std::size_t l = 0; l < a.size(); ++l) {
        const int lw = a[l].w, lh = a[l].h;
        if (u.empty()) {
            u = Image(lw, lh);
            v = Image(lw, lh);
        } else {
            const double up = static_cast<double>(lw) / u.width();
            u = resize_bilinear(u, lw, lh);
            v = resize_bilinear(v, lw, lh);
            for (auto& x : u.data()) x = static_cast<float>(x * up);
            for (auto& x : v.data()) x = static_cast<float>(x * up);
        }
        for (int it = 0; it < params.iterations; ++it) update_flow(a[l].coeffs, b[l].coeffs, lw, lh, params.window, u, v);
    }
    return {std::move(u), std::move(v)};
}

} // namespace

FlowField dense_flow(const Frame& prev, const Frame& next, const FlowParams& params) {
    const Image& a = prev.pixels;
    const Image& b = next.pixels;
    if (a.width() != b.width() || a.height() != b.height()) throw ValidationError("dense_flow: frame sizes differ");
    if (a.width() < 16 || a.height() < 16) throw ValidationError("dense_flow: frames must be at least 16x16");
    check_params(params);
    return flow_from_pyramids(expand_pyramid(a, params), expand_pyramid(b, params), params);
}

ColorImage flow_to_hsv(const FlowField& flow, const HsvParams& params) {
    if (params.norm == HsvNorm::Fixed && !(params.max_mag > 0.0))
        throw ValidationError("flow_to_hsv: fixed normalization needs max_mag > 0");
    const int w = flow.width();
    const int h = flow.height();
    std::vector<double> mag(static_cast<std::size_t>(w) * h);
    double max_mag = 0.0;
    for (std::size_t i = 0; i < mag.size(); ++i) {
        mag[i] = std::hypot(static_cast<double>(flow.u.data()[i]), static_cast<double>(flow.v.data()[i]));
        max_mag = std::max(max_mag, mag[i]);
    }
    const double denom = params.norm == HsvNorm::Fixed ? params.max_mag : max_mag;

    ColorImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            double hue = 0.0, value = 0.0;
            if (mag[i] > 0.0 && denom > 0.0) {
                hue = std::atan2(static_cast<double>(flow.v.data()[i]), static_cast<double>(flow.u.data()[i])) /
                      (2.0 * std::numbers::pi);
                if (hue < 0.0) hue += 1.0;
                if (hue >= 1.0) hue = 0.0;
                value = std::min(1.0, mag[i] / denom);
            }
            out.at(x, y, 0) = static_cast<float>(hue);
            out.at(x, y, 1) = 1.0f;
            out.at(x, y, 2) = static_cast<float>(value);
        }
    }
    return out;
}

ColorImage hsv_to_rgb(const ColorImage& hsv) {
    ColorImage rgb(hsv.width(), hsv.height());
    for (int y = 0; y < hsv.height(); ++y) {
        for (int x = 0; x < hsv.width(); ++x) {
            const double hh = hsv.at(x, y, 0) * 6.0;
            const double s = hsv.at(x, y, 1);
            const double v = hsv.at(x, y, 2);
            const int sector = static_cast<int>(std::floor(hh)) % 6;
            const double f = hh - std::floor(hh);
            const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
            double r = v, g = t, b = p;
            switch (sector) {
            case 0: r = v; g = t; b = p; break;
            case 1: r = q; g = v; b = p; break;
            case 2: r = p; g = v; b = t; break;
            case 3: r = p; g = q; b = v; break;
            case 4: r = t; g = p; b = v; break;
            default: r = v; g = p; b = q; break;
            }
            rgb.at(x, y, 0) = static_cast<float>(r);
            rgb.at(x, y, 1) = static_cast<float>(g);
            rgb.at(x, y, 2) = static_cast<float>(b);
        }
    }
    return rgb;
}

FlowSequence clip_flow_encode(const FrameSequence& seq, const ClipFlowParams& params) {
    if (seq.frames.size() < 2) throw ValidationError("clip_flow_encode: at least 2 frames required");
    validate(seq);
    if (seq.width() < 16 || seq.height() < 16) throw ValidationError("dense_flow: frames must be at least 16x16");
    check_params(params.flow);
    if (params.hsv.norm == HsvNorm::Fixed && !(params.hsv.max_mag > 0.0))
        throw ValidationError("flow_to_hsv: fixed normalization needs max_mag > 0");

    const std::size_t pairs = seq.frames.size() - 1;
    FlowSequence out;
    out.fields.resize(pairs);
    out.hsv_frames.resize(pairs);
    // Contiguous chunks let each worker expand every frame once.
    const std::size_t chunks = std::min<std::size_t>(pairs, static_cast<std::size_t>(std::max(1, params.jobs)));
    parallel_for(chunks, params.jobs, [&](std::size_t c) {
        const std::size_t first = pairs * c / chunks, last = pairs * (c + 1) / chunks;
        auto prev = expand_pyramid(seq.frames[first].pixels, params.flow);
        for (std::size_t i = first; i < last; ++i) {
            auto next = expand_pyramid(seq.frames[i + 1].pixels, params.flow);
            out.fields[i] = flow_from_pyramids(prev, next, params.flow);
            out.hsv_frames[i] = flow_to_hsv(out.fields[i], params.hsv);
            prev = std::move(next);
        }
    });
    return out;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    const char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff), char((v >> 24) & 0xff)};
    out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

} // namespace

void write_flo(const FlowField& flow, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write("PIEH", 4);
    put_u32(out, static_cast<std::uint32_t>(flow.width()));
    put_u32(out, static_cast<std::uint32_t>(flow.height()));
    for (std::size_t i = 0; i < flow.u.size(); ++i) {
        put_u32(out, std::bit_cast<std::uint32_t>(flow.u.data()[i]));
        put_u32(out, std::bit_cast<std::uint32_t>(flow.v.data()[i]));
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

FlowField read_flo(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "PIEH", 4) != 0) throw IoError(path.string() + ": bad .flo magic");
    const auto w = static_cast<int>(get_u32(in));
    const auto h = static_cast<int>(get_u32(in));
    if (!in || w <= 0 || h <= 0 || w > 1 << 16 || h > 1 << 16) throw IoError(path.string() + ": bad .flo size");
    FlowField f{Image(w, h), Image(w, h)};
    for (std::size_t i = 0; i < f.u.size(); ++i) {
        f.u.data()[i] = std::bit_cast<float>(get_u32(in));
        f.v.data()[i] = std::bit_cast<float>(get_u32(in));
    }
    if (!in) throw IoError(path.string() + ": truncated .flo data");
    return f;
}

} // namespace nnseg
