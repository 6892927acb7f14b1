#include "nnseg/image.hpp"

#include <algorithm>
#include <cmath>

namespace nnseg {

Image::Image(int width, int height, float fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

float Image::clamped(int x, int y) const {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return at(x, y);
}

float Image::bilinear(double x, double y) const {
    x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
    y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, width_ - 1);
    const int y1 = std::min(y0 + 1, height_ - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = (1.0 - fx) * at(x0, y0) + fx * at(x1, y0);
    const double bottom = (1.0 - fx) * at(x0, y1) + fx * at(x1, y1);
    return static_cast<float>((1.0 - fy) * top + fy * bottom);
}

ColorImage::ColorImage(int width, int height)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3, 0.0f) {}

Image convolve_separable(const Image& src, const std::vector<float>& kernel_x,
                         const std::vector<float>& kernel_y) {
    const int w = src.width();
    const int h = src.height();
    const int rx = static_cast<int>(kernel_x.size()) / 2;
    const int ry = static_cast<int>(kernel_y.size()) / 2;

    // Horizontal pass over an edge-replicated copy of each row.
    Image tmp(w, h);
    std::vector<float> row(static_cast<std::size_t>(w + 2 * rx));
    for (int y = 0; y < h; ++y) {
        const float* s = src.data().data() + static_cast<std::size_t>(y) * w;
        for (int i = 0; i < w + 2 * rx; ++i) row[i] = s[std::clamp(i - rx, 0, w - 1)];
        float* t = tmp.data().data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            float acc = 0.0f;
            for (int k = 0; k <= 2 * rx; ++k) acc += kernel_x[k] * row[x + k];
            t[x] = acc;
        }
    }
    // Vertical pass accumulates whole rows.
    Image out(w, h);
    for (int y = 0; y < h; ++y) {
        float* o = out.data().data() + static_cast<std::size_t>(y) * w;
        for (int k = -ry; k <= ry; ++k) {
            const float* t = tmp.data().data() + static_cast<std::size_t>(std::clamp(y + k, 0, h - 1)) * w;
            const float c = kernel_y[k + ry];
            for (int x = 0; x < w; ++x) o[x] += c * t[x];
        }
    }
    return out;
}

std::vector<float> gaussian_kernel(int radius, double sigma) {
    std::vector<float> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * i * i / (sigma * sigma));
        k[i + radius] = static_cast<float>(v);
        sum += v;
    }
    for (auto& v : k) v = static_cast<float>(v / sum);
    return k;
}

Image gaussian_blur(const Image& src, double sigma) {
    if (sigma <= 0.0) return src;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    const auto k = gaussian_kernel(radius, sigma);
    return convolve_separable(src, k, k);
}

Image pyr_down(const Image& src) {
    static const std::vector<float> binomial{1.f / 16, 4.f / 16, 6.f / 16, 4.f / 16, 1.f / 16};
    const Image blurred = convolve_separable(src, binomial, binomial);
    const int w = std::max(1, (src.width() + 1) / 2);
    const int h = std::max(1, (src.height() + 1) / 2);
    Image out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(x, y) = blurred.clamped(2 * x, 2 * y);
    return out;
}

Image resize_bilinear(const Image& src, int width, int height) {
    if (width == src.width() && height == src.height()) return src;
    Image out(width, height);
    const double sx = static_cast<double>(src.width()) / width;
    const double sy = static_cast<double>(src.height()) / height;
    for (int y = 0; y < height; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        for (int x = 0; x < width; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            out.at(x, y) = src.bilinear(fx, fy);
        }
    }
    return out;
}

void gradients(const Image& src, Image& gx, Image& gy) {
    const int w = src.width();
    const int h = src.height();
    gx = Image(w, h);
    gy = Image(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            gx.at(x, y) = 0.5f * (src.clamped(x + 1, y) - src.clamped(x - 1, y));
            gy.at(x, y) = 0.5f * (src.clamped(x, y + 1) - src.clamped(x, y - 1));
        }
    }
}

Image flip_horizontal(const Image& src) {
    Image out(src.width(), src.height());
    for (int y = 0; y < src.height(); ++y)
        for (int x = 0; x < src.width(); ++x) out.at(x, y) = src.at(src.width() - 1 - x, y);
    return out;
}

} // namespace nnseg
