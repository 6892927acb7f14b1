#pragma once

#include <cstddef>
#include <vector>

namespace nnseg {

/// Single-channel float image, row-major.
class Image {
public:
    Image() = default;
    Image(int width, int height, float fill = 0.0f);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }
    std::size_t size() const { return data_.size(); }

    float& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    float at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    /// Pixel read with replicated borders.
    float clamped(int x, int y) const;

    /// Bilinear sample at sub-pixel position with replicated borders.
    float bilinear(double x, double y) const;

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

    bool operator==(const Image&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

/// Three-channel float image, interleaved.
class ColorImage {
public:
    ColorImage() = default;
    ColorImage(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }

    float& at(int x, int y, int c) { return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c]; }
    float at(int x, int y, int c) const { return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c]; }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

    bool operator==(const ColorImage&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

/// Separable convolution with a symmetric kernel (odd length), replicated borders.
Image convolve_separable(const Image& src, const std::vector<float>& kernel_x,
                         const std::vector<float>& kernel_y);

/// Normalized Gaussian kernel of the given radius.
std::vector<float> gaussian_kernel(int radius, double sigma);

Image gaussian_blur(const Image& src, double sigma);

/// Half-resolution level of a Gaussian pyramid (5-tap binomial then decimation).
Image pyr_down(const Image& src);

/// Bilinear resize to an arbitrary size (pixel-center aligned).
Image resize_bilinear(const Image& src, int width, int height);

/// Central-difference gradients, replicated borders.
void gradients(const Image& src, Image& gx, Image& gy);

Image flip_horizontal(const Image& src);

} // namespace nnseg
