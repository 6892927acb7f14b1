#pragma once

#include <filesystem>
#include <vector>

#include "nnseg/image.hpp"

namespace nnseg {

/// One luminance frame, values in [0, 1].
struct Frame {
    Image pixels;
    int index = 0;
};

/// Ordered grayscale frames sampled at a fixed rate.
struct FrameSequence {
    std::vector<Frame> frames;
    double fps = 10.0;

    int width() const { return frames.empty() ? 0 : frames.front().pixels.width(); }
    int height() const { return frames.empty() ? 0 : frames.front().pixels.height(); }
    std::size_t size() const { return frames.size(); }
    double duration_s() const { return static_cast<double>(frames.size()) / fps; }

    /// Builds a sequence from images, numbering frames from 0. Validates invariants.
    static FrameSequence from_images(std::vector<Image> images, double fps);
};

/// Checks the sequence invariants (shared size, fps > 0, non-empty, pixels in [0,1]).
void validate(const FrameSequence& seq);

enum class ImageFormat { Pgm, Png };

/// Loads `frame_%06d.pgm|png` files plus optional `meta.txt` (`fps=<decimal>`).
/// `declared_fps` is used when no metadata file exists.
FrameSequence load_sequence(const std::filesystem::path& dir, double declared_fps);

/// Writes frames quantized to 8 bits and the metadata file. Existing frame files
/// in `dir` are removed first so the directory describes exactly this sequence.
void write_sequence(const FrameSequence& seq, const std::filesystem::path& dir,
                    ImageFormat format = ImageFormat::Pgm);

/// Nearest-frame temporal downsampling.
FrameSequence resample_fps(const FrameSequence& seq, double target_fps);

/// Source index chosen for output frame k by resample_fps.
int nearest_source_index(int k, double source_fps, double target_fps, int source_count);

/// Single-image codecs. Color inputs are reduced with 0.299/0.587/0.114.
Image read_image(const std::filesystem::path& path);
void write_pgm(const Image& img, const std::filesystem::path& path);
void write_png_gray(const Image& img, const std::filesystem::path& path);
/// Writes an RGB image with channels in [0,1].
void write_png_rgb(const ColorImage& rgb, const std::filesystem::path& path);

/// 8-bit quantization used by every writer.
unsigned char quantize(float v);

} // namespace nnseg
