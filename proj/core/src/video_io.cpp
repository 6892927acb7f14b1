#include "nnseg/video_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "nnseg/error.hpp"
#include "nnseg/text.hpp"

namespace nnseg {

namespace fs = std::filesystem;

namespace {

constexpr double kLumaR = 0.299;
constexpr double kLumaG = 0.587;
constexpr double kLumaB = 0.114;

float luma(unsigned r, unsigned g, unsigned b, double maxval) {
    const double y = (kLumaR * r + kLumaG * g + kLumaB * b) / maxval;
    return static_cast<float>(std::clamp(y, 0.0, 1.0));
}

// Next whitespace-delimited PNM header token, skipping '#' comments.
std::string pnm_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            if (!tok.empty()) break;
        } else {
            tok.push_back(static_cast<char>(c));
        }
        c = in.get();
    }
    return tok;
}

Image read_pnm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    const std::string magic = pnm_token(in);
    if (magic != "P5" && magic != "P2" && magic != "P6" && magic != "P3")
        throw IoError(path.string() + ": unsupported PNM type '" + magic + "'");
    int w = 0, h = 0, maxval = 0;
    try {
        w = static_cast<int>(parse_int(pnm_token(in), "width"));
        h = static_cast<int>(parse_int(pnm_token(in), "height"));
        maxval = static_cast<int>(parse_int(pnm_token(in), "maxval"));
    } catch (const ValidationError& e) {
        throw IoError(path.string() + ": bad PNM header (" + e.what() + ")");
    }
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
        throw IoError(path.string() + ": only 8-bit PNM images are supported");

    const bool color = magic == "P6" || magic == "P3";
    const bool binary = magic == "P5" || magic == "P6";
    const int channels = color ? 3 : 1;
    const std::size_t count = static_cast<std::size_t>(w) * h * channels;
    std::vector<unsigned> raw(count);
    if (binary) {
        std::vector<unsigned char> bytes(count);
        in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count));
        if (static_cast<std::size_t>(in.gcount()) != count) throw IoError(path.string() + ": truncated pixel data");
        std::copy(bytes.begin(), bytes.end(), raw.begin());
    } else {
        for (auto& v : raw) {
            const std::string tok = pnm_token(in);
            if (tok.empty()) throw IoError(path.string() + ": truncated pixel data");
            v = static_cast<unsigned>(std::stoul(tok));
        }
    }

    Image img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = (static_cast<std::size_t>(y) * w + x) * channels;
            img.at(x, y) = color ? luma(raw[i], raw[i + 1], raw[i + 2], maxval)
                                 : static_cast<float>(std::min<unsigned>(raw[i], maxval)) / static_cast<float>(maxval);
        }
    }
    return img;
}

Image read_png(const fs::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str()))
        throw IoError(path.string() + ": " + image.message);
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<unsigned char> buf(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError(path.string() + ": " + image.message);
    }
    const int w = static_cast<int>(image.width);
    const int h = static_cast<int>(image.height);
    Image img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            img.at(x, y) = color ? luma(buf[3 * i], buf[3 * i + 1], buf[3 * i + 2], 255.0)
                                 : static_cast<float>(buf[i]) / 255.0f;
        }
    }
    return img;
}

void write_png_buffer(const fs::path& path, int w, int h, bool color, const std::vector<unsigned char>& buf) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, buf.data(), 0, nullptr))
        throw IoError(path.string() + ": " + image.message);
}

const std::regex& frame_name_pattern() {
    static const std::regex re(R"(frame_(\d{6})\.(pgm|png))");
    return re;
}

} // namespace

unsigned char quantize(float v) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    return static_cast<unsigned char>(std::lround(c * 255.0f));
}

FrameSequence FrameSequence::from_images(std::vector<Image> images, double fps) {
    FrameSequence seq;
    seq.fps = fps;
    seq.frames.reserve(images.size());
    int i = 0;
    for (auto& img : images) seq.frames.push_back(Frame{std::move(img), i++});
    validate(seq);
    return seq;
}

void validate(const FrameSequence& seq) {
    if (!(seq.fps > 0.0) || !std::isfinite(seq.fps)) throw ValidationError("frame sequence: fps must be positive");
    if (seq.frames.empty()) throw ValidationError("frame sequence: at least one frame required");
    const int w = seq.width();
    const int h = seq.height();
    if (w <= 0 || h <= 0) throw ValidationError("frame sequence: empty frame");
    for (const auto& f : seq.frames) {
        if (f.pixels.width() != w || f.pixels.height() != h)
            throw ValidationError("frame sequence: mixed frame dimensions at frame " + std::to_string(f.index));
        for (float v : f.pixels.data())
            if (!(v >= 0.0f && v <= 1.0f))
                throw ValidationError("frame sequence: pixel outside [0,1] at frame " + std::to_string(f.index));
    }
}

Image read_image(const fs::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".png") return read_png(path);
    return read_pnm(path);
}

void write_pgm(const Image& img, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    std::vector<unsigned char> bytes(img.size());
    std::transform(img.data().begin(), img.data().end(), bytes.begin(), quantize);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_png_gray(const Image& img, const fs::path& path) {
    std::vector<unsigned char> bytes(img.size());
    std::transform(img.data().begin(), img.data().end(), bytes.begin(), quantize);
    write_png_buffer(path, img.width(), img.height(), false, bytes);
}

void write_png_rgb(const ColorImage& rgb, const fs::path& path) {
    std::vector<unsigned char> bytes(rgb.data().size());
    std::transform(rgb.data().begin(), rgb.data().end(), bytes.begin(), quantize);
    write_png_buffer(path, rgb.width(), rgb.height(), true, bytes);
}

FrameSequence load_sequence(const fs::path& dir, double declared_fps) {
    if (!fs::is_directory(dir)) throw IoError("frame directory not found: '" + dir.string() + "'");

    std::map<long, fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (!std::regex_match(name, m, frame_name_pattern())) continue;
        const long idx = std::stol(m[1].str());
        if (!files.emplace(idx, entry.path()).second)
            throw ValidationError(dir.string() + ": duplicate frame index " + std::to_string(idx));
    }
    if (files.empty()) throw ValidationError(dir.string() + ": no frame_%06d.pgm|png files");

    long expected = 0;
    for (const auto& [idx, path] : files) {
        if (idx != expected)
            throw ValidationError(dir.string() + ": non-contiguous frame indices (missing " +
                                  std::to_string(expected) + ")");
        ++expected;
    }

    double fps = declared_fps;
    const fs::path meta = dir / "meta.txt";
    if (fs::exists(meta)) {
        const std::string line = trim(read_text_file(meta));
        if (!line.starts_with("fps=")) throw ValidationError(meta.string() + ": expected 'fps=<decimal>'");
        fps = parse_double(line.substr(4), "fps");
    }
    if (!(fps > 0.0)) throw ValidationError("fps must be positive");

    FrameSequence seq;
    seq.fps = fps;
    for (const auto& [idx, path] : files) seq.frames.push_back(Frame{read_image(path), static_cast<int>(idx)});
    validate(seq);
    return seq;
}

void write_sequence(const FrameSequence& seq, const fs::path& dir, ImageFormat format) {
    validate(seq);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && std::regex_match(name, frame_name_pattern())) fs::remove(entry.path());
    }
    char name[32];
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        std::snprintf(name, sizeof(name), "frame_%06zu.%s", i, format == ImageFormat::Png ? "png" : "pgm");
        if (format == ImageFormat::Png)
            write_png_gray(seq.frames[i].pixels, dir / name);
        else
            write_pgm(seq.frames[i].pixels, dir / name);
    }
    write_text_file(dir / "meta.txt", "fps=" + format_shortest(seq.fps) + "\n");
}

int nearest_source_index(int k, double source_fps, double target_fps, int source_count) {
    const double idx = std::round(static_cast<double>(k) * source_fps / target_fps);
    return std::clamp(static_cast<int>(idx), 0, source_count - 1);
}

FrameSequence resample_fps(const FrameSequence& seq, double target_fps) {
    validate(seq);
    if (!(target_fps > 0.0)) throw ValidationError("resample: target fps must be positive");
    if (target_fps > seq.fps * (1.0 + 1e-12))
        throw ValidationError("resample: upsampling unsupported (target " + format_shortest(target_fps) +
                              " > source " + format_shortest(seq.fps) + ")");
    const int n = static_cast<int>(seq.frames.size());
    // Output grid covers [0, duration): k / target < n / source.
    const int count = std::max(1, static_cast<int>(std::ceil(n * target_fps / seq.fps - 1e-9)));
    FrameSequence out;
    out.fps = target_fps;
    out.frames.reserve(count);
    for (int k = 0; k < count; ++k) {
        const int src = nearest_source_index(k, seq.fps, target_fps, n);
        out.frames.push_back(Frame{seq.frames[src].pixels, k});
    }
    return out;
}

} // namespace nnseg
