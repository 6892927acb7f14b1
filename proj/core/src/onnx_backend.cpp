#include <mutex>

#include "nnseg/classifier.hpp"
#include "nnseg/error.hpp"

#ifdef NNSEG_WITH_OPENCV_DNN
#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>
#endif

namespace nnseg {

#ifdef NNSEG_WITH_OPENCV_DNN

struct OnnxBackend::Impl {
    mutable std::mutex mutex; // cv::dnn::Net::forward mutates the network
    mutable cv::dnn::Net net;
};

bool OnnxBackend::available() { return true; }

OnnxBackend::OnnxBackend(const std::filesystem::path& model, const std::filesystem::path& meta)
    : meta_(read_model_meta(meta)), impl_(std::make_unique<Impl>()) {
    if (!std::filesystem::exists(model)) throw IoError("onnx model not found: '" + model.string() + "'");
    try {
        impl_->net = cv::dnn::readNetFromONNX(model.string());
    } catch (const cv::Exception& e) {
        throw IoError("cannot load onnx model '" + model.string() + "': " + e.what());
    }
    if (impl_->net.empty()) throw IoError("cannot load onnx model '" + model.string() + "'");
}

OnnxBackend::~OnnxBackend() = default;

double OnnxBackend::score(const Window& w) const {
    const int t = meta_.frames;
    const int s = meta_.input_size;
    if (static_cast<int>(w.hsv_frames.size()) != t)
        throw ValidationError("onnx backend: window has " + std::to_string(w.hsv_frames.size()) + " frames, model expects " +
                              std::to_string(t));
    for (const auto& f : w.hsv_frames)
        if (f.width() != s || f.height() != s)
            throw ValidationError("onnx backend: frame size " + std::to_string(f.width()) + "x" + std::to_string(f.height()) +
                                  " does not match model input " + std::to_string(s) + "x" + std::to_string(s));

    const int sizes[5] = {1, t, 3, s, s};
    cv::Mat blob(5, sizes, CV_32F);
    float* dst = blob.ptr<float>();
    for (int k = 0; k < t; ++k) {
        const auto& f = w.hsv_frames[k];
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < s; ++y)
                for (int x = 0; x < s; ++x) *dst++ = f.at(x, y, c);
    }

    double value = 0.0;
    {
        std::lock_guard lock(impl_->mutex);
        try {
            impl_->net.setInput(blob);
            const cv::Mat out = impl_->net.forward();
            if (out.total() < 1) throw ValidationError("onnx backend: model produced no output");
            value = out.ptr<float>()[0];
        } catch (const cv::Exception& e) {
            throw ValidationError(std::string("onnx backend: inference failed: ") + e.what());
        }
    }
    if (meta_.emits_logit) value = sigmoid(value);
    if (!(value >= 0.0 && value <= 1.0)) throw ValidationError("onnx backend: model output outside [0,1]");
    return value;
}

#else

struct OnnxBackend::Impl {};

bool OnnxBackend::available() { return false; }

OnnxBackend::OnnxBackend(const std::filesystem::path&, const std::filesystem::path& meta) : meta_(read_model_meta(meta)) {
    throw ValidationError("onnx backend: built without OpenCV DNN support");
}

OnnxBackend::~OnnxBackend() = default;

double OnnxBackend::score(const Window&) const { throw ValidationError("onnx backend: unloaded"); }

#endif

} // namespace nnseg
