#include "lld/image_io.hpp"

#include <png.h>

#include <cstring>
#include <stdexcept>
#include <vector>

namespace lld {

torch::Tensor read_png(const std::filesystem::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw std::runtime_error("cannot read image " + path.string() + ": " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw std::runtime_error("cannot decode image " + path.string() + ": " + image.message);
    }
    const auto h = static_cast<int64_t>(image.height);
    const auto w = static_cast<int64_t>(image.width);
    auto hwc = torch::from_blob(buffer.data(), {h, w, 3}, torch::kUInt8);
    return hwc.permute({2, 0, 1}).to(torch::kFloat32).div(255.0).contiguous();
}

torch::Tensor quantize8(const torch::Tensor& image) {
    return image.clamp(0.0, 1.0).mul(255.0).round().div(255.0);
}

void write_png(const std::filesystem::path& path, const torch::Tensor& img) {
    if (img.dim() != 3 || img.size(0) != 3) {
        throw std::invalid_argument("write_png: expected a [3, H, W] tensor");
    }
    auto hwc = img.detach().to(torch::kFloat64).clamp(0.0, 1.0).mul(255.0).round().to(torch::kUInt8)
                   .permute({1, 2, 0}).contiguous();
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.size(2));
    image.height = static_cast<png_uint_32>(img.size(1));
    image.format = PNG_FORMAT_RGB;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    if (!png_image_write_to_file(&image, path.c_str(), 0, hwc.data_ptr<uint8_t>(), 0, nullptr)) {
        throw std::runtime_error("cannot write image " + path.string() + ": " + image.message);
    }
}

}  // namespace lld
