#pragma once

#include "palettizer/color.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace palettizer {

/// Row-major 8-bit sRGB image.
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, RgbColor fill = {});
    RasterImage(int width, int height, std::vector<RgbColor> pixels);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return pixels_.size(); }

    RgbColor& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    const RgbColor& at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    std::span<const RgbColor> pixels() const { return pixels_; }
    std::span<RgbColor> pixels() { return pixels_; }

    friend bool operator==(const RasterImage&, const RasterImage&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<RgbColor> pixels_;
};

/// Largest accepted PNG width or height.
inline constexpr int kMaxPngSide = 8192;

/// PNG decoding; alpha is composited over white. Throws InvalidInput on
/// corrupt data or images wider or taller than kMaxPngSide.
RasterImage decode_png(std::span<const std::uint8_t> bytes);
RasterImage load_png(const std::string& path);

std::vector<std::uint8_t> encode_png(const RasterImage& img);
void save_png(const RasterImage& img, const std::string& path);

}  // namespace palettizer
