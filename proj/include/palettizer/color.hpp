#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace palettizer {

/// CIELab value under the D65 / 2° observer.
struct LabColor {
    double l = 0.0;
    double a = 0.0;
    double b = 0.0;

    friend bool operator==(const LabColor&, const LabColor&) = default;
};

/// 8-bit sRGB triple.
struct RgbColor {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const RgbColor&, const RgbColor&) = default;
};

LabColor rgb_to_lab(RgbColor c);

/// Inverse transform followed by a per-channel clamp into [0,255].
RgbColor lab_to_rgb_clamped(const LabColor& c);

/// Snap a Lab value onto the displayable sRGB grid.
inline LabColor clamp_to_gamut(const LabColor& c) { return rgb_to_lab(lab_to_rgb_clamped(c)); }

/// CIEDE2000 colour difference with kL = kC = kH = 1.
double ciede2000(const LabColor& x, const LabColor& y);

/// Lab chroma sqrt(a² + b²).
double chroma(const LabColor& c);

/// Lab hue angle atan2(b, a) in degrees, in [0, 360).
double hue_degrees(const LabColor& c);

/// "#RRGGBB", uppercase.
std::string to_hex(RgbColor c);
inline std::string to_hex(const LabColor& c) { return to_hex(lab_to_rgb_clamped(c)); }

/// Accepts "#RRGGBB" in either case. Throws InvalidInput on anything else.
RgbColor parse_hex(std::string_view hex);

}  // namespace palettizer
