#pragma once

#include "palettizer/extraction.hpp"
#include "palettizer/features.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace palettizer {

/// Synthetic infographic generator.
///
/// Colour law, with a theme hue h0 drawn per document and nesting level k
/// (k = 1 for elements placed directly in a visual group, +1 per nesting):
///   background   L = 92 (light theme) or 22 (dark theme), chroma 8, hue h0
///   artistic     hue h0 + 60 (k - 1); chroma 45 for odd k, 30 for even k;
///                L = 50 / 78 (odd / even k) on light themes, 70 / 38 on dark
///   data         L = 15 when the host colour has L > 60, else 95; chroma 3, hue h0
/// then N(0, noise²) per Lab channel and a snap onto the sRGB grid. Children
/// are sized as a fraction of their host; a share of top-level elements is
/// shrunk by the same factor, so size is a weak cue for nesting level while
/// the tree indices identify it exactly.
struct SynthConfig {
    int width = 240;
    int height = 180;
    double color_noise = 2.0;
    int max_groups = 3;
    int max_elements_per_group = 5;
    double nest_probability = 0.55;
    double top_level_shrink_probability = 0.5;
};

InfographicDoc generate_document(std::mt19937_64& rng, const SynthConfig& config = {});
std::vector<InfographicDoc> generate_corpus(std::size_t n, std::uint64_t seed, const SynthConfig& config = {});

/// Rasterises a document: nodes painted in pre-order, artistic shapes filled
/// inside their boxes, text as 2-pixel stripes, icons as discs.
RasterImage render_document(const InfographicDoc& doc);

/// Data-element boxes, group membership and VIF type of a generated document.
AnnotationSet annotations_for(const InfographicDoc& doc);

/// Whether the pixel centre (px, py) lies inside a shape of the given type
/// inscribed in `box`.
bool shape_contains(ElementType type, const BBox& box, double px, double py);

/// Image plus the exact 4-connected region masks that segmentation must find.
struct TestCard {
    RasterImage image;
    std::vector<std::vector<int>> regions;  // row-major pixel indices, ascending; sorted by first pixel
    int shape_count = 0;
};

/// Flat shapes (some nested) on a grey canvas; every region differs from
/// every other by ΔE00 > 10 and hues are at least 40° apart.
TestCard generate_test_card(std::uint64_t seed);

/// One shape with a vertical lightness ramp at constant hue. `regions` holds
/// the background and the whole shape.
TestCard generate_gradient_card(std::uint64_t seed);

/// Rotated shape silhouette on a square canvas of side `canvas`.
Segment shape_mask(ElementType type, double angle_degrees, int canvas = 160);

/// Vectors whose colours are an affine function of the non-colour features
/// plus N(0, noise²), left unsnapped.
std::vector<FeatureVector> generate_linear_corpus(std::size_t n, std::uint64_t seed, double noise = 2.0);

}  // namespace palettizer
