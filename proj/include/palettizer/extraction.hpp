#pragma once

#include "palettizer/infographic.hpp"
#include "palettizer/raster.hpp"

#include <json.hpp>

#include <optional>
#include <vector>

namespace palettizer {

struct DataAnnotation {
    BBox bbox;
    ElementType element_type = ElementType::text;
};

/// Externally detected graphical data elements plus optional grouping.
struct AnnotationSet {
    std::vector<DataAnnotation> data_elements;
    /// Each group lists indices into `data_elements`, in backbone order.
    std::optional<std::vector<std::vector<int>>> visual_groups;
    std::optional<VifType> vif_type;
};

/// Throws InvalidInput on bad fields or boxes outside the image.
AnnotationSet annotations_from_json(const nlohmann::json& j, int width, int height);
nlohmann::json to_json(const AnnotationSet& ann);

struct ExtractionConfig {
    double region_threshold = 4.0;         // ΔE00 for region growing
    double min_segment_fraction = 0.0005;  // of image pixels
    double kde_bandwidth = 3.0;            // degrees of hue (or L units for greys)
    double achromatic_chroma = 5.0;
    double rdp_eps_fraction = 0.01;  // of contour length
    int circle_min_vertices = 8;
    double circle_area_tolerance = 0.1;
    double square_ratio_cutoff = 1.2;
    double right_angle_tolerance = 20.0;  // degrees
    double group_gap = 0.08;              // of image diagonal
    std::size_t max_nodes = kDefaultMaxNodes;
};

/// A 4-connected region of similar colour.
struct Segment {
    std::vector<int> pixels;  // row-major indices, ascending
    LabColor mean;
    BBox bbox;

    long long area() const { return static_cast<long long>(pixels.size()); }
};

/// Repaints every annotated box with the mode colour of the 2-pixel ring around it.
RasterImage remove_data_elements(const RasterImage& img, const AnnotationSet& ann);

/// Region growing against the running mean of each region, followed by
/// absorption of regions smaller than the minimum area into their most
/// similar neighbour. The result partitions the image.
std::vector<Segment> segment_regions(const RasterImage& img, const ExtractionConfig& cfg = {});

/// Merges adjacent segments whose hues share a Gaussian-KDE mode (greys use
/// lightness instead). Repeats until no merge applies, so it is idempotent.
std::vector<Segment> merge_gradient_segments(std::vector<Segment> segs, int width, int height,
                                             const ExtractionConfig& cfg = {});

/// Outer border of a segment as an ordered list of pixel coordinates.
std::vector<std::pair<int, int>> trace_contour(const Segment& seg, int width);

/// Closed-polygon Ramer-Douglas-Peucker simplification.
std::vector<std::pair<double, double>> simplify_closed(const std::vector<std::pair<double, double>>& pts,
                                                       double epsilon);

ElementType classify_shape(const Segment& seg, int width, const ExtractionConfig& cfg = {});

/// Builds the containment tree. `segments` is the full merged partition; the
/// one touching the image border most becomes the background root.
InfographicDoc build_tree(const RasterImage& img, const AnnotationSet& ann, const std::vector<Segment>& segments,
                          const ExtractionConfig& cfg = {});

/// The whole pipeline: clean, segment, merge, build.
InfographicDoc extract_document(const RasterImage& img, const AnnotationSet& ann, const ExtractionConfig& cfg = {});

}  // namespace palettizer
