#pragma once

#include "palettizer/infographic.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

namespace palettizer {

/// Node-type one-hot categories of a slot (kind and element type folded together).
inline constexpr std::size_t kSlotTypeCount = 12;

/// A contiguous block of one-hot columns. An all-zero block is a valid
/// "absent" value (padded slots).
struct CategoricalGroup {
    int offset = 0;
    int size = 0;

    friend bool operator==(const CategoricalGroup&, const CategoricalGroup&) = default;
};

/// Column layout of a feature vector.
///
/// Standard layout, in order:
///   vif_<type> ×12, visual_group_number, visual_group_distance,
///   per slot sNN: exists, type_<t> ×12, rel_w, rel_h, rel_area,
///                 group_elements, colorable, [left, right],
///   per slot sNN: L, a, b.
/// Slots follow pre-order; left/right are dropped when `spatial` is false.
struct FeatureLayout {
    std::size_t max_nodes = 0;
    bool spatial = true;
    std::vector<std::string> names;
    std::vector<CategoricalGroup> categorical;
    std::vector<int> color_offset;      // per slot, column of L
    std::vector<int> colorable_offset;  // per slot, -1 if absent
    std::vector<int> left_offset;       // per slot, -1 if absent
    std::vector<int> right_offset;      // per slot, -1 if absent
    int non_color_width = 0;            // F occupies [0, non_color_width)

    int width() const { return static_cast<int>(names.size()); }
    std::size_t slots() const { return color_offset.size(); }
    bool is_color_column(int col) const { return col >= non_color_width; }

    static std::shared_ptr<const FeatureLayout> standard(std::size_t max_nodes = kDefaultMaxNodes,
                                                         bool spatial = true);

    friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

nlohmann::json to_json(const FeatureLayout& layout);
std::shared_ptr<const FeatureLayout> layout_from_json(const nlohmann::json& j);

/// [F, C] for one infographic plus an observation mask (1 = unobserved).
struct FeatureVector {
    std::shared_ptr<const FeatureLayout> layout;
    std::vector<double> values;
    std::vector<std::uint8_t> mask;
    std::vector<std::string> slot_ids;  // slot -> node id; "" for padding

    int width() const { return static_cast<int>(values.size()); }
    /// True if the slot holds a node with a colour (a palette entry).
    bool colorable(std::size_t slot) const;
    int slot_of(const std::string& id) const;
    LabColor color(std::size_t slot) const;
    void set_color(std::size_t slot, const LabColor& c);
    bool color_hidden(std::size_t slot) const;
    void set_color_hidden(std::size_t slot, bool hidden);

    friend bool operator==(const FeatureVector& a, const FeatureVector& b) {
        return *a.layout == *b.layout && a.values == b.values && a.mask == b.mask && a.slot_ids == b.slot_ids;
    }
};

/// Deterministic, fully observed encoding of a document. Throws
/// CapacityError if the document has more nodes than `max_nodes`.
FeatureVector featurize(const InfographicDoc& doc, std::size_t max_nodes = kDefaultMaxNodes);

/// Drops the left/right columns. Throws InvalidInput if already stripped.
FeatureVector strip_spatial(const FeatureVector& vec);

nlohmann::json to_json(const FeatureVector& vec);
FeatureVector feature_vector_from_json(const nlohmann::json& j);

void write_csv_header(std::ostream& out, const FeatureLayout& layout);
void write_csv_row(std::ostream& out, const FeatureVector& vec);

}  // namespace palettizer
