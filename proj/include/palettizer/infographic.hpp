#pragma once

#include "palettizer/color.hpp"

#include <json.hpp>

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace palettizer {

/// Default node capacity of a document.
inline constexpr std::size_t kDefaultMaxNodes = 19;

inline constexpr std::string_view kDocSchema = "palettizer/1";

enum class NodeKind { artistic, data, visual_group, background };

enum class ElementType {
    // artistic
    triangle,
    square,
    rectangle,
    pentagon,
    circle,
    others,
    // data
    index,
    text,
    icon,
    arrow,
};

/// Visual information flow layouts. Only the names are meaningful.
enum class VifType {
    landscape,
    portrait,
    clock,
    star,
    up_ladder,
    down_ladder,
    left_wing,
    right_wing,
    bowl,
    spiral,
    zigzag,
    mountain,
};

inline constexpr std::size_t kVifTypeCount = 12;

std::string_view to_string(NodeKind k);
std::string_view to_string(ElementType t);
std::string_view to_string(VifType v);
NodeKind parse_node_kind(std::string_view s);
ElementType parse_element_type(std::string_view s);
VifType parse_vif_type(std::string_view s);

bool is_artistic_type(ElementType t);
bool is_data_type(ElementType t);

struct BBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    int right() const { return x + w; }
    int bottom() const { return y + h; }
    long long area() const { return static_cast<long long>(w) * h; }
    bool contains(const BBox& o) const {
        return o.x >= x && o.y >= y && o.right() <= right() && o.bottom() <= bottom();
    }
    BBox intersect(const BBox& o) const;
    BBox unite(const BBox& o) const;
    double cx() const { return x + w / 2.0; }
    double cy() const { return y + h / 2.0; }

    friend bool operator==(const BBox&, const BBox&) = default;
};

struct ElementNode {
    std::string id;
    NodeKind kind = NodeKind::artistic;
    std::optional<ElementType> element_type;
    BBox bbox;
    long long pixel_area = 0;
    std::optional<LabColor> color;
    std::vector<std::string> children;

    /// Nodes that carry a colour slot in palettes. Visual groups never do.
    bool colorable() const { return kind != NodeKind::visual_group && color.has_value(); }

    friend bool operator==(const ElementNode&, const ElementNode&) = default;
};

/// Tree-structured model of one infographic. Nodes are stored flat and
/// linked by id; `root` names the background node.
struct InfographicDoc {
    int width = 0;
    int height = 0;
    std::string root;
    VifType vif_type = VifType::portrait;
    std::vector<std::string> visual_groups;  // ordered along the backbone
    std::vector<ElementNode> nodes;

    const ElementNode* find(std::string_view id) const;
    ElementNode* find(std::string_view id);
    const ElementNode& at(std::string_view id) const;

    /// Ids in pre-order, children visited in stored order.
    std::vector<std::string> preorder() const;

    /// Depth of every reachable node (root = 0).
    std::map<std::string, int> depths() const;

    friend bool operator==(const InfographicDoc&, const InfographicDoc&) = default;
};

/// Left/right numbers from a double-visit pre-order traversal.
struct NestedSetEntry {
    std::string id;
    int left = 0;
    int right = 0;

    friend bool operator==(const NestedSetEntry&, const NestedSetEntry&) = default;
};

/// Entries are kept in pre-order (ascending left).
struct NestedSetIndex {
    std::vector<NestedSetEntry> entries;

    const NestedSetEntry* find(std::string_view id) const;
    /// True iff `inner` is a strict descendant of `outer`.
    static bool nests(const NestedSetEntry& outer, const NestedSetEntry& inner) {
        return outer.left < inner.left && inner.right < outer.right;
    }
};

/// Shape of a tree: ordered child lists keyed by id.
struct TreeShape {
    std::string root;
    std::map<std::string, std::vector<std::string>> children;

    friend bool operator==(const TreeShape&, const TreeShape&) = default;
};

TreeShape shape_of(const InfographicDoc& doc);

/// Throws StructuralError on cycles or dangling child ids.
NestedSetIndex encode_nested_set(const InfographicDoc& doc);
NestedSetIndex encode_nested_set(const TreeShape& shape);

/// Throws StructuralError when the indices do not describe a tree.
TreeShape decode_nested_set(const NestedSetIndex& idx);

struct Violation {
    std::string node_id;
    std::string rule;
    std::string message;
};

std::vector<Violation> validate_doc(const InfographicDoc& doc, std::size_t max_nodes = kDefaultMaxNodes);

/// Reading order: top-to-bottom, then left-to-right by bbox origin.
bool reading_order_less(const BBox& a, const BBox& b);

nlohmann::json to_json(const InfographicDoc& doc);
/// Throws InvalidInput on schema mismatch or malformed fields.
InfographicDoc doc_from_json(const nlohmann::json& j);

InfographicDoc load_doc(const std::string& path);
void save_doc(const InfographicDoc& doc, const std::string& path);

}  // namespace palettizer
