#include "palettizer/infographic.hpp"

#include "palettizer/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace palettizer {
namespace {

constexpr std::array<std::string_view, 4> kKindNames = {"artistic", "data", "visual_group", "background"};
constexpr std::array<std::string_view, 10> kTypeNames = {"triangle", "square", "rectangle", "pentagon", "circle",
                                                         "others",   "index",  "text",      "icon",     "arrow"};
constexpr std::array<std::string_view, kVifTypeCount> kVifNames = {
    "landscape", "portrait", "clock", "star",   "up_ladder", "down_ladder",
    "left_wing", "right_wing", "bowl", "spiral", "zigzag",    "mountain"};

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<std::string_view, N>& names, const char* what) {
    for (std::size_t i = 0; i < N; ++i) {
        if (names[i] == s) return static_cast<Enum>(i);
    }
    throw InvalidInput(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(NodeKind k) { return kKindNames[static_cast<std::size_t>(k)]; }
std::string_view to_string(ElementType t) { return kTypeNames[static_cast<std::size_t>(t)]; }
std::string_view to_string(VifType v) { return kVifNames[static_cast<std::size_t>(v)]; }
NodeKind parse_node_kind(std::string_view s) { return parse_enum<NodeKind>(s, kKindNames, "node kind"); }
ElementType parse_element_type(std::string_view s) { return parse_enum<ElementType>(s, kTypeNames, "element type"); }
VifType parse_vif_type(std::string_view s) { return parse_enum<VifType>(s, kVifNames, "VIF type"); }

bool is_artistic_type(ElementType t) { return t <= ElementType::others; }
bool is_data_type(ElementType t) { return t >= ElementType::index; }

BBox BBox::intersect(const BBox& o) const {
    const int x0 = std::max(x, o.x);
    const int y0 = std::max(y, o.y);
    const int x1 = std::min(right(), o.right());
    const int y1 = std::min(bottom(), o.bottom());
    if (x1 <= x0 || y1 <= y0) return {x0, y0, 0, 0};
    return {x0, y0, x1 - x0, y1 - y0};
}

BBox BBox::unite(const BBox& o) const {
    const int x0 = std::min(x, o.x);
    const int y0 = std::min(y, o.y);
    return {x0, y0, std::max(right(), o.right()) - x0, std::max(bottom(), o.bottom()) - y0};
}

bool reading_order_less(const BBox& a, const BBox& b) {
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
}

const ElementNode* InfographicDoc::find(std::string_view id) const {
    for (const auto& n : nodes) {
        if (n.id == id) return &n;
    }
    return nullptr;
}

ElementNode* InfographicDoc::find(std::string_view id) {
    for (auto& n : nodes) {
        if (n.id == id) return &n;
    }
    return nullptr;
}

const ElementNode& InfographicDoc::at(std::string_view id) const {
    const ElementNode* n = find(id);
    if (!n) throw StructuralError("no node with id '" + std::string(id) + "'");
    return *n;
}

TreeShape shape_of(const InfographicDoc& doc) {
    TreeShape s;
    s.root = doc.root;
    for (const auto& n : doc.nodes) s.children[n.id] = n.children;
    return s;
}

NestedSetIndex encode_nested_set(const TreeShape& shape) {
    if (!shape.children.contains(shape.root)) {
        throw StructuralError("root '" + shape.root + "' is not a node");
    }
    NestedSetIndex out;
    std::unordered_set<std::string> seen;
    // Explicit stack of (node, next child position) to survive deep trees.
    struct Frame {
        std::string id;
        std::size_t entry;
        std::size_t next_child;
    };
    std::vector<Frame> stack;
    int counter = 1;
    auto enter = [&](const std::string& id) {
        if (!seen.insert(id).second) throw StructuralError("cycle or shared child at '" + id + "'");
        if (!shape.children.contains(id)) throw StructuralError("dangling child id '" + id + "'");
        out.entries.push_back({id, counter++, 0});
        stack.push_back({id, out.entries.size() - 1, 0});
    };
    enter(shape.root);
    while (!stack.empty()) {
        Frame& top = stack.back();
        const auto& kids = shape.children.at(top.id);
        if (top.next_child < kids.size()) {
            const std::string child = kids[top.next_child++];
            enter(child);
        } else {
            out.entries[top.entry].right = counter++;
            stack.pop_back();
        }
    }
    return out;
}

NestedSetIndex encode_nested_set(const InfographicDoc& doc) { return encode_nested_set(shape_of(doc)); }

const NestedSetEntry* NestedSetIndex::find(std::string_view id) const {
    for (const auto& e : entries) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

TreeShape decode_nested_set(const NestedSetIndex& idx) {
    if (idx.entries.empty()) throw StructuralError("empty nested-set index");
    const int n = static_cast<int>(idx.entries.size());
    std::vector<NestedSetEntry> sorted = idx.entries;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.left < b.left; });

    std::set<int> used;
    std::unordered_set<std::string> ids;
    for (const auto& e : sorted) {
        if (e.left < 1 || e.right > 2 * n || e.left >= e.right) {
            throw StructuralError("bad indices for '" + e.id + "'");
        }
        if (!used.insert(e.left).second || !used.insert(e.right).second) {
            throw StructuralError("duplicate index near '" + e.id + "'");
        }
        if (!ids.insert(e.id).second) throw StructuralError("duplicate id '" + e.id + "'");
    }

    TreeShape shape;
    shape.root = sorted.front().id;
    std::vector<const NestedSetEntry*> stack;
    for (const auto& e : sorted) {
        shape.children[e.id];
        while (!stack.empty() && stack.back()->right < e.left) stack.pop_back();
        if (stack.empty()) {
            if (&e != &sorted.front()) throw StructuralError("more than one root near '" + e.id + "'");
        } else {
            if (e.right > stack.back()->right) throw StructuralError("interval of '" + e.id + "' overlaps its parent");
            shape.children[stack.back()->id].push_back(e.id);
        }
        stack.push_back(&e);
    }
    // Gaps in the numbering would otherwise decode to a tree whose own encoding differs.
    NestedSetIndex check = encode_nested_set(shape);
    std::sort(check.entries.begin(), check.entries.end(), [](const auto& a, const auto& b) { return a.left < b.left; });
    if (check.entries != sorted) throw StructuralError("indices are not a contiguous pre-order numbering");
    return shape;
}

std::map<std::string, int> InfographicDoc::depths() const {
    std::map<std::string, int> out;
    if (!find(root)) return out;
    std::vector<std::pair<std::string, int>> stack = {{root, 0}};
    while (!stack.empty()) {
        auto [id, d] = stack.back();
        stack.pop_back();
        if (out.contains(id)) continue;
        out[id] = d;
        if (const ElementNode* n = find(id)) {
            for (const auto& c : n->children) stack.emplace_back(c, d + 1);
        }
    }
    return out;
}

std::vector<std::string> InfographicDoc::preorder() const {
    std::vector<std::string> out;
    for (const auto& e : encode_nested_set(*this).entries) out.push_back(e.id);
    return out;
}

std::vector<Violation> validate_doc(const InfographicDoc& doc, std::size_t max_nodes) {
    std::vector<Violation> v;
    auto add = [&](const std::string& id, const char* rule, std::string msg) {
        v.push_back({id, rule, std::move(msg)});
    };

    if (doc.nodes.size() > max_nodes) {
        add(doc.root, "node_count",
            std::to_string(doc.nodes.size()) + " nodes exceeds limit " + std::to_string(max_nodes));
    }
    if (doc.width <= 0 || doc.height <= 0) add(doc.root, "canvas", "non-positive canvas size");

    std::unordered_map<std::string, const ElementNode*> by_id;
    for (const auto& n : doc.nodes) {
        if (!by_id.emplace(n.id, &n).second) add(n.id, "unique_id", "duplicate node id");
    }

    const ElementNode* root = doc.find(doc.root);
    if (!root) {
        add(doc.root, "root", "root id does not name a node");
        return v;
    }
    if (root->kind != NodeKind::background) add(root->id, "root", "root must be the background node");
    for (const auto& n : doc.nodes) {
        if (n.kind == NodeKind::background && n.id != doc.root) add(n.id, "root", "second background node");
    }

    // Reachability: every node exactly once from the root.
    std::unordered_map<std::string, int> visits;
    std::vector<std::string> stack = {doc.root};
    while (!stack.empty()) {
        const std::string id = stack.back();
        stack.pop_back();
        if (++visits[id] > 1) {
            add(id, "tree", "node reached more than once");
            continue;
        }
        const auto it = by_id.find(id);
        if (it == by_id.end()) continue;
        for (const auto& c : it->second->children) {
            if (!by_id.contains(c)) {
                add(id, "dangling_child", "child '" + c + "' does not exist");
                continue;
            }
            stack.push_back(c);
        }
    }
    for (const auto& n : doc.nodes) {
        if (!visits.contains(n.id)) add(n.id, "tree", "node not reachable from root");
    }

    for (const auto& n : doc.nodes) {
        if (n.bbox.w < 0 || n.bbox.h < 0) add(n.id, "bbox", "negative bbox extent");
        for (const auto& c : n.children) {
            const auto it = by_id.find(c);
            if (it != by_id.end() && !n.bbox.contains(it->second->bbox)) {
                add(c, "containment", "bbox not contained in parent '" + n.id + "'");
            }
        }
        switch (n.kind) {
            case NodeKind::visual_group:
            case NodeKind::background:
                if (n.element_type) add(n.id, "element_type", "group/background nodes carry no element type");
                break;
            case NodeKind::artistic:
                if (!n.element_type || !is_artistic_type(*n.element_type))
                    add(n.id, "element_type", "artistic node needs an artistic element type");
                break;
            case NodeKind::data:
                if (!n.element_type || !is_data_type(*n.element_type))
                    add(n.id, "element_type", "data node needs a data element type");
                break;
        }
        if (n.kind == NodeKind::visual_group) {
            if (n.color) add(n.id, "color", "visual groups carry no colour");
            if (std::find(root->children.begin(), root->children.end(), n.id) == root->children.end())
                add(n.id, "group_parent", "visual group must be a child of the root");
        }
        if (n.color) {
            const auto& c = *n.color;
            if (!std::isfinite(c.l) || !std::isfinite(c.a) || !std::isfinite(c.b) || c.l < 0.0 || c.l > 100.0)
                add(n.id, "color", "colour outside Lab range");
        }
        if (n.pixel_area < 0) add(n.id, "pixel_area", "negative pixel area");
    }
    for (const auto& g : doc.visual_groups) {
        const auto it = by_id.find(g);
        if (it == by_id.end() || it->second->kind != NodeKind::visual_group)
            add(g, "visual_groups", "backbone entry is not a visual group node");
    }
    return v;
}

nlohmann::json to_json(const InfographicDoc& doc) {
    using nlohmann::json;
    json nodes = json::array();
    for (const auto& n : doc.nodes) {
        nodes.push_back({
            {"id", n.id},
            {"kind", to_string(n.kind)},
            {"element_type", n.element_type ? json(to_string(*n.element_type)) : json(nullptr)},
            {"bbox", {{"x", n.bbox.x}, {"y", n.bbox.y}, {"w", n.bbox.w}, {"h", n.bbox.h}}},
            {"pixel_area", n.pixel_area},
            {"color", n.color ? json(to_hex(*n.color)) : json(nullptr)},
            {"children", n.children},
        });
    }
    return {{"schema", kDocSchema},        {"width", doc.width},
            {"height", doc.height},        {"root", doc.root},
            {"vif_type", to_string(doc.vif_type)}, {"visual_groups", doc.visual_groups},
            {"nodes", nodes}};
}

InfographicDoc doc_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object()) throw InvalidInput("document must be a JSON object");
        if (j.value("schema", std::string()) != kDocSchema)
            throw InvalidInput("document schema must be '" + std::string(kDocSchema) + "'");
        InfographicDoc doc;
        doc.width = j.at("width").get<int>();
        doc.height = j.at("height").get<int>();
        doc.root = j.at("root").get<std::string>();
        doc.vif_type = parse_vif_type(j.at("vif_type").get<std::string>());
        doc.visual_groups = j.value("visual_groups", std::vector<std::string>{});
        for (const auto& jn : j.at("nodes")) {
            ElementNode n;
            n.id = jn.at("id").get<std::string>();
            n.kind = parse_node_kind(jn.at("kind").get<std::string>());
            if (jn.contains("element_type") && !jn["element_type"].is_null())
                n.element_type = parse_element_type(jn["element_type"].get<std::string>());
            const auto& b = jn.at("bbox");
            n.bbox = {b.at("x").get<int>(), b.at("y").get<int>(), b.at("w").get<int>(), b.at("h").get<int>()};
            n.pixel_area = jn.value("pixel_area", 0LL);
            if (jn.contains("color") && !jn["color"].is_null())
                n.color = rgb_to_lab(parse_hex(jn["color"].get<std::string>()));
            n.children = jn.value("children", std::vector<std::string>{});
            doc.nodes.push_back(std::move(n));
        }
        return doc;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed document: ") + e.what());
    }
}

InfographicDoc load_doc(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(path + ": " + e.what());
    }
    return doc_from_json(j);
}

void save_doc(const InfographicDoc& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path);
    out << to_json(doc).dump(2) << '\n';
}

}  // namespace palettizer
