#include "palettizer/features.hpp"

#include "palettizer/errors.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>

namespace palettizer {
namespace {

constexpr std::array<std::string_view, kSlotTypeCount> kSlotTypeNames = {
    "background", "visual_group", "triangle", "square", "rectangle", "pentagon",
    "circle",     "others",       "index",    "text",   "icon",      "arrow"};

std::size_t slot_type_index(const ElementNode& n) {
    switch (n.kind) {
        case NodeKind::background: return 0;
        case NodeKind::visual_group: return 1;
        default: return 2 + static_cast<std::size_t>(n.element_type.value_or(ElementType::others));
    }
}

std::string slot_prefix(std::size_t s) {
    std::string out = s < 10 ? "s0" : "s";
    return out + std::to_string(s) + "_";
}

FeatureLayout make_standard(std::size_t max_nodes, bool spatial) {
    FeatureLayout l;
    l.max_nodes = max_nodes;
    l.spatial = spatial;
    auto add = [&l](std::string name) {
        l.names.push_back(std::move(name));
        return static_cast<int>(l.names.size()) - 1;
    };
    l.categorical.push_back({static_cast<int>(l.names.size()), static_cast<int>(kVifTypeCount)});
    for (std::size_t v = 0; v < kVifTypeCount; ++v) add("vif_" + std::string(to_string(static_cast<VifType>(v))));
    add("visual_group_number");
    add("visual_group_distance");
    for (std::size_t s = 0; s < max_nodes; ++s) {
        const std::string p = slot_prefix(s);
        add(p + "exists");
        l.categorical.push_back({static_cast<int>(l.names.size()), static_cast<int>(kSlotTypeCount)});
        for (auto t : kSlotTypeNames) add(p + "type_" + std::string(t));
        add(p + "rel_w");
        add(p + "rel_h");
        add(p + "rel_area");
        add(p + "group_elements");
        l.colorable_offset.push_back(add(p + "colorable"));
        if (spatial) {
            l.left_offset.push_back(add(p + "left"));
            l.right_offset.push_back(add(p + "right"));
        } else {
            l.left_offset.push_back(-1);
            l.right_offset.push_back(-1);
        }
    }
    l.non_color_width = static_cast<int>(l.names.size());
    for (std::size_t s = 0; s < max_nodes; ++s) {
        const std::string p = slot_prefix(s);
        l.color_offset.push_back(add(p + "L"));
        add(p + "a");
        add(p + "b");
    }
    return l;
}

// Column offsets inside one slot block of the standard layout.
constexpr int kExists = 0;
constexpr int kType = 1;
constexpr int kRelW = kType + static_cast<int>(kSlotTypeCount);
constexpr int kRelH = kRelW + 1;
constexpr int kRelArea = kRelH + 1;
constexpr int kGroupElements = kRelArea + 1;

int slot_base(const FeatureLayout& l, std::size_t s) { return l.colorable_offset[s] - (kGroupElements + 1); }

}  // namespace

std::shared_ptr<const FeatureLayout> FeatureLayout::standard(std::size_t max_nodes, bool spatial) {
    static std::mutex mu;
    static std::map<std::pair<std::size_t, bool>, std::shared_ptr<const FeatureLayout>> cache;
    std::lock_guard lock(mu);
    auto& entry = cache[{max_nodes, spatial}];
    if (!entry) entry = std::make_shared<const FeatureLayout>(make_standard(max_nodes, spatial));
    return entry;
}

nlohmann::json to_json(const FeatureLayout& l) {
    nlohmann::json cats = nlohmann::json::array();
    for (const auto& c : l.categorical) cats.push_back({c.offset, c.size});
    return {{"max_nodes", l.max_nodes},
            {"spatial", l.spatial},
            {"names", l.names},
            {"categorical", cats},
            {"color_offset", l.color_offset},
            {"colorable_offset", l.colorable_offset},
            {"left_offset", l.left_offset},
            {"right_offset", l.right_offset},
            {"non_color_width", l.non_color_width}};
}

std::shared_ptr<const FeatureLayout> layout_from_json(const nlohmann::json& j) {
    try {
        FeatureLayout l;
        l.max_nodes = j.at("max_nodes").get<std::size_t>();
        l.spatial = j.at("spatial").get<bool>();
        l.names = j.at("names").get<std::vector<std::string>>();
        for (const auto& c : j.at("categorical")) l.categorical.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
        l.color_offset = j.at("color_offset").get<std::vector<int>>();
        l.colorable_offset = j.at("colorable_offset").get<std::vector<int>>();
        l.left_offset = j.at("left_offset").get<std::vector<int>>();
        l.right_offset = j.at("right_offset").get<std::vector<int>>();
        l.non_color_width = j.at("non_color_width").get<int>();
        const int w = l.width();
        for (int c : l.color_offset) {
            if (c < l.non_color_width || c + 3 > w) throw InvalidInput("colour offset out of range");
        }
        for (const auto& c : l.categorical) {
            if (c.offset < 0 || c.size <= 0 || c.offset + c.size > w) throw InvalidInput("categorical group out of range");
        }
        // Reuse the shared instance when the layout is a standard one.
        if (l.max_nodes > 0 && l == *FeatureLayout::standard(l.max_nodes, l.spatial))
            return FeatureLayout::standard(l.max_nodes, l.spatial);
        return std::make_shared<const FeatureLayout>(std::move(l));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed layout: ") + e.what());
    }
}

bool FeatureVector::colorable(std::size_t slot) const {
    if (slot >= layout->slots()) return false;
    const int off = layout->colorable_offset.empty() ? -1 : layout->colorable_offset[slot];
    return off < 0 ? true : values[off] != 0.0;
}

int FeatureVector::slot_of(const std::string& id) const {
    for (std::size_t s = 0; s < slot_ids.size(); ++s) {
        if (slot_ids[s] == id) return static_cast<int>(s);
    }
    return -1;
}

LabColor FeatureVector::color(std::size_t slot) const {
    const int o = layout->color_offset[slot];
    return {values[o], values[o + 1], values[o + 2]};
}

void FeatureVector::set_color(std::size_t slot, const LabColor& c) {
    const int o = layout->color_offset[slot];
    values[o] = c.l;
    values[o + 1] = c.a;
    values[o + 2] = c.b;
}

bool FeatureVector::color_hidden(std::size_t slot) const { return mask[layout->color_offset[slot]] != 0; }

void FeatureVector::set_color_hidden(std::size_t slot, bool hidden) {
    const int o = layout->color_offset[slot];
    mask[o] = mask[o + 1] = mask[o + 2] = hidden ? 1 : 0;
}

FeatureVector featurize(const InfographicDoc& doc, std::size_t max_nodes) {
    const auto nested = encode_nested_set(doc);
    if (nested.entries.size() > max_nodes) throw CapacityError(nested.entries.size(), max_nodes);
    auto layout = FeatureLayout::standard(max_nodes, true);

    FeatureVector v;
    v.layout = layout;
    v.values.assign(layout->width(), 0.0);
    v.mask.assign(layout->width(), 0);
    v.slot_ids.assign(max_nodes, "");

    const double W = doc.width;
    const double H = doc.height;
    const double canvas = W * H;
    const double diag = std::hypot(W, H);

    v.values[static_cast<std::size_t>(doc.vif_type)] = 1.0;
    v.values[kVifTypeCount] = static_cast<double>(doc.visual_groups.size());
    double dist = 0.0;
    if (doc.visual_groups.size() >= 2) {
        for (std::size_t g = 0; g + 1 < doc.visual_groups.size(); ++g) {
            const BBox& a = doc.at(doc.visual_groups[g]).bbox;
            const BBox& b = doc.at(doc.visual_groups[g + 1]).bbox;
            dist += std::hypot(a.cx() - b.cx(), a.cy() - b.cy());
        }
        dist /= static_cast<double>(doc.visual_groups.size() - 1);
    }
    v.values[kVifTypeCount + 1] = dist / diag;

    const double index_range = 2.0 * static_cast<double>(max_nodes);
    for (std::size_t s = 0; s < nested.entries.size(); ++s) {
        const auto& e = nested.entries[s];
        const ElementNode& node = doc.at(e.id);
        v.slot_ids[s] = e.id;
        const int base = slot_base(*layout, s);
        v.values[base + kExists] = 1.0;
        v.values[base + kType + static_cast<int>(slot_type_index(node))] = 1.0;
        v.values[base + kRelW] = node.bbox.w / W;
        v.values[base + kRelH] = node.bbox.h / H;
        v.values[base + kRelArea] = static_cast<double>(node.pixel_area) / canvas;
        if (node.kind == NodeKind::visual_group) {
            // Descendants = (right - left - 1) / 2 in a nested set.
            v.values[base + kGroupElements] = (e.right - e.left - 1) / 2;
        }
        v.values[layout->colorable_offset[s]] = node.colorable() ? 1.0 : 0.0;
        v.values[layout->left_offset[s]] = e.left / index_range;
        v.values[layout->right_offset[s]] = e.right / index_range;
        if (node.colorable()) v.set_color(s, *node.color);
    }
    return v;
}

FeatureVector strip_spatial(const FeatureVector& vec) {
    if (!vec.layout->spatial) throw InvalidInput("feature vector has no spatial columns");
    auto target = FeatureLayout::standard(vec.layout->max_nodes, false);
    std::vector<bool> drop(vec.layout->width(), false);
    for (std::size_t s = 0; s < vec.layout->slots(); ++s) {
        drop[vec.layout->left_offset[s]] = true;
        drop[vec.layout->right_offset[s]] = true;
    }
    FeatureVector out;
    out.layout = target;
    out.slot_ids = vec.slot_ids;
    for (int c = 0; c < vec.layout->width(); ++c) {
        if (drop[c]) continue;
        out.values.push_back(vec.values[c]);
        out.mask.push_back(vec.mask[c]);
    }
    if (out.width() != target->width()) throw InvalidInput("feature vector does not match the standard layout");
    return out;
}

nlohmann::json to_json(const FeatureVector& vec) {
    return {{"layout", {{"max_nodes", vec.layout->max_nodes}, {"spatial", vec.layout->spatial}}},
            {"columns", vec.layout->names},
            {"values", vec.values},
            {"mask", vec.mask},
            {"slot_ids", vec.slot_ids}};
}

FeatureVector feature_vector_from_json(const nlohmann::json& j) {
    try {
        FeatureVector v;
        v.layout = FeatureLayout::standard(j.at("layout").at("max_nodes").get<std::size_t>(),
                                           j.at("layout").at("spatial").get<bool>());
        v.values = j.at("values").get<std::vector<double>>();
        v.mask = j.at("mask").get<std::vector<std::uint8_t>>();
        v.slot_ids = j.at("slot_ids").get<std::vector<std::string>>();
        if (v.width() != v.layout->width() || v.mask.size() != v.values.size() ||
            v.slot_ids.size() != v.layout->slots())
            throw InvalidInput("feature vector width does not match its layout");
        return v;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed feature vector: ") + e.what());
    }
}

void write_csv_header(std::ostream& out, const FeatureLayout& layout) {
    for (int c = 0; c < layout.width(); ++c) out << (c ? "," : "") << layout.names[c];
    out << '\n';
}

void write_csv_row(std::ostream& out, const FeatureVector& vec) {
    char buf[32];
    for (int c = 0; c < vec.width(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", vec.values[c]);
        out << (c ? "," : "") << buf;
    }
    out << '\n';
}

}  // namespace palettizer
