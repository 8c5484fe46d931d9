#pragma once

// Fixtures shared by the unit tests and the acceptance binary.

#include "palettizer/color.hpp"
#include "palettizer/features.hpp"
#include "palettizer/imputer.hpp"
#include "palettizer/infographic.hpp"

#include <array>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace testsupport {

using palettizer::BBox;
using palettizer::ElementNode;
using palettizer::ElementType;
using palettizer::InfographicDoc;
using palettizer::LabColor;
using palettizer::NodeKind;

struct ColorPair {
    LabColor x, y;
    double expected;
};

// Published CIEDE2000 reference pairs, four-decimal differences.
inline const std::array<ColorPair, 34>& ciede2000_pairs() {
    static const std::array<ColorPair, 34> pairs = {{
        {{50.0000, 2.6772, -79.7751}, {50.0000, 0.0000, -82.7485}, 2.0425},
        {{50.0000, 3.1571, -77.2803}, {50.0000, 0.0000, -82.7485}, 2.8615},
        {{50.0000, 2.8361, -74.0200}, {50.0000, 0.0000, -82.7485}, 3.4412},
        {{50.0000, -1.3802, -84.2814}, {50.0000, 0.0000, -82.7485}, 1.0000},
        {{50.0000, -1.1848, -84.8006}, {50.0000, 0.0000, -82.7485}, 1.0000},
        {{50.0000, -0.9009, -85.5211}, {50.0000, 0.0000, -82.7485}, 1.0000},
        {{50.0000, 0.0000, 0.0000}, {50.0000, -1.0000, 2.0000}, 2.3669},
        {{50.0000, -1.0000, 2.0000}, {50.0000, 0.0000, 0.0000}, 2.3669},
        {{50.0000, 2.4900, -0.0010}, {50.0000, -2.4900, 0.0009}, 7.1792},
        {{50.0000, 2.4900, -0.0010}, {50.0000, -2.4900, 0.0010}, 7.1792},
        {{50.0000, 2.4900, -0.0010}, {50.0000, -2.4900, 0.0011}, 7.2195},
        {{50.0000, 2.4900, -0.0010}, {50.0000, -2.4900, 0.0012}, 7.2195},
        {{50.0000, -0.0010, 2.4900}, {50.0000, 0.0009, -2.4900}, 4.8045},
        {{50.0000, -0.0010, 2.4900}, {50.0000, 0.0010, -2.4900}, 4.8045},
        {{50.0000, -0.0010, 2.4900}, {50.0000, 0.0011, -2.4900}, 4.7461},
        {{50.0000, 2.5000, 0.0000}, {50.0000, 0.0000, -2.5000}, 4.3065},
        {{50.0000, 2.5000, 0.0000}, {73.0000, 25.0000, -18.0000}, 27.1492},
        {{50.0000, 2.5000, 0.0000}, {61.0000, -5.0000, 29.0000}, 22.8977},
        {{50.0000, 2.5000, 0.0000}, {56.0000, -27.0000, -3.0000}, 31.9030},
        {{50.0000, 2.5000, 0.0000}, {58.0000, 24.0000, 15.0000}, 19.4535},
        {{50.0000, 2.5000, 0.0000}, {50.0000, 3.1736, 0.5854}, 1.0000},
        {{50.0000, 2.5000, 0.0000}, {50.0000, 3.2972, 0.0000}, 1.0000},
        {{50.0000, 2.5000, 0.0000}, {50.0000, 1.8634, 0.5757}, 1.0000},
        {{50.0000, 2.5000, 0.0000}, {50.0000, 3.2592, 0.3350}, 1.0000},
        {{60.2574, -34.0099, 36.2677}, {60.4626, -34.1751, 39.4387}, 1.2644},
        {{63.0109, -31.0961, -5.8663}, {62.8187, -29.7946, -4.0864}, 1.2630},
        {{61.2901, 3.7196, -5.3901}, {61.4292, 2.2480, -4.9620}, 1.8731},
        {{35.0831, -44.1164, 3.7933}, {35.0232, -40.0716, 1.5901}, 1.8645},
        {{22.7233, 20.0904, -46.6940}, {23.0331, 14.9730, -42.5619}, 2.0373},
        {{36.4612, 47.8580, 18.3852}, {36.2715, 50.5065, 21.2231}, 1.4146},
        {{90.8027, -2.0831, 1.4410}, {91.1528, -1.6435, 0.0447}, 1.4441},
        {{90.9257, -0.5406, -0.9208}, {88.6381, -0.8985, -0.7239}, 1.5381},
        {{6.7747, -0.2908, -2.4247}, {5.8714, -0.0985, -2.2286}, 0.6377},
        {{2.0776, 0.0795, -1.1350}, {0.9033, -0.0636, -0.5514}, 0.9082},
    }};
    return pairs;
}

inline ElementNode make_node(std::string id, NodeKind kind, std::optional<ElementType> type, BBox box,
                             std::optional<LabColor> color, std::vector<std::string> children = {}) {
    ElementNode n;
    n.id = std::move(id);
    n.kind = kind;
    n.element_type = type;
    n.bbox = box;
    n.pixel_area = box.area();
    // Documents store colours as hex, so fixtures live on the sRGB grid.
    if (color) n.color = palettizer::clamp_to_gamut(*color);
    n.children = std::move(children);
    return n;
}

// 100 x 100 canvas, two groups side by side:
//   bg -> g0 -> a0 (rectangle) -> d0 (text)
//      -> g1 -> a1 (circle), d1 (icon)
inline InfographicDoc small_doc() {
    InfographicDoc d;
    d.width = 100;
    d.height = 100;
    d.root = "bg";
    d.vif_type = palettizer::VifType::landscape;
    d.visual_groups = {"g0", "g1"};
    d.nodes = {
        make_node("bg", NodeKind::background, std::nullopt, {0, 0, 100, 100}, LabColor{92, 2, 5}, {"g0", "g1"}),
        make_node("g0", NodeKind::visual_group, std::nullopt, {5, 25, 40, 50}, std::nullopt, {"a0"}),
        make_node("a0", NodeKind::artistic, ElementType::rectangle, {5, 25, 40, 50}, LabColor{50, 40, 20}, {"d0"}),
        make_node("d0", NodeKind::data, ElementType::text, {10, 40, 20, 8}, LabColor{15, 1, 1}),
        make_node("g1", NodeKind::visual_group, std::nullopt, {55, 25, 40, 50}, std::nullopt, {"a1", "d1"}),
        make_node("a1", NodeKind::artistic, ElementType::circle, {55, 25, 30, 30}, LabColor{60, -30, 30}),
        make_node("d1", NodeKind::data, ElementType::icon, {60, 60, 10, 10}, LabColor{20, 0, -10}),
    };
    return d;
}

// Random ordered tree with `n` nodes; node i's parent is drawn among 0..i-1.
inline InfographicDoc random_tree(std::mt19937_64& rng, int n) {
    InfographicDoc d;
    d.width = 1000;
    d.height = 1000;
    d.root = "n0";
    std::vector<std::vector<std::string>> kids(n);
    for (int i = 1; i < n; ++i) {
        const int parent = std::uniform_int_distribution<int>(0, i - 1)(rng);
        kids[parent].push_back("n" + std::to_string(i));
    }
    for (int i = 0; i < n; ++i) {
        d.nodes.push_back(make_node("n" + std::to_string(i), i == 0 ? NodeKind::background : NodeKind::artistic,
                                    i == 0 ? std::nullopt : std::optional(ElementType::square), {0, 0, 1000, 1000},
                                    LabColor{50, 0, 0}, kids[i]));
    }
    return d;
}

// Twelve columns: a 3-way one-hot block, three continuous features and two
// colour slots.
inline std::shared_ptr<const palettizer::FeatureLayout> tiny_layout() {
    auto l = std::make_shared<palettizer::FeatureLayout>();
    l->max_nodes = 0;
    l->names = {"cat_a", "cat_b", "cat_c", "f0", "f1", "f2", "c0_L", "c0_a", "c0_b", "c1_L", "c1_a", "c1_b"};
    l->categorical = {{0, 3}};
    l->color_offset = {6, 9};
    l->colorable_offset = {-1, -1};
    l->left_offset = {-1, -1};
    l->right_offset = {-1, -1};
    l->non_color_width = 6;
    return l;
}

// Vectors on the tiny layout whose colours depend on the features.
inline std::vector<palettizer::FeatureVector> tiny_corpus(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    const auto layout = tiny_layout();
    std::vector<palettizer::FeatureVector> out;
    for (std::size_t i = 0; i < n; ++i) {
        palettizer::FeatureVector v;
        v.layout = layout;
        v.values.assign(12, 0.0);
        v.mask.assign(12, 0);
        v.slot_ids = {"x", "y"};
        const int cat = static_cast<int>(rng() % 4);  // 3 means absent
        if (cat < 3) v.values[cat] = 1.0;
        for (int f = 3; f < 6; ++f) v.values[f] = nd(rng);
        v.set_color(0, {50 + 10 * v.values[3] + nd(rng), 20 * v.values[4], 5.0 * cat});
        v.set_color(1, {60 - 10 * v.values[3], -10 + nd(rng), 15 * v.values[5]});
        out.push_back(std::move(v));
    }
    return out;
}

// Fills hidden colours with uniformly random displayable colours.
class RandomImputer : public palettizer::Imputer {
public:
    std::string name() const override { return "random"; }
    using Imputer::impute;
    std::vector<palettizer::FeatureVector> impute(const palettizer::FeatureVector& request, int n,
                                                  std::uint64_t seed) const override {
        std::mt19937_64 rng(seed);
        std::vector<palettizer::FeatureVector> out;
        for (int i = 0; i < n; ++i) {
            palettizer::FeatureVector v = request;
            for (std::size_t s = 0; s < v.layout->slots(); ++s) {
                if (!v.color_hidden(s)) continue;
                v.set_color(s, palettizer::rgb_to_lab({static_cast<std::uint8_t>(rng()),
                                                       static_cast<std::uint8_t>(rng()),
                                                       static_cast<std::uint8_t>(rng())}));
            }
            out.push_back(std::move(v));
        }
        return out;
    }
};

inline std::string base64_encode(const std::string& in) {
    static const char* table = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    std::size_t i = 0;
    for (; i + 2 < in.size(); i += 3) {
        const unsigned v = (static_cast<unsigned char>(in[i]) << 16) | (static_cast<unsigned char>(in[i + 1]) << 8) |
                           static_cast<unsigned char>(in[i + 2]);
        for (int k = 3; k >= 0; --k) out += table[(v >> (6 * k)) & 63];
    }
    if (i < in.size()) {
        unsigned v = static_cast<unsigned char>(in[i]) << 16;
        if (i + 1 < in.size()) v |= static_cast<unsigned char>(in[i + 1]) << 8;
        out += table[(v >> 18) & 63];
        out += table[(v >> 12) & 63];
        out += i + 1 < in.size() ? table[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

}  // namespace testsupport
