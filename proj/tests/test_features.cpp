#include "palettizer/errors.hpp"
#include "palettizer/features.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace palettizer;
using testsupport::small_doc;

namespace {

// Straightforward re-derivation of the encoding, independent of the layout tables.
std::vector<double> reference_features(const InfographicDoc& doc, std::size_t max_nodes) {
    std::vector<double> f(12 + 2, 0.0);
    f[static_cast<int>(doc.vif_type)] = 1;
    f[12] = static_cast<double>(doc.visual_groups.size());
    if (doc.visual_groups.size() > 1) {
        double sum = 0;
        for (std::size_t i = 0; i + 1 < doc.visual_groups.size(); ++i) {
            const BBox a = doc.at(doc.visual_groups[i]).bbox, b = doc.at(doc.visual_groups[i + 1]).bbox;
            sum += std::sqrt(std::pow(a.x + a.w / 2.0 - b.x - b.w / 2.0, 2) + std::pow(a.y + a.h / 2.0 - b.y - b.h / 2.0, 2));
        }
        f[13] = sum / (doc.visual_groups.size() - 1) / std::sqrt(double(doc.width * doc.width + doc.height * doc.height));
    }

    // Pre-order with a counter bumped on entry and exit.
    struct Visit {
        std::string id;
        int left, right;
    };
    std::vector<Visit> order;
    int counter = 0;
    auto walk = [&](auto&& self, const std::string& id) -> void {
        const std::size_t at = order.size();
        order.push_back({id, ++counter, 0});
        for (const auto& c : doc.at(id).children) self(self, c);
        order[at].right = ++counter;
    };
    walk(walk, doc.root);

    std::vector<double> colors(3 * max_nodes, 0.0);
    for (std::size_t s = 0; s < max_nodes; ++s) {
        std::vector<double> slot(12 + 7, 0.0);
        if (s < order.size()) {
            const ElementNode& n = doc.at(order[s].id);
            slot[0] = 1;
            int type = 0;
            if (n.kind == NodeKind::visual_group) type = 1;
            if (n.kind == NodeKind::artistic || n.kind == NodeKind::data) type = 2 + static_cast<int>(*n.element_type);
            slot[1 + type] = 1;
            slot[13] = double(n.bbox.w) / doc.width;
            slot[14] = double(n.bbox.h) / doc.height;
            slot[15] = double(n.pixel_area) / (doc.width * doc.height);
            if (n.kind == NodeKind::visual_group) {
                int count = 0;
                auto descend = [&](auto&& self, const std::string& id) -> void {
                    for (const auto& c : doc.at(id).children) {
                        ++count;
                        self(self, c);
                    }
                };
                descend(descend, n.id);
                slot[16] = count;
            }
            slot[17] = n.colorable() ? 1 : 0;
            slot[18] = order[s].left / (2.0 * max_nodes);
            slot.push_back(order[s].right / (2.0 * max_nodes));
            if (n.colorable()) {
                colors[3 * s] = n.color->l;
                colors[3 * s + 1] = n.color->a;
                colors[3 * s + 2] = n.color->b;
            }
        } else {
            slot.push_back(0.0);
        }
        f.insert(f.end(), slot.begin(), slot.end());
    }
    f.insert(f.end(), colors.begin(), colors.end());
    return f;
}

// Index of the first differing entry, -1 when equal.
long first_mismatch(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return static_cast<long>(std::min(a.size(), b.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return static_cast<long>(i);
    }
    return -1;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("standard layout widths") {
    CHECK(FeatureLayout::standard()->width() == 451);
    CHECK(FeatureLayout::standard(19, false)->width() == 451 - 38);
    CHECK(FeatureLayout::standard()->non_color_width == 451 - 57);
}

TEST_CASE("featurize agrees with the reference encoding") {
    const InfographicDoc doc = small_doc();
    const FeatureVector v = featurize(doc);
    CHECK(first_mismatch(v.values, reference_features(doc, kDefaultMaxNodes)) == -1);
    CHECK(std::all_of(v.mask.begin(), v.mask.end(), [](auto m) { return m == 0; }));
    CHECK(v.slot_ids[0] == "bg");
    CHECK(v.slot_of("d1") == 6);
    CHECK_FALSE(v.colorable(1));  // visual group
    CHECK(v.colorable(2));
}

TEST_CASE("featurize agrees with the reference on random trees") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 50; ++t) {
        const InfographicDoc doc = testsupport::random_tree(rng, 1 + static_cast<int>(rng() % 19));
        CHECK(first_mismatch(featurize(doc).values, reference_features(doc, kDefaultMaxNodes)) == -1);
    }
}

TEST_CASE("group distance is the mean centroid gap over the diagonal") {
    // Group centres at (25, 50) and (75, 50) on a 100 x 100 canvas.
    const FeatureVector v = featurize(small_doc());
    CHECK(v.values[13] == doctest::Approx(50.0 / std::sqrt(2.0 * 100 * 100)));
    CHECK(v.values[13] == doctest::Approx(0.3536).epsilon(1e-3));
    CHECK(v.values[12] == 2.0);
}

TEST_CASE("group_elements counts descendants") {
    const FeatureVector v = featurize(small_doc());
    const auto& names = v.layout->names;
    const auto col = [&](const std::string& n) {
        return static_cast<std::size_t>(std::find(names.begin(), names.end(), n) - names.begin());
    };
    CHECK(v.values[col("s01_group_elements")] == 2.0);  // g0 -> a0 -> d0
    CHECK(v.values[col("s04_group_elements")] == 2.0);  // g1 -> a1, d1
    CHECK(v.values[col("s02_group_elements")] == 0.0);
}

TEST_CASE("oversized documents raise a capacity error") {
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(featurize(testsupport::random_tree(rng, 20)), CapacityError);
    CHECK_NOTHROW(featurize(testsupport::random_tree(rng, 19)));
}

TEST_CASE("strip_spatial drops exactly the tree indices") {
    const FeatureVector v = featurize(small_doc());
    const FeatureVector s = strip_spatial(v);
    CHECK(s.width() == v.width() - 38);
    CHECK_FALSE(s.layout->spatial);
    CHECK_THROWS_AS(strip_spatial(s), InvalidInput);
    std::vector<double> kept;
    for (int c = 0; c < v.width(); ++c) {
        const auto& name = v.layout->names[c];
        if (name.ends_with("_left") || name.ends_with("_right")) continue;
        kept.push_back(v.values[c]);
    }
    CHECK(s.values == kept);
    CHECK(s.color(2) == v.color(2));
}

TEST_CASE("colour accessors and masks") {
    FeatureVector v = featurize(small_doc());
    v.set_color_hidden(2, true);
    CHECK(v.color_hidden(2));
    CHECK_FALSE(v.color_hidden(3));
    v.set_color(3, {1, 2, 3});
    CHECK(v.color(3) == LabColor{1, 2, 3});
}

TEST_CASE("feature vectors and layouts round-trip through json") {
    FeatureVector v = featurize(small_doc());
    v.set_color_hidden(5, true);
    CHECK(feature_vector_from_json(to_json(v)) == v);
    CHECK(*layout_from_json(to_json(*v.layout)) == *v.layout);
}

}
