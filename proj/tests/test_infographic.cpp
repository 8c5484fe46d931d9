#include "palettizer/errors.hpp"
#include "palettizer/infographic.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace palettizer;
using testsupport::small_doc;

TEST_SUITE("infographic") {

TEST_CASE("nested set numbers follow the double-visit pre-order") {
    const auto idx = encode_nested_set(small_doc());
    REQUIRE(idx.entries.size() == 7);
    const std::vector<NestedSetEntry> expected = {{"bg", 1, 14}, {"g0", 2, 7},  {"a0", 3, 6}, {"d0", 4, 5},
                                                  {"g1", 8, 13}, {"a1", 9, 10}, {"d1", 11, 12}};
    CHECK(idx.entries == expected);
    CHECK(NestedSetIndex::nests(*idx.find("g0"), *idx.find("d0")));
    CHECK_FALSE(NestedSetIndex::nests(*idx.find("g1"), *idx.find("d0")));
}

TEST_CASE("nested set encoding round-trips on random trees") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 200; ++t) {
        const int n = 1 + static_cast<int>(rng() % 19);
        const InfographicDoc doc = testsupport::random_tree(rng, n);
        CHECK(decode_nested_set(encode_nested_set(doc)) == shape_of(doc));
    }
}

TEST_CASE("decoding rejects indices that are not a tree") {
    NestedSetIndex crossing{{{"r", 1, 8}, {"a", 2, 5}, {"b", 4, 7}}};
    CHECK_THROWS_AS(decode_nested_set(crossing), StructuralError);
    NestedSetIndex two_roots{{{"a", 1, 2}, {"b", 3, 4}}};
    CHECK_THROWS_AS(decode_nested_set(two_roots), StructuralError);
}

TEST_CASE("encoding rejects cycles and dangling children") {
    InfographicDoc doc = small_doc();
    doc.find("d0")->children.push_back("g0");
    CHECK_THROWS_AS(encode_nested_set(doc), StructuralError);
    doc = small_doc();
    doc.find("a1")->children.push_back("ghost");
    CHECK_THROWS_AS(encode_nested_set(doc), StructuralError);
}

TEST_CASE("a valid document has no violations") { CHECK(validate_doc(small_doc()).empty()); }

TEST_CASE("validation reports broken documents") {
    auto has_rule = [](const std::vector<Violation>& v, const std::string& rule) {
        return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.rule == rule; });
    };
    InfographicDoc doc = small_doc();
    doc.find("d0")->bbox = {0, 0, 90, 90};
    CHECK(has_rule(validate_doc(doc), "containment"));

    doc = small_doc();
    doc.find("g0")->color = LabColor{50, 0, 0};
    CHECK(has_rule(validate_doc(doc), "color"));

    doc = small_doc();
    doc.find("a1")->element_type = ElementType::text;
    CHECK(has_rule(validate_doc(doc), "element_type"));

    CHECK(has_rule(validate_doc(small_doc(), 5), "node_count"));
}

TEST_CASE("json round trip preserves the document") {
    const InfographicDoc doc = small_doc();
    CHECK(doc_from_json(to_json(doc)) == doc);
    nlohmann::json j = to_json(doc);
    j["schema"] = "other/9";
    CHECK_THROWS_AS(doc_from_json(j), InvalidInput);
}

TEST_CASE("reading order is top-to-bottom then left-to-right") {
    CHECK(reading_order_less({0, 0, 5, 5}, {0, 10, 5, 5}));
    CHECK(reading_order_less({0, 10, 5, 5}, {10, 10, 5, 5}));
    CHECK_FALSE(reading_order_less({10, 10, 5, 5}, {0, 10, 5, 5}));
}

}
