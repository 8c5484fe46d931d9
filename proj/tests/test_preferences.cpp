#include "palettizer/errors.hpp"
#include "palettizer/preferences.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>
#include <set>
#include <tuple>

using namespace palettizer;
using testsupport::small_doc;

namespace {

using testsupport::RandomImputer;

// Always returns the same completion, so every palette after the first is a duplicate.
class ConstantImputer : public Imputer {
public:
    std::string name() const override { return "constant"; }
    using Imputer::impute;
    std::vector<FeatureVector> impute(const FeatureVector& request, int n, std::uint64_t) const override {
        FeatureVector v = request;
        for (std::size_t s = 0; s < v.layout->slots(); ++s) {
            if (v.color_hidden(s)) v.set_color(s, {50, 0, 0});
        }
        return std::vector<FeatureVector>(n, v);
    }
};

const Lexicon& lexicon() {
    static const Lexicon lex = Lexicon::load(PALETTIZER_DATA_DIR "/lexicon.json");
    return lex;
}

std::string reason_of(const PreferenceSet& p) {
    try {
        validate_preferences(p, small_doc());
    } catch (const InvalidPreference& e) {
        return e.reason();
    }
    return "";
}

}  // namespace

TEST_SUITE("preferences") {

TEST_CASE("validation reason codes") {
    PreferenceSet p;
    CHECK(reason_of(p).empty());
    p.exact["nope"] = {50, 0, 0};
    CHECK(reason_of(p) == "unknown_node");
    p = {};
    p.exact["g0"] = {50, 0, 0};
    CHECK(reason_of(p) == "not_colorable");
    p = {};
    p.exact["a0"] = {50, 0, 0};
    p.vague["a0"] = "warm";
    CHECK(reason_of(p) == "duplicate_preference");
    p = {};
    p.bindings = {{"a0", "a1"}, {"a1", "d1"}};
    CHECK(reason_of(p) == "overlapping_bindings");
    p.bindings = {{}};
    CHECK(reason_of(p) == "empty_binding");
    p = {};
    p.exact["d0"] = {90, 0, 0};
    p.exact["d1"] = {20, 0, 0};
    p.bindings = {{"d0", "d1"}};
    CHECK(reason_of(p) == "conflicting_pins");
    p.exact["d1"] = {90, 0, 0};
    CHECK(reason_of(p).empty());
}

TEST_CASE("preference json accepts hex and Lab pins") {
    const auto j = nlohmann::json::parse(R"({"exact": {"d0": "#FFFFFF", "a1": {"L": 50, "a": 10, "b": -5}, "a0": [40, 1, 2]},
        "vague": {"bg": "Light"}, "bindings": [["d0", "d1"]]})");
    const PreferenceSet p = preferences_from_json(j);
    CHECK(p.exact.at("d0").l == doctest::Approx(100.0));
    CHECK(p.exact.at("a1") == LabColor{50, 10, -5});
    CHECK(p.exact.at("a0") == LabColor{40, 1, 2});
    CHECK(p.vague.at("bg") == "light");
    CHECK(p.bindings.size() == 1);
    CHECK(preferences_from_json(to_json(p)) == p);
    CHECK_THROWS_AS(preferences_from_json(nlohmann::json::parse(R"({"exact": {"d0": "white"}})")), InvalidInput);
    CHECK_THROWS_AS(preferences_from_json(nlohmann::json::parse(R"({"bindings": "d0"})")), InvalidInput);
}

TEST_CASE("lexicon covers every category and suggests near words") {
    const Lexicon& lex = lexicon();
    CHECK(lex.size() >= 60);
    std::set<WordCategory> cats;
    for (const auto& [w, e] : lex.entries()) {
        cats.insert(e.category);
        CHECK(!e.colors.empty());
    }
    CHECK(cats.size() == 4);
    CHECK(lex.contains("light"));
    CHECK(lex.nearest("ligth").front() == "light");
    try {
        lex.at("blorp");
        FAIL("expected an unknown word");
    } catch (const UnknownWord& e) {
        CHECK(e.reason() == "unknown_word");
        CHECK(e.word() == "blorp");
        CHECK(e.nearest().size() == 3);
    }
    CHECK(Lexicon::from_json(lex.to_json()).entries().size() == lex.size());
}

TEST_CASE("vague words expand to k variants drawn from the lexicon entry") {
    PreferenceSet p;
    p.vague["bg"] = "light";
    p.exact["d0"] = {20, 0, 0};
    const auto vs = expand_vague(p, lexicon(), 3, 5);
    REQUIRE(vs.size() == 3);
    std::set<std::tuple<double, double, double>> seen;
    const auto& entry = lexicon().at("light").colors;
    for (const auto& v : vs) {
        CHECK(v.concrete());
        CHECK(v.exact.at("d0") == LabColor{20, 0, 0});
        const LabColor c = v.exact.at("bg");
        CHECK(std::find(entry.begin(), entry.end(), c) != entry.end());
        seen.insert({c.l, c.a, c.b});
    }
    CHECK(seen.size() == 3);  // without replacement
    CHECK(expand_vague(p, lexicon(), 3, 5) == vs);
}

TEST_CASE("short entries are drawn with replacement") {
    Lexicon lex({{"mono", {WordCategory::affect, {LabColor{30, 0, 0}}}}});
    PreferenceSet p;
    p.vague["a0"] = "mono";
    const auto vs = expand_vague(p, lex, 3, 1);
    REQUIRE(vs.size() == 3);
    for (const auto& v : vs) CHECK(v.exact.at("a0") == LabColor{30, 0, 0});
}

TEST_CASE("concrete preferences expand to themselves") {
    PreferenceSet p;
    p.exact["a0"] = {40, 0, 0};
    const auto vs = expand_vague(p, lexicon(), 3, 1);
    REQUIRE(vs.size() == 1);
    CHECK(vs[0] == p);
}

TEST_CASE("requests observe pins and hide every other colour") {
    PreferenceSet p;
    p.exact["d0"] = {95, 0, 0};
    const auto req = to_request(small_doc(), p, 4);
    CHECK(req.n_samples == 4);
    const FeatureVector& v = req.vector;
    CHECK_FALSE(v.color_hidden(v.slot_of("d0")));
    CHECK(v.color(v.slot_of("d0")) == LabColor{95, 0, 0});
    CHECK(v.color_hidden(v.slot_of("a0")));
    CHECK_FALSE(v.color_hidden(v.slot_of("g0")));
    for (int c = 0; c < v.layout->non_color_width; ++c) CHECK(v.mask[c] == 0);
}

TEST_CASE("bindings pick members in proportion to area") {
    Palette base;
    base.assignment = {{"x", {10, 0, 0}}, {"y", {90, 0, 0}}, {"z", {50, 40, 0}}};
    const std::map<std::string, long long> areas = {{"x", 300}, {"y", 100}, {"z", 0}};
    const auto out = apply_bindings(std::vector<Palette>(10000, base), {{"x", "y"}}, areas, 3);
    int x_wins = 0;
    for (const auto& p : out) {
        CHECK(p.assignment.at("x") == p.assignment.at("y"));
        CHECK(p.assignment.at("z") == base.assignment.at("z"));
        x_wins += p.assignment.at("x") == base.assignment.at("x");
    }
    CHECK(std::abs(x_wins / 10000.0 - 0.75) < 0.02);

    const std::map<std::string, long long> zero = {{"x", 0}, {"y", 0}};
    const auto uniform = apply_bindings(std::vector<Palette>(10000, base), {{"x", "y"}}, zero, 4);
    x_wins = 0;
    for (const auto& p : uniform) x_wins += p.assignment.at("x") == base.assignment.at("x");
    CHECK(std::abs(x_wins / 10000.0 - 0.5) < 0.02);
}

TEST_CASE("recommend honours pins, words and bindings") {
    PreferenceSet p;
    p.exact["d0"] = rgb_to_lab({255, 255, 255});
    p.exact["d1"] = rgb_to_lab({255, 255, 255});
    p.vague["bg"] = "light";
    p.bindings = {{"a0", "a1"}};
    const RandomImputer model;
    const auto palettes = recommend(small_doc(), p, model, lexicon(), 17);
    REQUIRE(palettes.size() == 5);
    const auto& light = lexicon().at("light").colors;
    for (const auto& pal : palettes) {
        CHECK(pal.assignment.at("d0") == p.exact.at("d0"));
        CHECK(pal.assignment.at("d1") == p.exact.at("d1"));
        CHECK(pal.assignment.at("a0") == pal.assignment.at("a1"));
        CHECK(std::find(light.begin(), light.end(), pal.assignment.at("bg")) != light.end());
        CHECK(pal.request_hash == palettes[0].request_hash);
        CHECK_FALSE(pal.assignment.contains("g0"));
    }
    CHECK(recommend(small_doc(), p, model, lexicon(), 17) == palettes);
}

TEST_CASE("a binding with a pinned member takes the pin") {
    PreferenceSet p;
    p.exact["a0"] = {40, 30, 20};
    p.bindings = {{"a0", "a1", "bg"}};
    const auto palettes = recommend(small_doc(), p, RandomImputer(), lexicon(), 2);
    for (const auto& pal : palettes) {
        CHECK(pal.assignment.at("a1") == LabColor{40, 30, 20});
        CHECK(pal.assignment.at("bg") == LabColor{40, 30, 20});
    }
}

TEST_CASE("recommended palettes are pairwise distinct") {
    RecommendConfig cfg;
    cfg.n = 8;
    const auto palettes = recommend(small_doc(), {}, RandomImputer(), lexicon(), 5, cfg);
    REQUIRE(palettes.size() == 8);
    for (std::size_t i = 0; i < palettes.size(); ++i) {
        CHECK(palettes[i].sample_index == static_cast<int>(i));
        for (std::size_t j = i + 1; j < palettes.size(); ++j)
            CHECK(palette_distance(palettes[i], palettes[j]) >= cfg.duplicate_threshold);
    }
    cfg.n = 1;
    CHECK(recommend(small_doc(), {}, RandomImputer(), lexicon(), 5, cfg).size() == 1);
}

TEST_CASE("a model that cannot vary returns fewer palettes instead of duplicates") {
    const auto palettes = recommend(small_doc(), {}, ConstantImputer(), lexicon(), 1);
    CHECK(palettes.size() == 1);
}

TEST_CASE("recommend rejects unknown words and bad node ids") {
    PreferenceSet p;
    p.vague["bg"] = "blorp";
    CHECK_THROWS_AS(recommend(small_doc(), p, RandomImputer(), lexicon(), 1), UnknownWord);
    p = {};
    p.exact["zz"] = {50, 0, 0};
    CHECK_THROWS_AS(recommend(small_doc(), p, RandomImputer(), lexicon(), 1), InvalidPreference);
}

TEST_CASE("request hash is stable and sensitive to its inputs") {
    PreferenceSet p;
    p.vague["bg"] = "light";
    const std::string h = request_hash(small_doc(), p, 5);
    CHECK(h.size() == 16);
    CHECK(request_hash(small_doc(), p, 5) == h);
    CHECK(request_hash(small_doc(), p, 4) != h);
    p.vague["bg"] = "dark";
    CHECK(request_hash(small_doc(), p, 5) != h);
}

TEST_CASE("palette json round trip") {
    Palette p;
    p.assignment = {{"a0", rgb_to_lab({10, 20, 30})}, {"bg", rgb_to_lab({250, 250, 240})}};
    p.source = PaletteSource::user;
    p.request_hash = "abc";
    p.sample_index = 3;
    const auto j = to_json(p);
    CHECK(j.at("colors").at("a0") == "#0A141E");
    CHECK(palette_from_json(j) == p);
}

}
