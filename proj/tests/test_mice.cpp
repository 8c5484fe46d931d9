#include "palettizer/errors.hpp"
#include "palettizer/evaluation.hpp"
#include "palettizer/mice.hpp"
#include "palettizer/synth.hpp"
#include "palettizer/vaeac.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace palettizer;

TEST_SUITE("mice") {

TEST_CASE("an all-observed request comes back unchanged") {
    const auto corpus = testsupport::tiny_corpus(100, 1);
    const auto out = mice_impute(corpus, {corpus[3], 2}, 7);
    REQUIRE(out.size() == 2);
    CHECK(out[0] == corpus[3]);
    CHECK(out[1] == corpus[3]);
}

TEST_CASE("observed entries pass through and the result is seed-deterministic") {
    const auto corpus = testsupport::tiny_corpus(200, 2);
    const MiceImputer mice(corpus);
    FeatureVector req = corpus[5];
    req.set_color_hidden(0, true);
    const auto a = mice.impute(req, 4, 99);
    CHECK(a == mice.impute(req, 4, 99));
    CHECK(a != mice.impute(req, 4, 100));
    for (const auto& v : a) {
        CHECK(v.mask == req.mask);
        for (int c = 0; c < req.width(); ++c) {
            if (!req.mask[c]) CHECK(v.values[c] == req.values[c]);
        }
    }
    CHECK(a[0].color(0) != a[1].color(0));
}

TEST_CASE("chained regression recovers a linear colour law") {
    // Colour 1's lightness is 60 - 10 f0; hiding it should give values near the law.
    const auto corpus = testsupport::tiny_corpus(400, 3);
    const MiceImputer mice(corpus);
    double err = 0;
    for (int i = 0; i < 50; ++i) {
        FeatureVector req = corpus[i];
        req.set_color_hidden(1, true);
        const auto out = mice.impute(req, 1, i);
        err += std::abs(out[0].color(1).l - corpus[i].color(1).l);
    }
    CHECK(err / 50 < 5.0);
}

TEST_CASE("MICE is within a factor of two of VAEAC on a linear corpus") {
    const auto all = generate_linear_corpus(600, 4);
    const std::vector<FeatureVector> train(all.begin(), all.begin() + 480), test(all.begin() + 480, all.end());
    VaeacConfig cfg;
    cfg.hidden = 64;
    cfg.latent = 8;
    cfg.epochs = 40;
    const auto model = train_vaeac(train, cfg).first;
    const VaeacImputer vaeac(model, "VAEAC");
    const MiceImputer mice(train);
    EvalProtocolConfig ec;
    ec.replicates_per_item = 2;
    ec.samples_per_replicate = 3;
    const auto table = run_protocol({&vaeac, &mice}, test, column_stddev(train), ec);
    MESSAGE("linear corpus NRMSE: VAEAC " << table.at("VAEAC").nrmse << ", MICE " << table.at("MICE").nrmse);
    CHECK(table.at("MICE").nrmse < 2.0 * table.at("VAEAC").nrmse);
}

TEST_CASE("mean imputer fills training means without snapping") {
    const auto corpus = testsupport::tiny_corpus(100, 5);
    const MeanImputer mean(corpus);
    double l = 0;
    for (const auto& v : corpus) l += v.color(0).l;
    FeatureVector req = corpus[0];
    req.set_color_hidden(0, true);
    const auto out = mean.impute(req, 3, 0);
    REQUIRE(out.size() == 3);
    CHECK(out[0].color(0).l == doctest::Approx(l / 100));
    CHECK(out[0] == out[2]);
    CHECK(out[0].color(1) == req.color(1));
}

TEST_CASE("baselines reject mismatched requests") {
    const auto corpus = testsupport::tiny_corpus(50, 6);
    const MiceImputer mice(corpus);
    FeatureVector req = featurize(testsupport::small_doc());
    CHECK_THROWS_AS(mice.impute(req, 1, 0), InvalidInput);
    CHECK_THROWS_AS(MiceImputer({}), InvalidInput);
}

}
