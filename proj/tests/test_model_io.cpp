#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "sgppsl/errors.hpp"
#include "sgppsl/model_io.hpp"
#include "sgppsl/predict.hpp"
#include "helpers.hpp"

using namespace sgppsl;

namespace {

TrainedModel trained_fixture() {
    Corpus c = test_helpers::tiny_corpus(3, 3, 3);
    Corpus partial = featurize(synthesize_partial_cl(c, 1, 0.4, 5), FeaturizerConfig{32, 1});
    FactorSet fs = decompose(partial);
    TrainConfig cfg;
    cfg.max_alt = 2;
    cfg.max_outer = 2;
    cfg.max_inner = 20;
    return train(partial, fs, cfg);
}

void check_equal(const TrainedModel& a, const TrainedModel& b) {
    REQUIRE(a.label_set.size() == b.label_set.size());
    for (int y = 0; y < a.label_set.size(); ++y) CHECK(a.label_set.name(y) == b.label_set.name(y));
    CHECK(a.feat_cfg.dim == b.feat_cfg.dim);
    CHECK(a.feat_cfg.window == b.feat_cfg.window);
    CHECK(a.knn_default == b.knn_default);

    // bit-exact numerics
    REQUIRE(a.hyper.theta.size() == b.hyper.theta.size());
    for (Eigen::Index i = 0; i < a.hyper.theta.size(); ++i)
        CHECK(a.hyper.theta[i] == b.hyper.theta[i]);
    CHECK(a.hyper.jitter == b.hyper.jitter);
    REQUIRE(a.state.num_blocks() == b.state.num_blocks());
    for (int blk = 0; blk < a.state.num_blocks(); ++blk) {
        const auto i = static_cast<std::size_t>(blk);
        REQUIRE(a.state.mu[i].size() == b.state.mu[i].size());
        CHECK((a.state.mu[i].array() == b.state.mu[i].array()).all());
        REQUIRE(a.state.L[i].rows() == b.state.L[i].rows());
        CHECK((a.state.L[i].array() == b.state.L[i].array()).all());
    }
    REQUIRE(a.conf.unary.size() == b.conf.unary.size());
    for (std::size_t i = 0; i < a.conf.unary.size(); ++i)
        CHECK((a.conf.unary[i].array() == b.conf.unary[i].array()).all());
    REQUIRE(a.conf.transition.size() == b.conf.transition.size());
    for (std::size_t i = 0; i < a.conf.transition.size(); ++i)
        CHECK((a.conf.transition[i].array() == b.conf.transition[i].array()).all());

    // rebuilt structures
    CHECK(a.factor_set.block_size == b.factor_set.block_size);
    CHECK(a.factor_set.candidate_count() == b.factor_set.candidate_count());
    CHECK((a.factor_set.features.array() == b.factor_set.features.array()).all());
    REQUIRE(a.train_corpus.sequences.size() == b.train_corpus.sequences.size());
    for (std::size_t i = 0; i < a.train_corpus.sequences.size(); ++i) {
        const auto& sa = a.train_corpus.sequences[i];
        const auto& sb = b.train_corpus.sequences[i];
        REQUIRE(sa.size() == sb.size());
        for (std::size_t t = 0; t < sa.size(); ++t) {
            CHECK(sa.tokens[t].surface == sb.tokens[t].surface);
            CHECK(sa.candidates[t] == sb.candidates[t]);
        }
        CHECK(sa.gold == sb.gold);
    }
    for (const auto& blk_a : a.prior.unary) {
        const auto& blk_b = b.prior.unary[static_cast<std::size_t>(&blk_a - a.prior.unary.data())];
        CHECK((blk_a.K.array() == blk_b.K.array()).all());
    }
}

}  // namespace

TEST_CASE("serialize/deserialize round trip is bit exact") {
    TrainedModel model = trained_fixture();
    std::string text = serialize_model(model);
    TrainedModel back = deserialize_model(text);
    check_equal(model, back);
    // serialization is a fixed point
    CHECK(serialize_model(back) == text);
}

TEST_CASE("round trip preserves decoding behavior") {
    TrainedModel model = trained_fixture();
    TrainedModel back = deserialize_model(serialize_model(model));
    std::vector<std::string> surfaces = {"alpha", "bravo", "golf"};
    for (bool weighted : {false, true})
        CHECK(decode_sequence(model, surfaces, weighted, 3) ==
              decode_sequence(back, surfaces, weighted, 3));
}

TEST_CASE("save/load through a file") {
    TrainedModel model = trained_fixture();
    std::string path = "model_io_test.json";
    save_model(model, path);
    TrainedModel back = load_model(path);
    check_equal(model, back);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_model(path), DataError);
}

TEST_CASE("malformed input is rejected") {
    TrainedModel model = trained_fixture();
    CHECK_THROWS_AS(deserialize_model("not json at all"), ParseError);
    CHECK_THROWS_AS(deserialize_model("{}"), DataError);
    std::string text = serialize_model(model);
    auto pos = text.find("\"format_version\"");
    REQUIRE(pos != std::string::npos);
    std::string bumped = text;
    bumped.replace(bumped.find('1', pos), 1, "9");
    CHECK_THROWS_AS(deserialize_model(bumped), DataError);
}
