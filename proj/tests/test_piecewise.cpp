#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "sgppsl/errors.hpp"
#include "sgppsl/piecewise.hpp"
#include "helpers.hpp"

using namespace sgppsl;

namespace {

Corpus featurized(Corpus c) { return featurize(std::move(c), FeaturizerConfig{32, 1}); }

}  // namespace

TEST_CASE("decompose counts match l*m + l^2*(m-1)") {
    Corpus c = test_helpers::tiny_corpus(1, 3, 3);
    Corpus partial = featurized(synthesize_partial_cl(c, 1, 0.0, 5));  // l = 2 everywhere
    FactorSet fs = decompose(partial);
    CHECK(fs.unary_pieces.size() == 3);
    CHECK(fs.transition_pieces.size() == 2);
    CHECK(fs.candidate_count() == 2 * 3 + 4 * 2);
}

TEST_CASE("decompose boundary cases") {
    SUBCASE("single-token sequence") {
        FactorSet fs = decompose(featurized(test_helpers::tiny_corpus(1, 1, 2)));
        CHECK(fs.unary_pieces.size() == 1);
        CHECK(fs.transition_pieces.empty());
    }
    SUBCASE("singleton candidates, m=4") {
        FactorSet fs = decompose(featurized(test_helpers::tiny_corpus(1, 4, 3)));
        CHECK(fs.candidate_count() == 4 + 3);
    }
    SUBCASE("unfeaturized corpus rejected") {
        CHECK_THROWS_AS(decompose(test_helpers::tiny_corpus(1, 2, 2)), DataError);
    }
}

TEST_CASE("candidate count identity across random settings") {
    Corpus c = test_helpers::tiny_corpus(4, 5, 4);
    for (std::uint64_t seed : {0ull, 3ull, 17ull}) {
        for (int cl : {1, 2, 3}) {
            Corpus partial = featurized(synthesize_partial_cl(c, cl, 0.0, seed));
            FactorSet fs = decompose(partial);
            // uniform candidate size l = cl + 1 on every position
            std::size_t l = static_cast<std::size_t>(cl) + 1;
            std::size_t expect = 0;
            for (const auto& seq : partial.sequences)
                expect += l * seq.size() + l * l * (seq.size() - 1);
            CHECK(fs.candidate_count() == expect);
        }
    }
}

TEST_CASE("unary_block_rows: deterministic corpus order, full coverage") {
    Corpus c = featurized(test_helpers::tiny_corpus(2, 3, 3));
    // 5-token variant: 3 + 2
    c.sequences[1].tokens.pop_back();
    c.sequences[1].candidates.pop_back();
    c.sequences[1].gold.pop_back();
    FactorSet fs = decompose(c);
    auto rows = unary_block_rows(fs, 0);
    CHECK(rows == unary_block_rows(fs, 0));
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == std::pair<int, int>{0, 0});
    CHECK(rows[2] == std::pair<int, int>{0, 2});
    CHECK(rows[3] == std::pair<int, int>{1, 0});
    // concatenation over labels covers every (token, label) pair once
    std::set<std::tuple<int, int, int>> seen;
    for (int y = 0; y < fs.num_labels; ++y)
        for (const auto& [s, t] : unary_block_rows(fs, y)) seen.insert({s, t, y});
    CHECK(seen.size() == rows.size() * static_cast<std::size_t>(fs.num_labels));
    CHECK_THROWS_AS(unary_block_rows(fs, fs.num_labels), DataError);
}

TEST_CASE("latent index is injective onto block rows") {
    Corpus c = featurized(test_helpers::tiny_corpus(3, 4, 3));
    FactorSet fs = decompose(c);
    std::set<int> rows;
    for (const auto& per_seq : fs.row_index)
        for (int r : per_seq) rows.insert(r);
    CHECK(static_cast<int>(rows.size()) == fs.block_size);
    CHECK(*rows.begin() == 0);
    CHECK(*rows.rbegin() == fs.block_size - 1);
    // transition index is the prev-major bijection
    std::set<int> trows;
    for (int a = 0; a < fs.num_labels; ++a)
        for (int b = 0; b < fs.num_labels; ++b) trows.insert(fs.transition_row(a, b));
    CHECK(static_cast<int>(trows.size()) == fs.transition_dim());
}
