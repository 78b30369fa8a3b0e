#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "sgppsl/errors.hpp"
#include "sgppsl/eval.hpp"
#include "helpers.hpp"

using namespace sgppsl;

TEST_CASE("make_folds: partition, balance, determinism") {
    FoldPlan plan = make_folds(23, 5, 3);
    REQUIRE(plan.assignment.size() == 23);
    std::vector<int> sizes(5, 0);
    for (int f : plan.assignment) {
        REQUIRE(f >= 0);
        REQUIRE(f < 5);
        ++sizes[static_cast<std::size_t>(f)];
    }
    CHECK(*std::max_element(sizes.begin(), sizes.end()) -
              *std::min_element(sizes.begin(), sizes.end()) <=
          1);
    CHECK(plan.assignment == make_folds(23, 5, 3).assignment);
    CHECK(plan.assignment != make_folds(23, 5, 4).assignment);

    CHECK_THROWS_AS(make_folds(10, 1, 0), ConfigError);
    CHECK_THROWS_AS(make_folds(3, 5, 0), DataError);
}

TEST_CASE("chunk_f1 cases") {
    using V = std::vector<std::string>;
    SUBCASE("identical labelings") {
        V g = {"B-NP", "I-NP", "O", "B-VP", "I-VP"};
        ChunkScore s = chunk_f1(g, g);
        CHECK(s.precision == 1.0);
        CHECK(s.recall == 1.0);
        CHECK(s.f1 == 1.0);
    }
    SUBCASE("no chunks anywhere") {
        V g = {"O", "O", "O"};
        ChunkScore s = chunk_f1(g, g);
        CHECK(s.precision == 0.0);
        CHECK(s.recall == 0.0);
        CHECK(s.f1 == 0.0);
    }
    SUBCASE("half the chunks recovered") {
        V g = {"B-NP", "I-NP", "O", "B-VP"};
        V p = {"B-NP", "O", "O", "B-VP"};
        // pred B-NP is a length-1 chunk, gold chunk spans 2 tokens: no match
        ChunkScore s = chunk_f1(g, p);
        CHECK(s.precision == doctest::Approx(0.5));
        CHECK(s.recall == doctest::Approx(0.5));
        CHECK(s.f1 == doctest::Approx(0.5));
    }
    SUBCASE("type must match") {
        V g = {"B-NP", "I-NP"};
        V p = {"B-VP", "I-VP"};
        CHECK(chunk_f1(g, p).f1 == 0.0);
    }
    SUBCASE("orphan I does not open a chunk") {
        V g = {"O", "I-NP", "I-NP", "O"};
        V p = {"O", "O", "O", "O"};
        ChunkScore s = chunk_f1(g, p);
        CHECK(s.recall == 0.0);
        CHECK(s.precision == 0.0);
        // and symmetric: an orphan I in pred is not a false positive
        CHECK(chunk_f1(p, g).precision == 0.0);
    }
    SUBCASE("bare labels form single-type chunks") {
        V g = {"B", "I", "O", "B"};
        ChunkScore s = chunk_f1(g, g);
        CHECK(s.f1 == 1.0);
    }
    SUBCASE("length mismatch rejected") {
        CHECK_THROWS_AS(chunk_f1({"O"}, {"O", "O"}), DataError);
    }
}

TEST_CASE("random_disambiguate: singleton passthrough and chance accuracy") {
    SUBCASE("fully supervised corpus is unchanged, accuracy 1") {
        Corpus c = test_helpers::tiny_corpus(3, 3, 3);
        auto [collapsed, acc] = random_disambiguate(c, 7);
        CHECK(acc == 1.0);
        for (std::size_t i = 0; i < c.sequences.size(); ++i)
            CHECK(collapsed.sequences[i].gold == c.sequences[i].gold);
    }
    SUBCASE("collapsed corpus has singleton candidates matching the picks") {
        Corpus c = synthesize_partial_cl(test_helpers::tiny_corpus(6, 4, 4), 2, 0.0, 3);
        auto [collapsed, acc] = random_disambiguate(c, 9);
        for (const auto& seq : collapsed.sequences)
            for (std::size_t t = 0; t < seq.size(); ++t)
                CHECK(seq.candidates[t] == std::vector<int>{seq.gold[t]});
        CHECK(acc >= 0.0);
        CHECK(acc <= 1.0);
    }
    SUBCASE("accuracy concentrates near 1/(cl+1)") {
        Corpus c = synthesize_partial_cl(test_helpers::tiny_corpus(40, 10, 4), 2, 0.0, 3);
        double total = 0.0;
        int runs = 50;
        for (int s = 0; s < runs; ++s) total += random_disambiguate(c, static_cast<std::uint64_t>(s)).second;
        CHECK(total / runs == doctest::Approx(1.0 / 3.0).epsilon(0.06));
    }
    SUBCASE("determinism in the seed") {
        Corpus c = synthesize_partial_cl(test_helpers::tiny_corpus(4, 4, 3), 1, 0.0, 3);
        auto a = random_disambiguate(c, 11);
        auto b = random_disambiguate(c, 11);
        CHECK(a.second == b.second);
        for (std::size_t i = 0; i < a.first.sequences.size(); ++i)
            CHECK(a.first.sequences[i].gold == b.first.sequences[i].gold);
    }
}

namespace {

EvalConfig quick_config() {
    EvalConfig cfg;
    cfg.folds = 2;
    cfg.seeds = {1};
    cfg.feat = FeaturizerConfig{32, 0};
    cfg.train.max_alt = 2;
    cfg.train.max_outer = 1;
    cfg.train.max_inner = 15;
    cfg.knn = 3;
    cfg.task = "unit";
    return cfg;
}

}  // namespace

TEST_CASE("run_experiment: shape, determinism, and the supervised limit") {
    Corpus gold = test_helpers::separable_corpus(8, 3);
    std::vector<GridPoint> grid(1);
    grid[0].mode = GridPoint::Mode::Cl;
    grid[0].cl = 1;
    grid[0].p = 1.0;  // every sequence exactly labeled
    EvalConfig cfg = quick_config();

    auto results = run_experiment(gold, grid, cfg);
    // 1 grid point x 1 seed x 2 folds x 2 decoders
    REQUIRE(results.size() == 4);
    for (const auto& r : results) {
        CHECK(r.task == "unit");
        CHECK(r.setting == "cl");
        CHECK(r.cl_or_r == 1.0);
        CHECK(r.p == 1.0);
        CHECK(r.seed == 1);
        // p = 1 means nothing is ambiguous: recovery is exact
        CHECK(r.recovery_acc == 1.0);
        CHECK(r.token_acc >= 0.0);
        CHECK(r.token_acc <= 1.0);
    }
    std::set<std::pair<int, std::string>> cells;
    for (const auto& r : results) cells.insert({r.fold, r.decoder});
    CHECK(cells.size() == 4);

    auto again = run_experiment(gold, grid, cfg);
    CHECK(results_csv(results) == results_csv(again));
}

TEST_CASE("run_experiment: reference rows and the skip rule") {
    Corpus gold = test_helpers::separable_corpus(6, 3);
    std::vector<GridPoint> grid(2);
    grid[0].mode = GridPoint::Mode::Cl;
    grid[0].cl = 1;
    grid[0].p = 0.5;
    grid[1].mode = GridPoint::Mode::Cl;
    grid[1].cl = 2;  // |Y| = 2, must be skipped
    grid[1].p = 0.5;
    EvalConfig cfg = quick_config();
    cfg.include_reference = true;

    std::vector<std::string> warnings;
    auto results = run_experiment(gold, grid, cfg, &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("cl") != std::string::npos);
    // surviving grid point: 2 folds x (2 decoders + reference)
    REQUIRE(results.size() == 6);
    int refs = 0;
    for (const auto& r : results)
        if (r.decoder == "random_ref") ++refs;
    CHECK(refs == 2);
}

TEST_CASE("flip-mode grid points carry the r setting") {
    Corpus gold = test_helpers::separable_corpus(6, 3);
    std::vector<GridPoint> grid(1);
    grid[0].mode = GridPoint::Mode::Flip;
    grid[0].r = 0.25;
    grid[0].p = 0.0;
    EvalConfig cfg = quick_config();
    auto results = run_experiment(gold, grid, cfg);
    REQUIRE(!results.empty());
    for (const auto& r : results) {
        CHECK(r.setting == "r");
        CHECK(r.cl_or_r == 0.25);
    }
}

TEST_CASE("results_csv format") {
    ExperimentResult r;
    r.task = "np";
    r.setting = "cl";
    r.cl_or_r = 2.0;
    r.p = 0.1;
    r.fold = 3;
    r.decoder = "weighted";
    r.recovery_acc = 0.5;
    r.token_acc = 0.25;
    r.precision = 0.125;
    r.recall = 1.0;
    r.f1 = 0.2222222222222222;
    r.seed = 9;
    std::string csv = results_csv({r});
    auto nl = csv.find('\n');
    CHECK(csv.substr(0, nl) ==
          "task,cl_or_r,p,fold,decoder,recovery_acc,token_acc,precision,recall,f1,seed");
    std::string row = csv.substr(nl + 1);
    CHECK(row.find("np,cl=2,") == 0);
    CHECK(row.find(",3,weighted,") != std::string::npos);
    CHECK(row.find(",9\n") != std::string::npos);

    ExperimentResult fr = r;
    fr.setting = "r";
    fr.cl_or_r = 0.05;
    CHECK(results_csv({fr}).find("np,r=0.05,") != std::string::npos);
}

TEST_CASE("results_summary mentions every decoder present") {
    ExperimentResult a;
    a.decoder = "viterbi";
    a.f1 = 0.5;
    ExperimentResult b = a;
    b.decoder = "weighted";
    std::string s = results_summary({a, b});
    CHECK(s.find("viterbi") != std::string::npos);
    CHECK(s.find("weighted") != std::string::npos);
}
