#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sgppsl/corpus.hpp"
#include "sgppsl/inference.hpp"

namespace sgppsl {

// Seeded k-fold split at sequence granularity; fold sizes differ by <= 1.
struct FoldPlan {
    int k = 0;
    std::vector<int> assignment;  // sequence id -> fold id
};

FoldPlan make_folds(std::size_t num_sequences, int k, std::uint64_t seed);

struct ChunkScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// CoNLL-style chunk matching: chunks are maximal B-initiated spans of one
// type; bare B/I/O labels score as a single chunk type.
ChunkScore chunk_f1(const std::vector<std::string>& gold, const std::vector<std::string>& pred);

struct GridPoint {
    enum class Mode { Cl, Flip };
    Mode mode = Mode::Cl;
    int cl = 2;      // Mode::Cl
    double r = 0.0;  // Mode::Flip
    double p = 0.5;
};

struct EvalConfig {
    int folds = 5;
    std::vector<std::uint64_t> seeds = {0};
    FeaturizerConfig feat;
    TrainConfig train;
    int knn = 5;
    bool include_reference = false;  // random-disambiguation reference rows
    int threads = 1;
    std::string task = "task";
};

struct ExperimentResult {
    std::string task;
    std::string setting;  // "cl" or "r"
    double cl_or_r = 0.0;
    double p = 0.0;
    int fold = 0;
    std::string decoder;  // "viterbi", "weighted" or "random_ref"
    double recovery_acc = 0.0;
    double token_acc = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t seed = 0;
};

// Full protocol: per grid point and seed, synthesize partial annotations,
// run k-fold cross validation, decode the held-out fold with both
// decoders from the same trained model. Grid points with cl >= |Y| are
// skipped (warning to the supplied log, when given).
std::vector<ExperimentResult> run_experiment(const Corpus& gold_corpus,
                                             const std::vector<GridPoint>& grid,
                                             const EvalConfig& cfg,
                                             std::vector<std::string>* warnings = nullptr);

std::string results_csv(const std::vector<ExperimentResult>& results);
std::string results_summary(const std::vector<ExperimentResult>& results);

// Random disambiguation: pick one candidate uniformly per position.
// Returns the collapsed corpus (picks become singleton gold) and the
// recovery accuracy of the picks on ambiguous positions.
std::pair<Corpus, double> random_disambiguate(const Corpus& corpus, std::uint64_t seed);

}  // namespace sgppsl
