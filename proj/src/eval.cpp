#include "sgppsl/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "sgppsl/errors.hpp"
#include "sgppsl/predict.hpp"

namespace sgppsl {

FoldPlan make_folds(std::size_t num_sequences, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("fold count must be >= 2");
    if (num_sequences < static_cast<std::size_t>(k))
        throw DataError("fewer sequences than folds");
    std::vector<std::size_t> order(num_sequences);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      0x464f4c44u};
    std::mt19937_64 rng(sseq);
    std::shuffle(order.begin(), order.end(), rng);
    FoldPlan plan;
    plan.k = k;
    plan.assignment.resize(num_sequences);
    for (std::size_t i = 0; i < num_sequences; ++i)
        plan.assignment[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    return plan;
}

namespace {

struct Chunk {
    int begin;
    int end;  // inclusive
    std::string type;
    bool operator==(const Chunk&) const = default;
};

// Maximal B-initiated spans; an I that does not continue a live chunk of
// the same type is ignored.
std::vector<Chunk> extract_chunks(const std::vector<std::string>& labels) {
    std::vector<Chunk> chunks;
    int start = -1;
    std::string type;
    auto close = [&](int end) {
        if (start >= 0) chunks.push_back(Chunk{start, end, type});
        start = -1;
    };
    for (int t = 0; t < static_cast<int>(labels.size()); ++t) {
        const std::string& lab = labels[static_cast<std::size_t>(t)];
        char head = lab.empty() ? 'O' : lab[0];
        std::string tail = lab.size() > 2 && lab[1] == '-' ? lab.substr(2) : "";
        if (head == 'B') {
            close(t - 1);
            start = t;
            type = tail;
        } else if (head == 'I' && start >= 0 && tail == type) {
            // chunk continues
        } else {
            close(t - 1);
        }
    }
    close(static_cast<int>(labels.size()) - 1);
    return chunks;
}

struct ChunkCounts {
    std::size_t matched = 0;
    std::size_t predicted = 0;
    std::size_t gold = 0;

    void add(const std::vector<std::string>& gold_labels,
             const std::vector<std::string>& pred_labels) {
        auto g = extract_chunks(gold_labels);
        auto p = extract_chunks(pred_labels);
        gold += g.size();
        predicted += p.size();
        for (const auto& c : p)
            if (std::find(g.begin(), g.end(), c) != g.end()) ++matched;
    }

    ChunkScore score() const {
        ChunkScore s;
        s.precision = predicted ? static_cast<double>(matched) / static_cast<double>(predicted) : 0.0;
        s.recall = gold ? static_cast<double>(matched) / static_cast<double>(gold) : 0.0;
        s.f1 = (s.precision + s.recall) > 0.0
                   ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                   : 0.0;
        return s;
    }
};

}  // namespace

ChunkScore chunk_f1(const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
    if (gold.size() != pred.size()) throw DataError("chunk_f1: length mismatch");
    ChunkCounts counts;
    counts.add(gold, pred);
    return counts.score();
}

std::pair<Corpus, double> random_disambiguate(const Corpus& corpus, std::uint64_t seed) {
    if (!corpus.all_gold()) throw DataError("random disambiguation requires gold labels");
    std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      0x52414e44u};
    std::mt19937_64 rng(sseq);
    Corpus out = corpus;
    std::size_t ambiguous = 0, correct = 0;
    for (auto& seq : out.sequences) {
        for (std::size_t t = 0; t < seq.size(); ++t) {
            auto& cand = seq.candidates[t];
            std::uniform_int_distribution<std::size_t> d(0, cand.size() - 1);
            int pick = cand[d(rng)];
            if (cand.size() > 1) {
                ++ambiguous;
                if (pick == seq.gold[t]) ++correct;
            }
            cand = {pick};
            seq.gold[t] = pick;  // the pick is treated as gold downstream
        }
    }
    double acc = ambiguous ? static_cast<double>(correct) / static_cast<double>(ambiguous) : 1.0;
    return {std::move(out), acc};
}

namespace {

struct Job {
    GridPoint grid;
    std::uint64_t seed;
    int fold;
};

Corpus subset(const Corpus& corpus, const FoldPlan& plan, int fold, bool held_out) {
    Corpus out;
    out.label_set = corpus.label_set;
    for (std::size_t i = 0; i < corpus.sequences.size(); ++i)
        if ((plan.assignment[i] == fold) == held_out) out.sequences.push_back(corpus.sequences[i]);
    return out;
}

struct DecodeMetrics {
    double token_acc = 0.0;
    ChunkScore chunks;
};

DecodeMetrics score_decoder(const TrainedModel& model, const Corpus& test, bool weighted,
                            int knn) {
    std::size_t correct = 0, total = 0;
    ChunkCounts counts;
    for (const auto& seq : test.sequences) {
        std::vector<std::string> surfaces;
        for (const auto& tok : seq.tokens) surfaces.push_back(tok.surface);
        auto path = decode_sequence(model, surfaces, weighted, knn);
        std::vector<std::string> gold_labels, pred_labels;
        for (std::size_t t = 0; t < seq.size(); ++t) {
            gold_labels.push_back(test.label_set.name(seq.gold[t]));
            pred_labels.push_back(model.label_set.name(path[t]));
            ++total;
            if (model.label_set.name(path[t]) == gold_labels.back()) ++correct;
        }
        counts.add(gold_labels, pred_labels);
    }
    DecodeMetrics m;
    m.token_acc = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    m.chunks = counts.score();
    return m;
}

std::vector<ExperimentResult> run_job(const Corpus& gold_corpus, const Job& job,
                                      const EvalConfig& cfg) {
    Corpus partial = job.grid.mode == GridPoint::Mode::Cl
                         ? synthesize_partial_cl(gold_corpus, job.grid.cl, job.grid.p, job.seed)
                         : synthesize_partial_flip(gold_corpus, job.grid.r, job.grid.p, job.seed);
    FoldPlan plan = make_folds(partial.sequences.size(), cfg.folds, job.seed);

    ExperimentResult base;
    base.task = cfg.task;
    base.setting = job.grid.mode == GridPoint::Mode::Cl ? "cl" : "r";
    base.cl_or_r = job.grid.mode == GridPoint::Mode::Cl ? static_cast<double>(job.grid.cl)
                                                        : job.grid.r;
    base.p = job.grid.p;
    base.fold = job.fold;
    base.seed = job.seed;

    Corpus train_part = featurize(subset(partial, plan, job.fold, false), cfg.feat);
    Corpus test_part = subset(partial, plan, job.fold, true);
    FactorSet fs = decompose(train_part);
    TrainConfig tc = cfg.train;
    tc.rng_seed = job.seed;
    TrainedModel model = train(train_part, fs, tc);
    double recovery = recover_ground_truth(model).ambiguous_accuracy;

    std::vector<ExperimentResult> rows;
    for (bool weighted : {false, true}) {
        DecodeMetrics m = score_decoder(model, test_part, weighted, cfg.knn);
        ExperimentResult row = base;
        row.decoder = weighted ? "weighted" : "viterbi";
        row.recovery_acc = recovery;
        row.token_acc = m.token_acc;
        row.precision = m.chunks.precision;
        row.recall = m.chunks.recall;
        row.f1 = m.chunks.f1;
        rows.push_back(std::move(row));
    }
    if (cfg.include_reference) {
        auto [collapsed, ref_recovery] = random_disambiguate(train_part, job.seed);
        FactorSet ref_fs = decompose(collapsed);
        TrainedModel ref_model = train(collapsed, ref_fs, tc);
        DecodeMetrics m = score_decoder(ref_model, test_part, false, cfg.knn);
        ExperimentResult row = base;
        row.decoder = "random_ref";
        row.recovery_acc = ref_recovery;
        row.token_acc = m.token_acc;
        row.precision = m.chunks.precision;
        row.recall = m.chunks.recall;
        row.f1 = m.chunks.f1;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::vector<ExperimentResult> run_experiment(const Corpus& gold_corpus,
                                             const std::vector<GridPoint>& grid,
                                             const EvalConfig& cfg,
                                             std::vector<std::string>* warnings) {
    if (!gold_corpus.all_gold()) throw DataError("experiment corpus must carry gold labels");
    std::vector<Job> jobs;
    for (const auto& g : grid) {
        if (g.mode == GridPoint::Mode::Cl && g.cl >= gold_corpus.label_set.size()) {
            if (warnings)
                warnings->push_back("skipping grid point cl=" + std::to_string(g.cl) +
                                    " (cl must be < |Y|=" +
                                    std::to_string(gold_corpus.label_set.size()) + ")");
            continue;
        }
        for (auto seed : cfg.seeds)
            for (int fold = 0; fold < cfg.folds; ++fold) jobs.push_back(Job{g, seed, fold});
    }
    std::vector<std::vector<ExperimentResult>> per_job(jobs.size());
    int threads = std::max(1, cfg.threads);
    if (threads == 1) {
        for (std::size_t j = 0; j < jobs.size(); ++j)
            per_job[j] = run_job(gold_corpus, jobs[j], cfg);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t j = static_cast<std::size_t>(t); j < jobs.size();
                     j += static_cast<std::size_t>(threads))
                    per_job[j] = run_job(gold_corpus, jobs[j], cfg);
            });
        for (auto& th : pool) th.join();
    }
    std::vector<ExperimentResult> results;
    for (auto& rows : per_job)
        for (auto& r : rows) results.push_back(std::move(r));
    return results;
}

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

std::string fmt_setting(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

}  // namespace

std::string results_csv(const std::vector<ExperimentResult>& results) {
    std::ostringstream out;
    out << "task,cl_or_r,p,fold,decoder,recovery_acc,token_acc,precision,recall,f1,seed\n";
    for (const auto& r : results) {
        out << r.task << ',' << r.setting << '=' << fmt_setting(r.cl_or_r) << ','
            << fmt_setting(r.p) << ',' << r.fold << ',' << r.decoder << ','
            << fmt(r.recovery_acc) << ',' << fmt(r.token_acc) << ',' << fmt(r.precision) << ','
            << fmt(r.recall) << ',' << fmt(r.f1) << ',' << r.seed << '\n';
    }
    return out.str();
}

std::string results_summary(const std::vector<ExperimentResult>& results) {
    struct Acc {
        double recovery = 0, token = 0, f1 = 0;
        int n = 0;
    };
    std::map<std::string, Acc> groups;
    for (const auto& r : results) {
        std::string key = r.task + " " + r.setting + "=" + fmt_setting(r.cl_or_r) +
                          " p=" + fmt_setting(r.p) + " " + r.decoder;
        auto& a = groups[key];
        a.recovery += r.recovery_acc;
        a.token += r.token_acc;
        a.f1 += r.f1;
        ++a.n;
    }
    std::ostringstream out;
    out << "setting                                   recovery  token_acc  f1\n";
    for (const auto& [key, a] : groups) {
        out << key;
        for (std::size_t i = key.size(); i < 42; ++i) out << ' ';
        out << fmt(a.recovery / a.n) << "  " << fmt(a.token / a.n) << "  " << fmt(a.f1 / a.n)
            << '\n';
    }
    return out.str();
}

}  // namespace sgppsl
