// Command-line surface for the SGPPSL sequence labeler: partial-annotation
// synthesis, training, prediction and the cross-validated experiment grid.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sgppsl/errors.hpp"
#include "sgppsl/eval.hpp"
#include "sgppsl/model_io.hpp"
#include "sgppsl/predict.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw sgppsl::DataError("cannot open input file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw sgppsl::DataError("cannot open output file: " + path);
    out << text;
}

sgppsl::Corpus read_corpus(const std::string& path, bool conll, int token_col, int label_col) {
    std::string text = read_file(path);
    return conll ? sgppsl::parse_conll(text, token_col, label_col)
                 : sgppsl::parse_partial(text);
}

int eval_threads() {
    if (const char* env = std::getenv("SGPPSL_THREADS")) {
        int t = std::atoi(env);
        if (t >= 1) return t;
    }
    return 1;
}

struct SynthesizeArgs {
    std::string in, out, mode = "cl";
    int cl = 2;
    double r = 0.05, p = 0.5;
    std::uint64_t seed = 0;
};

struct TrainArgs {
    std::string data, model_out, trace_path;
    bool conll = false;
    int dim = 512, window = 1, max_alt = 10, max_inner = 200, max_outer = 10, knn = 5;
    double tol = 1e-6;
    std::uint64_t seed = 0;
};

struct PredictArgs {
    std::string model_path, in, out, decoder = "weighted";
    int knn = 0;  // 0: use the model default
    bool scores = false;
};

struct EvalArgs {
    std::string data, out_csv, mode = "cl";
    std::vector<int> cl = {2};
    std::vector<double> r, p = {0.5};
    std::vector<std::uint64_t> seeds = {0};
    int folds = 5, dim = 512, window = 1, max_alt = 5, max_inner = 40, max_outer = 2, knn = 5;
    double tol = 1e-6;
    bool reference = false;
    std::string task = "task";
};

int cmd_synthesize(const SynthesizeArgs& args) {
    sgppsl::Corpus corpus = sgppsl::parse_conll(read_file(args.in));
    sgppsl::Corpus partial =
        args.mode == "cl" ? sgppsl::synthesize_partial_cl(corpus, args.cl, args.p, args.seed)
                          : sgppsl::synthesize_partial_flip(corpus, args.r, args.p, args.seed);
    write_file(args.out, sgppsl::write_partial(partial));
    return 0;
}

int cmd_train(const TrainArgs& args) {
    sgppsl::Corpus corpus = read_corpus(args.data, args.conll, 0, 1);
    corpus = sgppsl::featurize(std::move(corpus), sgppsl::FeaturizerConfig{args.dim, args.window});
    sgppsl::FactorSet fs = sgppsl::decompose(corpus);

    sgppsl::TrainConfig cfg;
    cfg.max_alt = args.max_alt;
    cfg.max_inner = args.max_inner;
    cfg.max_outer = args.max_outer;
    cfg.tol_elbo = args.tol;
    cfg.rng_seed = args.seed;
    std::ofstream trace;
    if (!args.trace_path.empty()) {
        trace.open(args.trace_path);
        if (!trace) throw sgppsl::DataError("cannot open trace file: " + args.trace_path);
        cfg.trace = &trace;
    }
    sgppsl::TrainDiagnostics diag;
    sgppsl::TrainedModel model = sgppsl::train(corpus, fs, cfg, &diag);
    model.knn_default = args.knn;
    sgppsl::save_model(model, args.model_out);
    std::cerr << "final lower bound: " << diag.final_elbo << " after " << diag.alternations
              << " alternations\n";
    return 0;
}

int cmd_predict(const PredictArgs& args) {
    sgppsl::TrainedModel model = sgppsl::load_model(args.model_path);
    int knn = args.knn > 0 ? args.knn : model.knn_default;
    bool weighted = args.decoder == "weighted";

    std::string text = read_file(args.in);
    std::ostringstream out;
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> surfaces;
    bool first = true;
    auto flush = [&] {
        if (surfaces.empty()) return;
        if (!first) out << '\n';
        first = false;
        auto path = sgppsl::decode_sequence(model, surfaces, weighted, knn);
        const sgppsl::PredictivePosterior post = args.scores
            ? sgppsl::predictive_posterior(model, sgppsl::featurize_tokens(model, surfaces))
            : sgppsl::PredictivePosterior{};
        Eigen::MatrixXd emission;
        if (args.scores) emission = sgppsl::emission_scores(post);
        for (std::size_t t = 0; t < surfaces.size(); ++t) {
            out << surfaces[t] << '\t' << model.label_set.name(path[t]);
            if (args.scores) out << '\t' << emission.row(static_cast<Eigen::Index>(t)).maxCoeff();
            out << '\n';
        }
        surfaces.clear();
    };
    while (std::getline(in, line)) {
        std::istringstream cols(line);
        std::string tok;
        if (cols >> tok)
            surfaces.push_back(tok);
        else
            flush();
    }
    flush();
    if (args.out.empty())
        std::cout << out.str();
    else
        write_file(args.out, out.str());
    return 0;
}

int cmd_eval(const EvalArgs& args) {
    sgppsl::Corpus corpus = sgppsl::parse_conll(read_file(args.data));
    sgppsl::EvalConfig cfg;
    cfg.folds = args.folds;
    cfg.seeds = args.seeds;
    cfg.feat = sgppsl::FeaturizerConfig{args.dim, args.window};
    cfg.train.max_alt = args.max_alt;
    cfg.train.max_inner = args.max_inner;
    cfg.train.max_outer = args.max_outer;
    cfg.train.tol_elbo = args.tol;
    cfg.knn = args.knn;
    cfg.include_reference = args.reference;
    cfg.threads = eval_threads();
    cfg.task = args.task;

    std::vector<sgppsl::GridPoint> grid;
    if (args.mode == "cl") {
        for (int cl : args.cl)
            for (double p : args.p)
                grid.push_back({sgppsl::GridPoint::Mode::Cl, cl, 0.0, p});
    } else {
        for (double r : args.r)
            for (double p : args.p)
                grid.push_back({sgppsl::GridPoint::Mode::Flip, 0, r, p});
    }
    std::vector<std::string> warnings;
    auto results = sgppsl::run_experiment(corpus, grid, cfg, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    std::string csv = sgppsl::results_csv(results);
    if (args.out_csv.empty())
        std::cout << csv;
    else
        write_file(args.out_csv, csv);
    std::cerr << sgppsl::results_summary(results);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"structured Gaussian Processes for partial sequence labeling"};
    app.require_subcommand(1);

    SynthesizeArgs synth;
    auto* s = app.add_subcommand("synthesize", "generate partial annotations from a CoNLL file");
    s->add_option("--in", synth.in, "CoNLL input file")->required();
    s->add_option("--out", synth.out, "partial-annotation output file")->required();
    s->add_option("--mode", synth.mode, "sampling scheme: cl or flip")
        ->check(CLI::IsMember({"cl", "flip"}));
    s->add_option("--cl", synth.cl, "number of negative candidates per position (cl mode)");
    s->add_option("--r", synth.r, "flip probability (flip mode)");
    s->add_option("--p", synth.p, "fraction of exactly annotated sequences");
    s->add_option("--seed", synth.seed, "random seed");

    TrainArgs train_args;
    auto* t = app.add_subcommand("train", "train a model on partially annotated data");
    t->add_option("data", train_args.data, "training data file")->required();
    t->add_flag("--conll", train_args.conll, "input is CoNLL (fully supervised) instead of partial");
    t->add_option("--model", train_args.model_out, "model output path")->required();
    t->add_option("--dim", train_args.dim, "hashed feature dimension");
    t->add_option("--window", train_args.window, "context window");
    t->add_option("--max-alt", train_args.max_alt, "alternation rounds");
    t->add_option("--max-inner", train_args.max_inner, "inner coordinate-ascent sweeps");
    t->add_option("--max-outer", train_args.max_outer, "inner passes per alternation (theta moves between passes)");
    t->add_option("--tol", train_args.tol, "relative ELBO stopping tolerance");
    t->add_option("--seed", train_args.seed, "random seed");
    t->add_option("--knn", train_args.knn, "default neighbor count stored in the model");
    t->add_option("--trace", train_args.trace_path, "per-iteration trace file (JSON lines)");

    PredictArgs pred;
    auto* pr = app.add_subcommand("predict", "label new sequences with a trained model");
    pr->add_option("model", pred.model_path, "model file")->required();
    pr->add_option("input", pred.in, "input file (first column = tokens)")->required();
    pr->add_option("--out", pred.out, "output file (default stdout)");
    pr->add_option("--decoder", pred.decoder, "viterbi or weighted")
        ->check(CLI::IsMember({"viterbi", "weighted"}));
    pr->add_option("--knn", pred.knn, "neighbor count for the weighted decoder");
    pr->add_flag("--scores", pred.scores, "emit max emission score as a third column");

    EvalArgs eval_args;
    auto* e = app.add_subcommand("eval", "cross-validated experiment grid");
    e->add_option("data", eval_args.data, "gold CoNLL data file")->required();
    e->add_option("--out", eval_args.out_csv, "CSV output file (default stdout)");
    e->add_option("--mode", eval_args.mode, "sampling scheme: cl or flip")
        ->check(CLI::IsMember({"cl", "flip"}));
    e->add_option("--cl", eval_args.cl, "cl grid values");
    e->add_option("--r", eval_args.r, "flip-probability grid values");
    e->add_option("--p", eval_args.p, "exact-fraction grid values");
    e->add_option("--seeds", eval_args.seeds, "random seeds");
    e->add_option("--folds", eval_args.folds, "cross-validation folds");
    e->add_option("--dim", eval_args.dim, "hashed feature dimension");
    e->add_option("--window", eval_args.window, "context window");
    e->add_option("--max-alt", eval_args.max_alt, "alternation rounds");
    e->add_option("--max-inner", eval_args.max_inner, "inner sweeps");
    e->add_option("--max-outer", eval_args.max_outer, "inner passes per alternation (theta moves between passes)");
    e->add_option("--tol", eval_args.tol, "relative ELBO stopping tolerance");
    e->add_option("--knn", eval_args.knn, "neighbor count for the weighted decoder");
    e->add_flag("--reference", eval_args.reference, "add random-disambiguation reference rows");
    e->add_option("--task", eval_args.task, "task name written to the CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        int code = app.exit(err);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*s) return cmd_synthesize(synth);
        if (*t) return cmd_train(train_args);
        if (*pr) return cmd_predict(pred);
        if (*e) return cmd_eval(eval_args);
    } catch (const sgppsl::NumericalError& err) {
        std::cerr << "numerical error: " << err.what() << '\n';
        return kExitNumerical;
    } catch (const sgppsl::ConfigError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitData;
    }
    return 0;
}
