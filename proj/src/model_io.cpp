#include "sgppsl/model_io.hpp"

#include <fstream>

#include <json.hpp>

#include "sgppsl/errors.hpp"

namespace sgppsl {

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd vector_from_json(const json& a) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    return v;
}

// lower triangle, row-major
json cholesky_to_json(const Eigen::MatrixXd& l) {
    json a = json::array();
    for (Eigen::Index r = 0; r < l.rows(); ++r)
        for (Eigen::Index c = 0; c <= r; ++c) a.push_back(l(r, c));
    return a;
}

Eigen::MatrixXd cholesky_from_json(const json& a, Eigen::Index n) {
    if (a.size() != static_cast<std::size_t>(n * (n + 1) / 2))
        throw DataError("model file: Cholesky block size mismatch");
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c <= r; ++c) l(r, c) = a[k++].get<double>();
    return l;
}

}  // namespace

std::string serialize_model(const TrainedModel& model) {
    json doc;
    doc["format_version"] = kModelFormatVersion;
    doc["featurizer"] = {{"dim", model.feat_cfg.dim}, {"window", model.feat_cfg.window}};
    doc["labels"] = model.label_set.labels();
    doc["theta"] = vector_to_json(model.hyper.theta);
    doc["jitter"] = model.hyper.jitter;
    doc["knn"] = model.knn_default;
    doc["tie_rule"] = "lowest-id";

    json seqs = json::array();
    for (const auto& seq : model.train_corpus.sequences) {
        json s;
        json surfaces = json::array(), candidates = json::array();
        for (const auto& tok : seq.tokens) surfaces.push_back(tok.surface);
        for (const auto& cand : seq.candidates) candidates.push_back(cand);
        s["surfaces"] = std::move(surfaces);
        s["candidates"] = std::move(candidates);
        if (seq.has_gold()) s["gold"] = seq.gold;
        seqs.push_back(std::move(s));
    }
    doc["sequences"] = std::move(seqs);

    json mu = json::array(), chol = json::array();
    for (const auto& m : model.state.mu) mu.push_back(vector_to_json(m));
    for (const auto& l : model.state.L) chol.push_back(cholesky_to_json(l));
    doc["mu"] = std::move(mu);
    doc["cholesky"] = std::move(chol);

    json cu = json::array(), ct = json::array();
    for (const auto& c : model.conf.unary) cu.push_back(vector_to_json(c));
    for (const auto& c : model.conf.transition) ct.push_back(vector_to_json(c));
    doc["conf_unary"] = std::move(cu);
    doc["conf_transition"] = std::move(ct);

    return doc.dump(1);
}

TrainedModel deserialize_model(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model file: ") + e.what());
    }
    if (!doc.contains("format_version") || doc["format_version"].get<int>() != kModelFormatVersion)
        throw DataError("model file: unsupported format version");

    TrainedModel model;
    model.feat_cfg.dim = doc["featurizer"]["dim"].get<int>();
    model.feat_cfg.window = doc["featurizer"]["window"].get<int>();
    model.knn_default = doc["knn"].get<int>();

    Corpus corpus;
    for (const auto& name : doc["labels"]) corpus.label_set.add(name.get<std::string>());
    for (const auto& s : doc["sequences"]) {
        PartialSequence seq;
        for (const auto& surface : s["surfaces"]) seq.tokens.push_back(Token{surface, {}});
        for (const auto& cand : s["candidates"])
            seq.candidates.push_back(cand.get<std::vector<int>>());
        if (s.contains("gold")) seq.gold = s["gold"].get<std::vector<int>>();
        if (seq.candidates.size() != seq.tokens.size())
            throw DataError("model file: candidate/token count mismatch");
        corpus.sequences.push_back(std::move(seq));
    }
    corpus = featurize(std::move(corpus), model.feat_cfg);
    model.label_set = corpus.label_set;
    model.train_corpus = corpus;
    model.factor_set = decompose(corpus);

    model.hyper.theta = vector_from_json(doc["theta"]);
    model.hyper.jitter = doc["jitter"].get<double>();
    if (model.hyper.theta.size() != model.label_set.size())
        throw DataError("model file: theta size mismatch");
    model.prior = build_prior(model.factor_set, model.hyper);

    model.state.num_labels = model.label_set.size();
    const auto& mu = doc["mu"];
    const auto& chol = doc["cholesky"];
    if (mu.size() != static_cast<std::size_t>(model.state.num_blocks()) || chol.size() != mu.size())
        throw DataError("model file: block count mismatch");
    for (std::size_t b = 0; b < mu.size(); ++b) {
        Eigen::VectorXd m = vector_from_json(mu[b]);
        Eigen::Index expect = b < static_cast<std::size_t>(model.state.num_labels)
                                  ? model.factor_set.block_size
                                  : model.factor_set.transition_dim();
        if (m.size() != expect) throw DataError("model file: mu block size mismatch");
        model.state.mu.push_back(std::move(m));
        model.state.L.push_back(cholesky_from_json(chol[b], expect));
    }

    for (const auto& c : doc["conf_unary"]) model.conf.unary.push_back(vector_from_json(c));
    for (const auto& c : doc["conf_transition"])
        model.conf.transition.push_back(vector_from_json(c));
    if (model.conf.unary.size() != model.factor_set.unary_pieces.size() ||
        model.conf.transition.size() != model.factor_set.transition_pieces.size())
        throw DataError("model file: confidence table size mismatch");
    return model;
}

void save_model(const TrainedModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open model file for writing: " + path);
    out << serialize_model(model) << '\n';
}

TrainedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(text);
}

}  // namespace sgppsl
