#include "sgppsl/predict.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "sgppsl/errors.hpp"

namespace sgppsl {

std::vector<Token> featurize_tokens(const TrainedModel& model,
                                    const std::vector<std::string>& surfaces) {
    Corpus tmp;
    PartialSequence seq;
    for (const auto& s : surfaces) {
        seq.tokens.push_back(Token{s, {}});
        seq.candidates.push_back({0});
    }
    tmp.sequences.push_back(std::move(seq));
    tmp = featurize(std::move(tmp), model.feat_cfg);
    return tmp.sequences[0].tokens;
}

namespace {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& a) {
    Eigen::MatrixXd out(a.rows(), a.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        Eigen::ArrayXd e = (a.row(r).array() - a.row(r).maxCoeff()).exp();
        out.row(r) = (e / e.sum()).matrix().transpose();
    }
    return out;
}

}  // namespace

PredictivePosterior predictive_posterior(const TrainedModel& model,
                                         const std::vector<Token>& test_tokens) {
    const auto& fs = model.factor_set;
    const int n = fs.block_size;
    const int m = static_cast<int>(test_tokens.size());
    const int ny = fs.num_labels;
    Eigen::MatrixXd test(m, model.train_corpus.feature_dim);
    for (int j = 0; j < m; ++j) {
        if (test_tokens[static_cast<std::size_t>(j)].features.size() !=
            model.train_corpus.feature_dim)
            throw DataError("test token feature dimension mismatch");
        test.row(j) = test_tokens[static_cast<std::size_t>(j)].features.transpose();
    }
    // squared distances train x test
    Eigen::MatrixXd d2 = fs.features.rowwise().squaredNorm().replicate(1, m) +
                         test.rowwise().squaredNorm().transpose().replicate(n, 1) -
                         2.0 * (fs.features * test.transpose());
    d2 = d2.cwiseMax(0.0);

    PredictivePosterior post;
    post.mu_star.resize(m, ny);
    post.v_star.resize(m, ny);
    for (int y = 0; y < ny; ++y) {
        const auto& blk = model.prior.unary[static_cast<std::size_t>(y)];
        Eigen::MatrixXd k_star = (-model.hyper.theta[y] * d2).array().exp();  // n x m
        Eigen::VectorXd alpha = blk.llt.solve(model.state.mu[static_cast<std::size_t>(y)]);
        post.mu_star.col(y) = k_star.transpose() * alpha;
        Eigen::MatrixXd a = blk.llt.matrixL().solve(k_star);   // L_K^{-1} K_*
        Eigen::MatrixXd b = blk.llt.solve(k_star);             // K^{-1} K_*
        Eigen::MatrixXd c = model.state.L[static_cast<std::size_t>(y)].transpose() * b;
        for (int j = 0; j < m; ++j) {
            double v = 1.0 - a.col(j).squaredNorm() + c.col(j).squaredNorm();
            if (v < 0.0) {
                ++post.clipped;
                v = 0.0;
            }
            post.v_star(j, y) = v;
        }
    }
    int tb = model.state.transition_block();
    post.mu_t = model.state.mu[static_cast<std::size_t>(tb)];
    post.v_t = model.state.v_diag(tb);
    return post;
}

Eigen::MatrixXd emission_scores(const PredictivePosterior& post) {
    return softmax_rows(post.mu_star + 0.5 * post.v_star);
}

Eigen::MatrixXd transition_scores(const TrainedModel& model) {
    const int ny = model.factor_set.num_labels;
    int tb = model.state.transition_block();
    Eigen::VectorXd act = model.state.mu[static_cast<std::size_t>(tb)] +
                          0.5 * model.state.v_diag(tb);
    Eigen::MatrixXd b = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                       Eigen::RowMajor>>(act.data(), ny, ny);
    return softmax_rows(b);
}

ConfidenceFactors confidence_factors(const TrainedModel& model,
                                     const std::vector<Token>& test_tokens, int knn) {
    const auto& fs = model.factor_set;
    const int ny = fs.num_labels;
    const int m = static_cast<int>(test_tokens.size());
    if (knn < 1) throw ConfigError("knn must be >= 1");
    int k = std::min(knn, fs.block_size);  // clamp when the corpus is smaller

    ConfidenceFactors out;
    out.tau_emit = Eigen::MatrixXd::Zero(m, ny);
    for (int j = 0; j < m; ++j) {
        const auto& x = test_tokens[static_cast<std::size_t>(j)].features;
        std::vector<int> order(static_cast<std::size_t>(fs.block_size));
        std::iota(order.begin(), order.end(), 0);
        Eigen::VectorXd dist(fs.block_size);
        for (int r = 0; r < fs.block_size; ++r)
            dist[r] = (fs.features.row(r).transpose() - x).squaredNorm();
        std::partial_sort(order.begin(), order.begin() + k, order.end(),
                          [&](int a, int b) {
                              return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                          });
        std::set<int> neighborhood_labels;
        double mass = 0.0;  // sum over neighbors and labels of c_k(y)
        Eigen::VectorXd in_set = Eigen::VectorXd::Zero(ny);
        for (int i = 0; i < k; ++i) {
            const auto& p = fs.unary_pieces[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
            const auto& c = model.conf.unary[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
            for (std::size_t jj = 0; jj < p.candidates.size(); ++jj) {
                neighborhood_labels.insert(p.candidates[jj]);
                in_set[p.candidates[jj]] += c[static_cast<Eigen::Index>(jj)];
                mass += c[static_cast<Eigen::Index>(jj)];
            }
        }
        // labels seen among neighbors: mean neighbor confidence; unseen
        // labels: averaged total mass, additionally divided by |Y| so it
        // stays below the in-neighborhood confidences
        double fallback = mass / (static_cast<double>(k) * static_cast<double>(ny));
        for (int y = 0; y < ny; ++y) {
            if (neighborhood_labels.count(y))
                out.tau_emit(j, y) = in_set[y] / static_cast<double>(k);
            else
                out.tau_emit(j, y) = fallback;
        }
    }

    out.tau_trans = Eigen::MatrixXd::Zero(ny, ny);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(ny, ny);
    for (std::size_t pi = 0; pi < fs.transition_pieces.size(); ++pi) {
        const auto& p = fs.transition_pieces[pi];
        const auto& c = model.conf.transition[pi];
        Eigen::Index idx = 0;
        for (int prev : p.prev_candidates)
            for (int next : p.next_candidates) {
                out.tau_trans(prev, next) += c[idx++];
                counts(prev, next) += 1.0;
            }
    }
    for (int a = 0; a < ny; ++a)
        for (int b = 0; b < ny; ++b)
            if (counts(a, b) > 0.0) out.tau_trans(a, b) /= counts(a, b);
    return out;
}

namespace {

std::vector<int> viterbi_impl(const Eigen::MatrixXd& emission,
                              const Eigen::MatrixXd& transition,
                              const Eigen::MatrixXd* tau_emit,
                              const Eigen::MatrixXd* tau_trans) {
    const int m = static_cast<int>(emission.rows());
    const int ny = static_cast<int>(emission.cols());
    if (m < 1) throw DataError("viterbi requires at least one position");
    auto emit = [&](int t, int s) {
        return tau_emit ? (*tau_emit)(t, s) * emission(t, s) : emission(t, s);
    };
    auto trans = [&](int a, int b) {
        return tau_trans ? (*tau_trans)(a, b) * transition(a, b) : transition(a, b);
    };
    Eigen::MatrixXd delta(m, ny);
    Eigen::MatrixXi back(m, ny);
    for (int s = 0; s < ny; ++s) delta(0, s) = emit(0, s);
    for (int t = 1; t < m; ++t) {
        for (int s = 0; s < ny; ++s) {
            int best_prev = 0;
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < ny; ++a) {
                double score = delta(t - 1, a) + emit(t, s) + trans(a, s);
                if (score > best) {  // strict: ties keep the lowest previous id
                    best = score;
                    best_prev = a;
                }
            }
            delta(t, s) = best;
            back(t, s) = best_prev;
        }
    }
    int last = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < ny; ++s)
        if (delta(m - 1, s) > best) {
            best = delta(m - 1, s);
            last = s;
        }
    std::vector<int> path(static_cast<std::size_t>(m));
    path[static_cast<std::size_t>(m - 1)] = last;
    for (int t = m - 1; t > 0; --t)
        path[static_cast<std::size_t>(t - 1)] = back(t, path[static_cast<std::size_t>(t)]);
    return path;
}

}  // namespace

std::vector<int> viterbi(const Eigen::MatrixXd& emission, const Eigen::MatrixXd& transition) {
    return viterbi_impl(emission, transition, nullptr, nullptr);
}

std::vector<int> weighted_viterbi(const Eigen::MatrixXd& emission,
                                  const Eigen::MatrixXd& transition,
                                  const ConfidenceFactors& factors) {
    if (factors.tau_emit.rows() != emission.rows() ||
        factors.tau_emit.cols() != emission.cols() ||
        factors.tau_trans.rows() != transition.rows())
        throw DataError("confidence factor shape mismatch");
    return viterbi_impl(emission, transition, &factors.tau_emit, &factors.tau_trans);
}

std::vector<int> decode_sequence(const TrainedModel& model,
                                 const std::vector<std::string>& surfaces, bool weighted,
                                 int knn) {
    auto tokens = featurize_tokens(model, surfaces);
    auto post = predictive_posterior(model, tokens);
    Eigen::MatrixXd emission = emission_scores(post);
    Eigen::MatrixXd transition = transition_scores(model);
    if (!weighted) return viterbi(emission, transition);
    auto factors = confidence_factors(model, tokens, knn);
    return weighted_viterbi(emission, transition, factors);
}

}  // namespace sgppsl
