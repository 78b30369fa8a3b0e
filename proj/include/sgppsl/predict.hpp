#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sgppsl/inference.hpp"

namespace sgppsl {

// Predictive posterior over a test sequence: per-token per-label unary
// means/variances plus the (copied) training transition parameters.
struct PredictivePosterior {
    Eigen::MatrixXd mu_star;  // m x |Y|
    Eigen::MatrixXd v_star;   // m x |Y|, diagonal entries, clipped at 0
    Eigen::VectorXd mu_t;     // |Y|^2, prev-major
    Eigen::VectorXd v_t;      // diag of V_T
    int clipped = 0;          // count of negative variances clipped
};

// Featurize raw test tokens with the model's stored featurizer config.
std::vector<Token> featurize_tokens(const TrainedModel& model,
                                    const std::vector<std::string>& surfaces);

PredictivePosterior predictive_posterior(const TrainedModel& model,
                                         const std::vector<Token>& test_tokens);

// Row-stochastic softmax scores of mu + v/2.
Eigen::MatrixXd emission_scores(const PredictivePosterior& post);
Eigen::MatrixXd transition_scores(const TrainedModel& model);

// KNN-aggregated confidence factors: tau_emit(i, y) from the candidate
// confidences of the K nearest training tokens, tau_trans(a, b) from the
// training transition pieces containing the pair (0 when unseen).
struct ConfidenceFactors {
    Eigen::MatrixXd tau_emit;   // m x |Y|
    Eigen::MatrixXd tau_trans;  // |Y| x |Y|
};

ConfidenceFactors confidence_factors(const TrainedModel& model,
                                     const std::vector<Token>& test_tokens, int knn);

// Standard additive Viterbi over emission + transition scores; ties break
// toward the lowest label id.
std::vector<int> viterbi(const Eigen::MatrixXd& emission, const Eigen::MatrixXd& transition);

// Viterbi with per-step scores tau_emit*emission + tau_trans*transition.
std::vector<int> weighted_viterbi(const Eigen::MatrixXd& emission,
                                  const Eigen::MatrixXd& transition,
                                  const ConfidenceFactors& factors);

// Convenience: full pipeline for one sequence of surfaces.
std::vector<int> decode_sequence(const TrainedModel& model,
                                 const std::vector<std::string>& surfaces, bool weighted,
                                 int knn);

}  // namespace sgppsl
