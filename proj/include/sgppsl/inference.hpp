#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "sgppsl/corpus.hpp"
#include "sgppsl/kernel.hpp"
#include "sgppsl/piecewise.hpp"

namespace sgppsl {

// Block Gaussian q(f) = N(mu, V): |Y| unary blocks followed by one
// transition block of size |Y|^2. V is stored through per-block lower
// Cholesky factors, V_b = L_b L_b^T.
struct VariationalState {
    std::vector<Eigen::VectorXd> mu;
    std::vector<Eigen::MatrixXd> L;
    int num_labels = 0;

    int num_blocks() const { return num_labels + 1; }
    int transition_block() const { return num_labels; }
    // diagonal of V_b, i.e. rowwise squared norms of L_b
    Eigen::VectorXd v_diag(int block) const;
};

// mu = 0, V = K (L = chol(K)); transition block gets mu = 0, L = I.
VariationalState initial_state(const PriorCov& prior);

// Per-piece candidate confidences; each vector is entrywise in [0,1] and
// sums to 1. Transition vectors run prev-major over the candidate pairs.
struct ConfidenceTable {
    std::vector<Eigen::VectorXd> unary;
    std::vector<Eigen::VectorXd> transition;

    double log_sum() const;  // sum of log c over all piece candidates
};

ConfidenceTable uniform_confidences(const FactorSet& fs);

// Softmax of mu + V/2 over each piece's candidates, floored at
// `floor` and renormalized.
ConfidenceTable update_confidences(const VariationalState& state, const FactorSet& fs,
                                   double floor = 1e-4);

// Jensen bound on E_q[log p(y|x,f)] for one candidate of one piece; the
// softmax denominator runs over all labels (second labels at fixed
// previous label for transition pieces).
double unary_bound_term(const VariationalState& state, const FactorSet& fs, int piece,
                        int label);
double transition_bound_term(const VariationalState& state, const FactorSet& fs, int piece,
                             int prev, int next);

// Blockwise closed-form KL(q || prior), always >= 0.
double kl_term(const VariationalState& state, const PriorCov& prior);

// L_l = -KL + sum over pieces/candidates of (bound term + log c).
double elbo_lower_bound(const VariationalState& state, const ConfidenceTable& conf,
                        const FactorSet& fs, const PriorCov& prior);

// Exact gradients of elbo_lower_bound. grad_cholesky maps the V gradient
// through V = L L^T onto the lower-triangular factors.
std::vector<Eigen::VectorXd> grad_mu(const VariationalState& state, const FactorSet& fs,
                                     const PriorCov& prior);
std::vector<Eigen::MatrixXd> grad_cholesky(const VariationalState& state, const FactorSet& fs,
                                           const PriorCov& prior);
Eigen::VectorXd grad_theta(const VariationalState& state, const PriorCov& prior,
                           const FactorSet& fs);

struct TrainConfig {
    int max_alt = 10;     // alternation rounds (confidence <-> parameters)
    int max_outer = 10;   // inner passes per alternation; theta moves between them
    int max_inner = 200;  // coordinate-ascent sweeps per inner loop
    double tol_elbo = 1e-6;
    double init_step = 1.0;
    double conf_floor = 1e-4;
    std::uint64_t rng_seed = 0;
    std::ostream* trace = nullptr;  // optional line-delimited JSON trace
};

struct TrainDiagnostics {
    double final_elbo = 0.0;
    double min_accepted_delta = 0.0;  // most negative accepted ELBO step
    int alternations = 0;
    std::vector<double> elbo_history;
};

struct TrainedModel {
    LabelSet label_set;
    FeaturizerConfig feat_cfg;
    KernelHyper hyper;
    Corpus train_corpus;  // featurized; gold retained in memory when present
    FactorSet factor_set;
    PriorCov prior;
    VariationalState state;
    ConfidenceTable conf;
    int knn_default = 5;
};

// Alternating optimization: confidence update, then coordinate ascent on
// (mu, V) with a theta gradient step and prior rebuild, repeated until
// the relative ELBO change falls under tol_elbo.
TrainedModel train(const Corpus& corpus, const FactorSet& fs, const TrainConfig& cfg,
                   TrainDiagnostics* diag = nullptr);

struct Recovery {
    std::vector<int> predicted;  // argmax-confidence label per unary piece
    double ambiguous_accuracy = 0.0;
    double overall_accuracy = 0.0;
    std::size_t ambiguous_count = 0;
};

// argmax-confidence disambiguation against the retained gold labels;
// ties break toward the lowest label id.
Recovery recover_ground_truth(const TrainedModel& model);

}  // namespace sgppsl
