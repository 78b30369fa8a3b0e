#pragma once

#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "sgppsl/piecewise.hpp"

namespace sgppsl {

struct KernelHyper {
    Eigen::VectorXd theta;  // one positive value per label
    double jitter = 1e-6;
};

// k(x_i, x_j; theta_y) = exp(-theta_y * ||x_i - x_j||^2)
double rbf(const Eigen::VectorXd& xi, const Eigen::VectorXd& xj, double theta_y);

// Indicator covariance over label pairs: 1 iff both components match.
double transition_cov(std::pair<int, int> pi, std::pair<int, int> pj);

// Block-diagonal GP prior: per-label RBF unary blocks (with jitter on the
// diagonal and cached Cholesky factors) and an exact identity transition
// block.
struct PriorCov {
    struct UnaryBlock {
        Eigen::MatrixXd K;               // jittered kernel matrix
        Eigen::LLT<Eigen::MatrixXd> llt;
        Eigen::MatrixXd K_inv;
        double log_det = 0.0;
        double jitter_used = 0.0;
    };

    std::vector<UnaryBlock> unary;
    Eigen::MatrixXd sq_dist;  // pairwise squared feature distances (shared)
    int transition_dim = 0;   // K_T = I of this size

    int num_labels() const { return static_cast<int>(unary.size()); }
    int block_dim() const { return unary.empty() ? 0 : static_cast<int>(unary[0].K.rows()); }

    // K_u(y)^{-1} * rhs via the cached Cholesky factor.
    Eigen::VectorXd solve(int label, const Eigen::VectorXd& rhs) const;
    Eigen::MatrixXd solve(int label, const Eigen::MatrixXd& rhs) const;
};

PriorCov build_prior(const FactorSet& fs, const KernelHyper& hyper);

}  // namespace sgppsl
