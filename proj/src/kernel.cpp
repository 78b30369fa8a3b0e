#include "sgppsl/kernel.hpp"

#include <cmath>
#include <string>

#include "sgppsl/errors.hpp"

namespace sgppsl {

double rbf(const Eigen::VectorXd& xi, const Eigen::VectorXd& xj, double theta_y) {
    if (xi.size() != xj.size()) throw DataError("rbf: dimension mismatch");
    return std::exp(-theta_y * (xi - xj).squaredNorm());
}

double transition_cov(std::pair<int, int> pi, std::pair<int, int> pj) {
    return (pi.first == pj.first && pi.second == pj.second) ? 1.0 : 0.0;
}

Eigen::VectorXd PriorCov::solve(int label, const Eigen::VectorXd& rhs) const {
    const auto& b = unary.at(static_cast<std::size_t>(label));
    if (rhs.size() != b.K.rows()) throw DataError("solve: rhs size mismatch");
    return b.llt.solve(rhs);
}

Eigen::MatrixXd PriorCov::solve(int label, const Eigen::MatrixXd& rhs) const {
    const auto& b = unary.at(static_cast<std::size_t>(label));
    if (rhs.rows() != b.K.rows()) throw DataError("solve: rhs shape mismatch");
    return b.llt.solve(rhs);
}

PriorCov build_prior(const FactorSet& fs, const KernelHyper& hyper) {
    if (hyper.theta.size() != fs.num_labels)
        throw ConfigError("theta must carry one entry per label");
    if (hyper.jitter <= 0.0) throw ConfigError("jitter must be positive");
    for (Eigen::Index y = 0; y < hyper.theta.size(); ++y)
        if (!(hyper.theta[y] > 0.0)) throw ConfigError("theta must be positive");

    PriorCov prior;
    prior.transition_dim = fs.transition_dim();
    const int n = fs.block_size;
    Eigen::VectorXd sq = fs.features.rowwise().squaredNorm();
    prior.sq_dist = sq.replicate(1, n) + sq.transpose().replicate(n, 1) -
                    2.0 * (fs.features * fs.features.transpose());
    prior.sq_dist = prior.sq_dist.cwiseMax(0.0);
    prior.sq_dist.diagonal().setZero();

    prior.unary.resize(static_cast<std::size_t>(fs.num_labels));
    for (int y = 0; y < fs.num_labels; ++y) {
        auto& blk = prior.unary[static_cast<std::size_t>(y)];
        Eigen::MatrixXd base = (-hyper.theta[y] * prior.sq_dist).array().exp();
        double jitter = hyper.jitter;
        bool ok = false;
        for (int attempt = 0; attempt <= 3; ++attempt) {
            blk.K = base;
            blk.K.diagonal().array() += jitter;
            blk.llt.compute(blk.K);
            if (blk.llt.info() == Eigen::Success) {
                ok = true;
                break;
            }
            jitter *= 10.0;
        }
        if (!ok)
            throw NumericalError("Cholesky failed for unary block of label " + std::to_string(y));
        blk.jitter_used = jitter;
        blk.log_det = 2.0 * blk.llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        blk.K_inv = blk.llt.solve(Eigen::MatrixXd::Identity(n, n));
    }
    return prior;
}

}  // namespace sgppsl
