#pragma once

// Central finite-difference checks of the ELBO gradients, shared by the
// unit suite and the acceptance suite. The differencing path only uses
// elbo_lower_bound / build_prior, independent of the analytic gradients.

#include <random>

#include "sgppsl/inference.hpp"

namespace fd_check {

struct MaxRelErr {
    double mu = 0.0;
    double chol = 0.0;
    double theta = 0.0;
};

inline double rel_err(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

// Random positive-definite-safe perturbation of the initial state.
inline sgppsl::VariationalState random_state(const sgppsl::PriorCov& prior,
                                             std::uint64_t seed) {
    auto st = sgppsl::initial_state(prior);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 0.3);
    for (auto& mu : st.mu)
        for (Eigen::Index i = 0; i < mu.size(); ++i) mu[i] = normal(rng);
    for (auto& L : st.L) {
        for (Eigen::Index r = 0; r < L.rows(); ++r)
            for (Eigen::Index c = 0; c < r; ++c) L(r, c) += 0.3 * normal(rng);
        for (Eigen::Index r = 0; r < L.rows(); ++r)
            L(r, r) = std::abs(L(r, r)) * (1.0 + 0.2 * std::abs(normal(rng))) + 0.05;
    }
    return st;
}

inline MaxRelErr check_gradients(const sgppsl::FactorSet& fs, const sgppsl::KernelHyper& hyper,
                                 std::uint64_t seed, double h = 1e-5) {
    using namespace sgppsl;
    PriorCov prior = build_prior(fs, hyper);
    VariationalState st = random_state(prior, seed);
    ConfidenceTable conf = uniform_confidences(fs);
    MaxRelErr err;

    auto g_mu = grad_mu(st, fs, prior);
    for (int b = 0; b < st.num_blocks(); ++b) {
        auto& mu = st.mu[static_cast<std::size_t>(b)];
        for (Eigen::Index i = 0; i < mu.size(); ++i) {
            double saved = mu[i];
            mu[i] = saved + h;
            double up = elbo_lower_bound(st, conf, fs, prior);
            mu[i] = saved - h;
            double down = elbo_lower_bound(st, conf, fs, prior);
            mu[i] = saved;
            err.mu = std::max(err.mu, rel_err(g_mu[static_cast<std::size_t>(b)][i],
                                              (up - down) / (2.0 * h)));
        }
    }

    auto g_l = grad_cholesky(st, fs, prior);
    for (int b = 0; b < st.num_blocks(); ++b) {
        auto& L = st.L[static_cast<std::size_t>(b)];
        for (Eigen::Index r = 0; r < L.rows(); ++r)
            for (Eigen::Index c = 0; c <= r; ++c) {
                double saved = L(r, c);
                L(r, c) = saved + h;
                double up = elbo_lower_bound(st, conf, fs, prior);
                L(r, c) = saved - h;
                double down = elbo_lower_bound(st, conf, fs, prior);
                L(r, c) = saved;
                err.chol = std::max(err.chol, rel_err(g_l[static_cast<std::size_t>(b)](r, c),
                                                      (up - down) / (2.0 * h)));
            }
    }

    Eigen::VectorXd g_t = grad_theta(st, prior, fs);
    for (Eigen::Index y = 0; y < hyper.theta.size(); ++y) {
        KernelHyper up_h = hyper, down_h = hyper;
        up_h.theta[y] += h;
        down_h.theta[y] -= h;
        double up = elbo_lower_bound(st, conf, fs, build_prior(fs, up_h));
        double down = elbo_lower_bound(st, conf, fs, build_prior(fs, down_h));
        err.theta = std::max(err.theta, rel_err(g_t[y], (up - down) / (2.0 * h)));
    }
    return err;
}

}  // namespace fd_check
