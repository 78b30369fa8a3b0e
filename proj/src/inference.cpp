#include "sgppsl/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "sgppsl/errors.hpp"

namespace sgppsl {

Eigen::VectorXd VariationalState::v_diag(int block) const {
    return L.at(static_cast<std::size_t>(block)).rowwise().squaredNorm();
}

VariationalState initial_state(const PriorCov& prior) {
    VariationalState st;
    st.num_labels = prior.num_labels();
    const int n = prior.block_dim();
    for (int y = 0; y < st.num_labels; ++y) {
        st.mu.emplace_back(Eigen::VectorXd::Zero(n));
        st.L.emplace_back(prior.unary[static_cast<std::size_t>(y)].llt.matrixL());
    }
    st.mu.emplace_back(Eigen::VectorXd::Zero(prior.transition_dim));
    st.L.emplace_back(Eigen::MatrixXd::Identity(prior.transition_dim, prior.transition_dim));
    return st;
}

double ConfidenceTable::log_sum() const {
    double s = 0.0;
    for (const auto& c : unary) s += c.array().log().sum();
    for (const auto& c : transition) s += c.array().log().sum();
    return s;
}

ConfidenceTable uniform_confidences(const FactorSet& fs) {
    ConfidenceTable conf;
    for (const auto& p : fs.unary_pieces)
        conf.unary.emplace_back(Eigen::VectorXd::Constant(
            static_cast<Eigen::Index>(p.candidates.size()), 1.0 / static_cast<double>(p.candidates.size())));
    for (const auto& p : fs.transition_pieces)
        conf.transition.emplace_back(Eigen::VectorXd::Constant(
            static_cast<Eigen::Index>(p.pair_count()), 1.0 / static_cast<double>(p.pair_count())));
    return conf;
}

namespace {

// a(r, y) = mu_y(r) + V_y(r, r)/2 for every unary row
Eigen::MatrixXd unary_activation(const VariationalState& st, const FactorSet& fs) {
    Eigen::MatrixXd a(fs.block_size, fs.num_labels);
    for (int y = 0; y < fs.num_labels; ++y)
        a.col(y) = st.mu[static_cast<std::size_t>(y)] + 0.5 * st.v_diag(y);
    return a;
}

// b(prev, next) = mu_T(prev,next) + V_T diag / 2
Eigen::MatrixXd transition_activation(const VariationalState& st, const FactorSet& fs) {
    const int ny = fs.num_labels;
    Eigen::VectorXd act = st.mu[static_cast<std::size_t>(st.transition_block())] +
                          0.5 * st.v_diag(st.transition_block());
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                          Eigen::RowMajor>>(act.data(), ny, ny);
}

Eigen::VectorXd row_logsumexp(const Eigen::MatrixXd& a) {
    Eigen::VectorXd out(a.rows());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        double m = a.row(r).maxCoeff();
        out[r] = m + std::log((a.row(r).array() - m).exp().sum());
    }
    return out;
}

Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& a) {
    Eigen::MatrixXd out(a.rows(), a.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        Eigen::ArrayXd e = (a.row(r).array() - a.row(r).maxCoeff()).exp();
        out.row(r) = (e / e.sum()).matrix().transpose();
    }
    return out;
}

double unary_pieces_sum(const VariationalState& st, const FactorSet& fs) {
    Eigen::MatrixXd a = unary_activation(st, fs);
    Eigen::VectorXd lse = row_logsumexp(a);
    double total = 0.0;
    for (const auto& p : fs.unary_pieces) {
        for (int y : p.candidates) total += st.mu[static_cast<std::size_t>(y)][p.row];
        total -= static_cast<double>(p.candidates.size()) * lse[p.row];
    }
    return total;
}

double transition_pieces_sum(const VariationalState& st, const FactorSet& fs) {
    Eigen::MatrixXd b = transition_activation(st, fs);
    Eigen::VectorXd lse = row_logsumexp(b);
    const auto& mu_t = st.mu[static_cast<std::size_t>(st.transition_block())];
    double total = 0.0;
    for (const auto& p : fs.transition_pieces) {
        for (int prev : p.prev_candidates) {
            for (int next : p.next_candidates) total += mu_t[fs.transition_row(prev, next)];
            total -= static_cast<double>(p.next_candidates.size()) * lse[prev];
        }
    }
    return total;
}

double kl_block(const VariationalState& st, const PriorCov& prior, int block) {
    const auto& mu = st.mu[static_cast<std::size_t>(block)];
    const auto& L = st.L[static_cast<std::size_t>(block)];
    double log_det_v = 2.0 * L.diagonal().array().log().sum();
    double d = static_cast<double>(mu.size());
    if (block == st.num_labels) {  // transition block, K = I
        return 0.5 * (-log_det_v + L.squaredNorm() + mu.squaredNorm() - d);
    }
    const auto& blk = prior.unary[static_cast<std::size_t>(block)];
    Eigen::MatrixXd w = blk.llt.matrixL().solve(L);
    double trace = w.squaredNorm();
    double quad = mu.dot(blk.llt.solve(mu));
    return 0.5 * (blk.log_det - log_det_v + trace + quad - d);
}

// per-row candidate multiplicity |S_r| for unary pieces
Eigen::VectorXd unary_multiplicity(const FactorSet& fs) {
    Eigen::VectorXd cnt = Eigen::VectorXd::Zero(fs.block_size);
    for (const auto& p : fs.unary_pieces)
        cnt[p.row] = static_cast<double>(p.candidates.size());
    return cnt;
}

// per-previous-label softmax multiplicity for transition pieces
Eigen::VectorXd transition_multiplicity(const FactorSet& fs) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(fs.num_labels);
    for (const auto& p : fs.transition_pieces)
        for (int prev : p.prev_candidates)
            w[prev] += static_cast<double>(p.next_candidates.size());
    return w;
}

Eigen::VectorXd transition_pair_counts(const FactorSet& fs) {
    Eigen::VectorXd cnt = Eigen::VectorXd::Zero(fs.transition_dim());
    for (const auto& p : fs.transition_pieces)
        for (int prev : p.prev_candidates)
            for (int next : p.next_candidates) cnt[fs.transition_row(prev, next)] += 1.0;
    return cnt;
}

}  // namespace

ConfidenceTable update_confidences(const VariationalState& st, const FactorSet& fs,
                                   double floor) {
    Eigen::MatrixXd a = unary_activation(st, fs);
    Eigen::MatrixXd b = transition_activation(st, fs);
    ConfidenceTable conf;
    auto normalize = [floor](Eigen::VectorXd v) {
        Eigen::ArrayXd e = (v.array() - v.maxCoeff()).exp();
        Eigen::ArrayXd c = e / e.sum();
        c = c.max(floor);
        c /= c.sum();
        return Eigen::VectorXd(c.matrix());
    };
    for (const auto& p : fs.unary_pieces) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(p.candidates.size()));
        for (std::size_t j = 0; j < p.candidates.size(); ++j)
            v[static_cast<Eigen::Index>(j)] = a(p.row, p.candidates[j]);
        conf.unary.push_back(normalize(std::move(v)));
    }
    for (const auto& p : fs.transition_pieces) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(p.pair_count()));
        Eigen::Index k = 0;
        for (int prev : p.prev_candidates)
            for (int next : p.next_candidates) v[k++] = b(prev, next);
        conf.transition.push_back(normalize(std::move(v)));
    }
    return conf;
}

double unary_bound_term(const VariationalState& st, const FactorSet& fs, int piece, int label) {
    const auto& p = fs.unary_pieces.at(static_cast<std::size_t>(piece));
    if (std::find(p.candidates.begin(), p.candidates.end(), label) == p.candidates.end())
        throw DataError("label is not a candidate of this piece");
    Eigen::VectorXd row(fs.num_labels);
    for (int y = 0; y < fs.num_labels; ++y)
        row[y] = st.mu[static_cast<std::size_t>(y)][p.row] +
                 0.5 * st.L[static_cast<std::size_t>(y)].row(p.row).squaredNorm();
    double m = row.maxCoeff();
    double lse = m + std::log((row.array() - m).exp().sum());
    return st.mu[static_cast<std::size_t>(label)][p.row] - lse;
}

double transition_bound_term(const VariationalState& st, const FactorSet& fs, int piece,
                             int prev, int next) {
    const auto& p = fs.transition_pieces.at(static_cast<std::size_t>(piece));
    bool ok = std::find(p.prev_candidates.begin(), p.prev_candidates.end(), prev) !=
                  p.prev_candidates.end() &&
              std::find(p.next_candidates.begin(), p.next_candidates.end(), next) !=
                  p.next_candidates.end();
    if (!ok) throw DataError("pair is not a candidate of this piece");
    const auto& mu_t = st.mu[static_cast<std::size_t>(st.transition_block())];
    const auto& l_t = st.L[static_cast<std::size_t>(st.transition_block())];
    Eigen::VectorXd row(fs.num_labels);
    for (int y = 0; y < fs.num_labels; ++y) {
        int idx = fs.transition_row(prev, y);
        row[y] = mu_t[idx] + 0.5 * l_t.row(idx).squaredNorm();
    }
    double m = row.maxCoeff();
    double lse = m + std::log((row.array() - m).exp().sum());
    return mu_t[fs.transition_row(prev, next)] - lse;
}

double kl_term(const VariationalState& st, const PriorCov& prior) {
    double total = 0.0;
    for (int b = 0; b < st.num_blocks(); ++b) total += kl_block(st, prior, b);
    return total;
}

double elbo_lower_bound(const VariationalState& st, const ConfidenceTable& conf,
                        const FactorSet& fs, const PriorCov& prior) {
    return -kl_term(st, prior) + unary_pieces_sum(st, fs) + transition_pieces_sum(st, fs) +
           conf.log_sum();
}

std::vector<Eigen::VectorXd> grad_mu(const VariationalState& st, const FactorSet& fs,
                                     const PriorCov& prior) {
    std::vector<Eigen::VectorXd> grad;
    Eigen::MatrixXd soft = row_softmax(unary_activation(st, fs));
    Eigen::VectorXd cnt = unary_multiplicity(fs);
    for (int y = 0; y < fs.num_labels; ++y) {
        Eigen::VectorXd g = -prior.solve(y, st.mu[static_cast<std::size_t>(y)]);
        g -= cnt.cwiseProduct(soft.col(y));
        grad.push_back(std::move(g));
    }
    for (const auto& p : fs.unary_pieces)
        for (int y : p.candidates) grad[static_cast<std::size_t>(y)][p.row] += 1.0;

    Eigen::MatrixXd tsoft = row_softmax(transition_activation(st, fs));
    Eigen::VectorXd w = transition_multiplicity(fs);
    Eigen::VectorXd gt = -st.mu[static_cast<std::size_t>(st.transition_block())] +
                         transition_pair_counts(fs);
    for (int a = 0; a < fs.num_labels; ++a)
        for (int b = 0; b < fs.num_labels; ++b) gt[fs.transition_row(a, b)] -= w[a] * tsoft(a, b);
    grad.push_back(std::move(gt));
    return grad;
}

std::vector<Eigen::MatrixXd> grad_cholesky(const VariationalState& st, const FactorSet& fs,
                                           const PriorCov& prior) {
    std::vector<Eigen::MatrixXd> grad;
    Eigen::MatrixXd soft = row_softmax(unary_activation(st, fs));
    Eigen::VectorXd cnt = unary_multiplicity(fs);
    for (int y = 0; y < fs.num_labels; ++y) {
        const auto& L = st.L[static_cast<std::size_t>(y)];
        const int n = static_cast<int>(L.rows());
        Eigen::MatrixXd linv = L.triangularView<Eigen::Lower>().solve(
            Eigen::MatrixXd::Identity(n, n));
        Eigen::MatrixXd g_v = 0.5 * (linv.transpose() * linv -
                                     prior.unary[static_cast<std::size_t>(y)].K_inv);
        g_v.diagonal() -= 0.5 * cnt.cwiseProduct(soft.col(y));
        Eigen::MatrixXd g_l = 2.0 * g_v * L;
        g_l.triangularView<Eigen::StrictlyUpper>().setZero();
        grad.push_back(std::move(g_l));
    }
    {
        const auto& L = st.L[static_cast<std::size_t>(st.transition_block())];
        const int d = static_cast<int>(L.rows());
        Eigen::MatrixXd linv = L.triangularView<Eigen::Lower>().solve(
            Eigen::MatrixXd::Identity(d, d));
        Eigen::MatrixXd g_v = 0.5 * (linv.transpose() * linv -
                                     Eigen::MatrixXd::Identity(d, d));
        Eigen::MatrixXd tsoft = row_softmax(transition_activation(st, fs));
        Eigen::VectorXd w = transition_multiplicity(fs);
        for (int a = 0; a < fs.num_labels; ++a)
            for (int b = 0; b < fs.num_labels; ++b)
                g_v(fs.transition_row(a, b), fs.transition_row(a, b)) -= 0.5 * w[a] * tsoft(a, b);
        Eigen::MatrixXd g_l = 2.0 * g_v * L;
        g_l.triangularView<Eigen::StrictlyUpper>().setZero();
        grad.push_back(std::move(g_l));
    }
    return grad;
}

Eigen::VectorXd grad_theta(const VariationalState& st, const PriorCov& prior,
                           const FactorSet& fs) {
    Eigen::VectorXd g(fs.num_labels);
    for (int y = 0; y < fs.num_labels; ++y) {
        const auto& blk = prior.unary[static_cast<std::size_t>(y)];
        const auto& mu = st.mu[static_cast<std::size_t>(y)];
        const auto& L = st.L[static_cast<std::size_t>(y)];
        Eigen::MatrixXd k_dot = -prior.sq_dist.cwiseProduct(blk.K);
        Eigen::VectorXd alpha = blk.llt.solve(mu);
        double quad = 0.5 * alpha.dot(k_dot * alpha);
        Eigen::MatrixXd m = blk.K_inv * k_dot * blk.K_inv;
        double trace_v = 0.5 * ((m * L).cwiseProduct(L)).sum();
        double trace_k = -0.5 * blk.K_inv.cwiseProduct(k_dot).sum();
        g[y] = quad + trace_v + trace_k;
    }
    return g;
}

namespace {

void require_finite(double x, const char* what) {
    if (!std::isfinite(x))
        throw NumericalError(std::string("non-finite lower bound while evaluating ") + what);
}

double median_sq_dist(const Eigen::MatrixXd& features) {
    const Eigen::Index n = features.rows();
    std::vector<double> d2;
    d2.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            d2.push_back((features.row(i) - features.row(j)).squaredNorm());
    if (d2.empty()) return 0.0;
    auto mid = d2.begin() + static_cast<std::ptrdiff_t>(d2.size() / 2);
    std::nth_element(d2.begin(), mid, d2.end());
    return *mid;
}

// Mutable training context: tracks the blockwise ELBO contributions so a
// line-search trial only recomputes what a block change affects.
class Trainer {
  public:
    Trainer(const FactorSet& fs, KernelHyper hyper, const TrainConfig& cfg)
        : fs_(fs),
          hyper_(std::move(hyper)),
          cfg_(cfg),
          prior_(build_prior(fs, hyper_)),
          state_(initial_state(prior_)),
          conf_(uniform_confidences(fs)) {
        log_c_ = conf_.log_sum();
        const int nb = state_.num_blocks();
        kl_.resize(static_cast<std::size_t>(nb));
        step_mu_.assign(static_cast<std::size_t>(nb), cfg.init_step);
        step_l_.assign(static_cast<std::size_t>(nb), cfg.init_step);
        refresh();
    }

    void run(TrainDiagnostics* diag) {
        double prev_alt_elbo = -std::numeric_limits<double>::infinity();
        int alt = 0;
        for (alt = 1; alt <= cfg_.max_alt; ++alt) {
            conf_ = update_confidences(state_, fs_, cfg_.conf_floor);
            log_c_ = conf_.log_sum();
            // always finish the round on a coordinate-ascent pass so the
            // returned state is stationary under the final prior
            for (int outer = 1; outer <= cfg_.max_outer; ++outer) {
                inner_loop(alt);
                if (outer == cfg_.max_outer || !theta_step(alt)) break;
            }
            double e = elbo();
            require_finite(e, "alternation");
            if (diag) diag->elbo_history.push_back(e);
            if (std::isfinite(prev_alt_elbo) &&
                std::abs(e - prev_alt_elbo) < cfg_.tol_elbo * std::max(1.0, std::abs(prev_alt_elbo)))
                break;
            prev_alt_elbo = e;
        }
        // final confidence refresh so the reported C matches the converged state
        conf_ = update_confidences(state_, fs_, cfg_.conf_floor);
        log_c_ = conf_.log_sum();
        if (diag) {
            diag->final_elbo = elbo();
            diag->min_accepted_delta = min_accepted_delta_;
            diag->alternations = std::min(alt, cfg_.max_alt);
        }
    }

    TrainedModel finish(const Corpus& corpus) {
        TrainedModel model;
        model.label_set = corpus.label_set;
        model.feat_cfg = corpus.feat_cfg;
        model.hyper = hyper_;
        model.train_corpus = corpus;
        model.factor_set = fs_;
        model.prior = std::move(prior_);
        model.state = std::move(state_);
        model.conf = std::move(conf_);
        return model;
    }

  private:
    double elbo() const {
        double total = -std::accumulate(kl_.begin(), kl_.end(), 0.0) + us_ + ts_ + log_c_;
        return total;
    }

    void refresh() {
        for (int b = 0; b < state_.num_blocks(); ++b)
            kl_[static_cast<std::size_t>(b)] = kl_block(state_, prior_, b);
        us_ = unary_pieces_sum(state_, fs_);
        ts_ = transition_pieces_sum(state_, fs_);
        require_finite(elbo(), "refresh");
    }

    void record_accept(double delta) {
        min_accepted_delta_ = std::min(min_accepted_delta_, delta);
    }

    // Backtracking ascent on one block's mean. Returns true when a step
    // was accepted.
    bool step_block_mu(int b, const Eigen::VectorXd& g) {
        double g_norm = g.lpNorm<Eigen::Infinity>();
        if (!(g_norm > 0.0)) return false;
        const auto idx = static_cast<std::size_t>(b);
        double old_elbo = elbo();
        Eigen::VectorXd saved = state_.mu[idx];
        double s = step_mu_[idx];
        for (int trial = 0; trial < 40; ++trial) {
            state_.mu[idx] = saved + s * g;
            double kl_new = kl_block(state_, prior_, b);
            double us_new = (b < fs_.num_labels) ? unary_pieces_sum(state_, fs_) : us_;
            double ts_new = (b == fs_.num_labels) ? transition_pieces_sum(state_, fs_) : ts_;
            double e = -(kl_sum_except(b) + kl_new) + us_new + ts_new + log_c_;
            if (std::isfinite(e) && e > old_elbo) {
                kl_[idx] = kl_new;
                us_ = us_new;
                ts_ = ts_new;
                step_mu_[idx] = std::min(s * 2.0, 1e4);
                record_accept(e - old_elbo);
                return true;
            }
            s *= 0.5;
        }
        state_.mu[idx] = std::move(saved);
        step_mu_[idx] = std::max(s, 1e-12);
        return false;
    }

    bool step_block_l(int b, const Eigen::MatrixXd& g) {
        if (!(g.lpNorm<Eigen::Infinity>() > 0.0)) return false;
        const auto idx = static_cast<std::size_t>(b);
        double old_elbo = elbo();
        Eigen::MatrixXd saved = state_.L[idx];
        double s = step_l_[idx];
        for (int trial = 0; trial < 40; ++trial) {
            Eigen::MatrixXd candidate = saved + s * g;
            if (candidate.diagonal().minCoeff() <= 1e-12) {
                s *= 0.5;
                continue;
            }
            state_.L[idx] = candidate;
            double kl_new = kl_block(state_, prior_, b);
            double us_new = (b < fs_.num_labels) ? unary_pieces_sum(state_, fs_) : us_;
            double ts_new = (b == fs_.num_labels) ? transition_pieces_sum(state_, fs_) : ts_;
            double e = -(kl_sum_except(b) + kl_new) + us_new + ts_new + log_c_;
            if (std::isfinite(e) && e > old_elbo) {
                kl_[idx] = kl_new;
                us_ = us_new;
                ts_ = ts_new;
                step_l_[idx] = std::min(s * 2.0, 1e4);
                record_accept(e - old_elbo);
                return true;
            }
            s *= 0.5;
        }
        state_.L[idx] = std::move(saved);
        step_l_[idx] = std::max(s, 1e-12);
        return false;
    }

    double kl_sum_except(int b) const {
        double total = 0.0;
        for (int i = 0; i < state_.num_blocks(); ++i)
            if (i != b) total += kl_[static_cast<std::size_t>(i)];
        return total;
    }

    void inner_loop(int alt) {
        double prev = elbo();
        for (int sweep = 1; sweep <= cfg_.max_inner; ++sweep) {
            bool any = false;
            auto g_mu = grad_mu(state_, fs_, prior_);
            auto g_l = grad_cholesky(state_, fs_, prior_);
            double g_inf = 0.0;
            for (int b = 0; b < state_.num_blocks(); ++b) {
                const auto idx = static_cast<std::size_t>(b);
                g_inf = std::max(g_inf, g_mu[idx].lpNorm<Eigen::Infinity>());
                // precondition by the prior block: K is near singular when
                // feature rows repeat, and raw gradient steps then collapse
                // under the KL penalty; K*g stays an ascent direction and
                // keeps the quadratic term bounded
                if (b < fs_.num_labels) {
                    const auto& K = prior_.unary[idx].K;
                    if (step_block_mu(b, K * g_mu[idx])) any = true;
                    Eigen::MatrixXd dl =
                        (K * g_l[idx]).triangularView<Eigen::Lower>();
                    if (step_block_l(b, dl)) any = true;
                } else {
                    if (step_block_mu(b, g_mu[idx])) any = true;
                    if (step_block_l(b, g_l[idx])) any = true;
                }
            }
            double e = elbo();
            trace_line("inner", alt, sweep, e, g_inf);
            if (!any) break;
            if (std::abs(e - prev) < cfg_.tol_elbo * std::max(1.0, std::abs(prev))) break;
            prev = e;
        }
    }

    bool theta_step(int alt) {
        Eigen::VectorXd g = grad_theta(state_, prior_, fs_);
        // ascend in log-theta to keep every theta_y positive
        Eigen::VectorXd g_log = hyper_.theta.cwiseProduct(g);
        if (!(g_log.lpNorm<Eigen::Infinity>() > 0.0)) return false;
        double old_elbo = elbo();
        double s = step_theta_;
        for (int trial = 0; trial < 12; ++trial) {
            Eigen::VectorXd theta_try =
                (hyper_.theta.array() * (s * g_log.array()).exp()).cwiseMax(1e-8).cwiseMin(1e8);
            KernelHyper hyper_try{theta_try, hyper_.jitter};
            PriorCov prior_try = build_prior(fs_, hyper_try);
            std::vector<double> kl_try(kl_.size());
            double kl_total = 0.0;
            for (int b = 0; b < state_.num_blocks(); ++b) {
                kl_try[static_cast<std::size_t>(b)] = kl_block(state_, prior_try, b);
                kl_total += kl_try[static_cast<std::size_t>(b)];
            }
            double e = -kl_total + us_ + ts_ + log_c_;
            if (std::isfinite(e) && e > old_elbo) {
                hyper_ = std::move(hyper_try);
                prior_ = std::move(prior_try);
                kl_ = std::move(kl_try);
                step_theta_ = std::min(s * 2.0, 1e3);
                record_accept(e - old_elbo);
                trace_theta(alt, e);
                return true;
            }
            s *= 0.5;
        }
        step_theta_ = std::max(s, 1e-12);
        return false;
    }

    void trace_line(const char* phase, int alt, int iter, double e, double g_inf) {
        if (!cfg_.trace) return;
        std::ostringstream out;
        out.precision(17);
        out << "{\"phase\":\"" << phase << "\",\"alt\":" << alt << ",\"iter\":" << iter
            << ",\"elbo\":" << e << ",\"grad_inf\":" << g_inf << "}";
        (*cfg_.trace) << out.str() << '\n';
    }

    void trace_theta(int alt, double e) {
        if (!cfg_.trace) return;
        std::ostringstream out;
        out.precision(17);
        out << "{\"phase\":\"theta\",\"alt\":" << alt << ",\"elbo\":" << e << ",\"theta\":[";
        for (Eigen::Index y = 0; y < hyper_.theta.size(); ++y) {
            if (y > 0) out << ',';
            out << hyper_.theta[y];
        }
        out << "]}";
        (*cfg_.trace) << out.str() << '\n';
    }

    const FactorSet& fs_;
    KernelHyper hyper_;
    TrainConfig cfg_;
    PriorCov prior_;
    VariationalState state_;
    ConfidenceTable conf_;
    double log_c_ = 0.0;
    std::vector<double> kl_;
    double us_ = 0.0;
    double ts_ = 0.0;
    std::vector<double> step_mu_;
    std::vector<double> step_l_;
    double step_theta_ = 0.1;
    double min_accepted_delta_ = 0.0;
};

}  // namespace

TrainedModel train(const Corpus& corpus, const FactorSet& fs, const TrainConfig& cfg,
                   TrainDiagnostics* diag) {
    if (cfg.max_alt < 1 || cfg.max_inner < 1 || cfg.max_outer < 1)
        throw ConfigError("iteration caps must be >= 1");
    if (!(cfg.tol_elbo > 0.0)) throw ConfigError("tol_elbo must be positive");
    double med = median_sq_dist(fs.features);
    double theta0 = med > 0.0 ? 1.0 / (2.0 * med) : 1.0;
    KernelHyper hyper{Eigen::VectorXd::Constant(fs.num_labels, theta0), 1e-6};
    Trainer trainer(fs, std::move(hyper), cfg);
    trainer.run(diag);
    return trainer.finish(corpus);
}

Recovery recover_ground_truth(const TrainedModel& model) {
    if (!model.train_corpus.all_gold())
        throw DataError("ground-truth recovery requires gold labels");
    Recovery out;
    std::size_t correct_all = 0, correct_amb = 0, total = 0;
    for (std::size_t i = 0; i < model.factor_set.unary_pieces.size(); ++i) {
        const auto& p = model.factor_set.unary_pieces[i];
        const auto& c = model.conf.unary[i];
        Eigen::Index best = 0;
        c.maxCoeff(&best);  // candidates are sorted, so ties resolve to the lowest id
        int predicted = p.candidates[static_cast<std::size_t>(best)];
        out.predicted.push_back(predicted);
        int gold = model.train_corpus.sequences[static_cast<std::size_t>(p.seq_id)]
                       .gold[static_cast<std::size_t>(p.pos)];
        ++total;
        if (predicted == gold) ++correct_all;
        if (p.candidates.size() > 1) {
            ++out.ambiguous_count;
            if (predicted == gold) ++correct_amb;
        }
    }
    out.overall_accuracy = total ? static_cast<double>(correct_all) / static_cast<double>(total) : 1.0;
    out.ambiguous_accuracy = out.ambiguous_count
                                 ? static_cast<double>(correct_amb) /
                                       static_cast<double>(out.ambiguous_count)
                                 : 1.0;
    return out;
}

}  // namespace sgppsl
