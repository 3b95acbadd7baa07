#include "hc/vdgmm.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "hc/rng.hpp"

namespace hc {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kVarFloor = 1e-8;
constexpr double kLog2Pi = 1.8378770664093453;

double digamma(double x) {
    // Asymptotic expansion with upward recurrence, accurate to ~1e-12 for x > 0.
    double result = 0.0;
    while (x < 6.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    double inv = 1.0 / x;
    double inv2 = inv * inv;
    result += std::log(x) - 0.5 * inv -
              inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 -
                      inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    return result;
}

double log_wishart_b(double logdet_w, double nu, size_t d) {
    double out = -0.5 * nu * logdet_w - 0.5 * nu * double(d) * std::log(2.0) -
                 0.25 * double(d) * double(d - 1) * std::log(M_PI);
    for (size_t i = 1; i <= d; ++i) out -= std::lgamma(0.5 * (nu + 1.0 - double(i)));
    return out;
}

// Soft one-hot responsibilities from a seeded k-means partition.
MatrixXd init_responsibilities(const Points& pts, uint32_t Kmax, uint64_t seed) {
    uint32_t kinit = std::min<uint32_t>(Kmax, static_cast<uint32_t>(pts.n));
    KMeansResult km = kmeans(pts, kinit, 25, derive_seed(seed, "vdgmm-init"), 1);
    const double hot = 0.95;
    MatrixXd r(pts.n, Kmax);
    double cold = Kmax > 1 ? (1.0 - hot) / double(Kmax - 1) : 0.0;
    r.setConstant(cold);
    for (size_t i = 0; i < pts.n; ++i) r(long(i), km.assignment[i]) = Kmax > 1 ? hot : 1.0;
    return r;
}

struct FullState {
    VectorXd alpha, beta, nu;
    MatrixXd m;                    // K x d
    std::vector<MatrixXd> w;       // scale matrices W_k
    std::vector<double> logdet_w;
    VectorXd log_lambda_tilde;     // E[ln |Lambda_k|]
};

struct DiagState {
    VectorXd alpha, beta;
    MatrixXd m;            // K x d
    VectorXd a;            // gamma shape per component
    MatrixXd b;            // gamma rate, K x d
    MatrixXd e_log_lam;    // K x d
    MatrixXd e_lam;        // K x d
};

}  // namespace

std::vector<uint32_t> VdgmmResult::labels() const {
    size_t n = responsibilities.size() / Kmax;
    std::vector<uint32_t> out(n, 0);
    for (size_t i = 0; i < n; ++i) {
        double best = -1.0;
        for (uint32_t k = 0; k < Kmax; ++k) {
            double r = responsibilities[i * Kmax + k];
            if (r > best) {
                best = r;
                out[i] = k;
            }
        }
    }
    return out;
}

VdgmmResult vdgmm(const Points& points, const VdgmmConfig& cfg) {
    if (points.n < 2) throw TooFewPoints("vdgmm needs n >= 2");
    const size_t n = points.n, d = points.d;
    const uint32_t K = cfg.Kmax;
    if (K < 1) throw Error("vdgmm: Kmax must be >= 1");

    bool diagonal = cfg.force_covariance == 1 ||
                    (cfg.force_covariance < 0 && d >= cfg.diagonal_threshold);

    Eigen::Map<const MatrixXd> xt(points.data.data(), long(d), long(n));
    MatrixXd X = xt.transpose();  // n x d (points are row-major)

    const double alpha0 = cfg.weight_concentration > 0 ? cfg.weight_concentration : 1.0 / K;
    const double beta0 = cfg.mean_precision;
    VectorXd m0 = X.colwise().mean();

    VectorXd var0(d);
    for (size_t j = 0; j < d; ++j) {
        double v = (X.col(long(j)).array() - m0(long(j))).square().sum() / double(n);
        var0(long(j)) = std::max(v, kVarFloor);
    }

    VdgmmResult res;
    res.Kmax = K;
    res.d = d;
    res.covariance = diagonal ? CovarianceType::Diagonal : CovarianceType::Full;

    MatrixXd r = init_responsibilities(points, K, cfg.seed);

    // Full-covariance prior: nu0 = d + 2 and W0 chosen so E[Lambda] matches the
    // inverse of the (floored, diagonalized) data variance.
    const double nu0 = double(d) + 2.0;
    MatrixXd w0_inv = MatrixXd::Zero(long(d), long(d));
    for (size_t j = 0; j < d; ++j) w0_inv(long(j), long(j)) = var0(long(j)) * nu0;
    double logdet_w0 = 0.0;
    for (size_t j = 0; j < d; ++j) logdet_w0 -= std::log(w0_inv(long(j), long(j)));

    // Diagonal prior: Gamma(a0, b0_j) with E[lambda_j] = 1/var_j.
    const double a0 = 1.0;
    VectorXd b0 = var0 * a0;

    FullState fs;
    DiagState ds;

    MatrixXd Nk_xbar(K, long(d)), Sk_diag(K, long(d));
    VectorXd Nk(K);
    std::vector<MatrixXd> Sk_full;
    if (!diagonal) Sk_full.assign(K, MatrixXd::Zero(long(d), long(d)));

    double prev_elbo = -std::numeric_limits<double>::infinity();
    MatrixXd log_rho(long(n), K);

    for (uint32_t iter = 0; iter < cfg.max_iters; ++iter) {
        // --- Statistics from current responsibilities ---
        Nk = r.colwise().sum();
        MatrixXd xbar(K, long(d));
        for (uint32_t k = 0; k < K; ++k) {
            VectorXd s = X.transpose() * r.col(k);
            if (Nk(k) > 1e-12) xbar.row(k) = (s / Nk(k)).transpose();
            else xbar.row(k) = m0.transpose();
        }

        // --- M-step ---
        VectorXd alpha = VectorXd::Constant(K, alpha0) + Nk;
        VectorXd beta = VectorXd::Constant(K, beta0) + Nk;
        MatrixXd m(K, long(d));
        for (uint32_t k = 0; k < K; ++k) {
            m.row(k) = (beta0 * m0.transpose() + Nk(k) * xbar.row(k)) / beta(k);
        }

        if (!diagonal) {
            fs.alpha = alpha;
            fs.beta = beta;
            fs.m = m;
            fs.nu = VectorXd::Constant(K, nu0) + Nk;
            fs.w.assign(K, MatrixXd());
            fs.logdet_w.assign(K, 0.0);
            fs.log_lambda_tilde = VectorXd::Zero(K);
            for (uint32_t k = 0; k < K; ++k) {
                MatrixXd sk = MatrixXd::Zero(long(d), long(d));
                for (size_t i = 0; i < n; ++i) {
                    VectorXd diff = X.row(long(i)).transpose() - xbar.row(k).transpose();
                    sk.noalias() += r(long(i), k) * diff * diff.transpose();
                }
                Sk_full[k] = Nk(k) > 1e-12 ? MatrixXd(sk / Nk(k)) : MatrixXd::Zero(long(d), long(d));
                VectorXd dm = xbar.row(k).transpose() - m0;
                MatrixXd w_inv = w0_inv + sk +
                                 (beta0 * Nk(k) / (beta0 + Nk(k))) * dm * dm.transpose();
                Eigen::LLT<MatrixXd> llt(w_inv);
                if (llt.info() != Eigen::Success) {
                    res.singular_warning = true;
                    w_inv += kVarFloor * MatrixXd::Identity(long(d), long(d));
                    llt.compute(w_inv);
                }
                fs.w[k] = llt.solve(MatrixXd::Identity(long(d), long(d)));
                double logdet_winv = 0.0;
                for (size_t j = 0; j < d; ++j)
                    logdet_winv += 2.0 * std::log(llt.matrixL()(long(j), long(j)));
                fs.logdet_w[k] = -logdet_winv;
                double lt = double(d) * std::log(2.0) + fs.logdet_w[k];
                for (size_t j = 1; j <= d; ++j) lt += digamma(0.5 * (fs.nu(k) + 1.0 - double(j)));
                fs.log_lambda_tilde(k) = lt;
            }
        } else {
            ds.alpha = alpha;
            ds.beta = beta;
            ds.m = m;
            ds.a = VectorXd::Constant(K, a0) + 0.5 * Nk;
            ds.b = MatrixXd(K, long(d));
            ds.e_log_lam = MatrixXd(K, long(d));
            ds.e_lam = MatrixXd(K, long(d));
            for (uint32_t k = 0; k < K; ++k) {
                VectorXd sk = VectorXd::Zero(long(d));
                for (size_t i = 0; i < n; ++i) {
                    VectorXd diff = X.row(long(i)).transpose() - xbar.row(k).transpose();
                    sk += r(long(i), k) * diff.cwiseProduct(diff);
                }
                Sk_diag.row(k) = (Nk(k) > 1e-12 ? VectorXd(sk / Nk(k)) : VectorXd::Zero(long(d))).transpose();
                VectorXd dm = xbar.row(k).transpose() - m0;
                for (size_t j = 0; j < d; ++j) {
                    double b = b0(long(j)) + 0.5 * (sk(long(j)) +
                               (beta0 * Nk(k) / (beta0 + Nk(k))) * dm(long(j)) * dm(long(j)));
                    if (b < kVarFloor) {
                        b = kVarFloor;
                        res.singular_warning = true;
                    }
                    ds.b(k, long(j)) = b;
                    ds.e_log_lam(k, long(j)) = digamma(ds.a(k)) - std::log(b);
                    ds.e_lam(k, long(j)) = ds.a(k) / b;
                }
            }
        }

        // --- E-step ---
        double alpha_hat = alpha.sum();
        VectorXd log_pi_tilde(K);
        for (uint32_t k = 0; k < K; ++k) log_pi_tilde(k) = digamma(alpha(k)) - digamma(alpha_hat);

        for (uint32_t k = 0; k < K; ++k) {
            if (!diagonal) {
                for (size_t i = 0; i < n; ++i) {
                    VectorXd diff = X.row(long(i)).transpose() - fs.m.row(k).transpose();
                    double quad = double(d) / fs.beta(k) + fs.nu(k) * diff.dot(fs.w[k] * diff);
                    log_rho(long(i), k) = log_pi_tilde(k) + 0.5 * fs.log_lambda_tilde(k) -
                                          0.5 * double(d) * kLog2Pi - 0.5 * quad;
                }
            } else {
                for (size_t i = 0; i < n; ++i) {
                    double quad = double(d) / ds.beta(k);
                    double loglam = 0.0;
                    for (size_t j = 0; j < d; ++j) {
                        double diff = X(long(i), long(j)) - ds.m(k, long(j));
                        quad += ds.e_lam(k, long(j)) * diff * diff;
                        loglam += ds.e_log_lam(k, long(j));
                    }
                    log_rho(long(i), k) = log_pi_tilde(k) + 0.5 * loglam -
                                          0.5 * double(d) * kLog2Pi - 0.5 * quad;
                }
            }
        }
        for (size_t i = 0; i < n; ++i) {
            double mx = log_rho.row(long(i)).maxCoeff();
            VectorXd e = (log_rho.row(long(i)).array() - mx).exp();
            r.row(long(i)) = e.transpose() / e.sum();
        }

        // --- ELBO with the fresh responsibilities ---
        Nk = r.colwise().sum();
        MatrixXd xbar2(K, long(d));
        for (uint32_t k = 0; k < K; ++k) {
            VectorXd s = X.transpose() * r.col(k);
            if (Nk(k) > 1e-12) xbar2.row(k) = (s / Nk(k)).transpose();
            else xbar2.row(k) = m0.transpose();
        }

        double elbo = 0.0;
        // E[ln p(Z|pi)] - E[ln q(Z)] + E[ln p(pi)] - E[ln q(pi)]
        for (size_t i = 0; i < n; ++i) {
            for (uint32_t k = 0; k < K; ++k) {
                double rv = r(long(i), k);
                if (rv > 1e-300) elbo += rv * (log_pi_tilde(k) - std::log(rv));
            }
        }
        elbo += std::lgamma(K * alpha0) - K * std::lgamma(alpha0) +
                (alpha0 - 1.0) * log_pi_tilde.sum();
        double log_c_alpha = std::lgamma(alpha.sum());
        for (uint32_t k = 0; k < K; ++k) log_c_alpha -= std::lgamma(alpha(k));
        double q_pi = log_c_alpha;
        for (uint32_t k = 0; k < K; ++k) q_pi += (alpha(k) - 1.0) * log_pi_tilde(k);
        elbo -= q_pi;

        if (!diagonal) {
            for (uint32_t k = 0; k < K; ++k) {
                // Recompute S_k and x̄ against fresh r for the likelihood term.
                MatrixXd sk = MatrixXd::Zero(long(d), long(d));
                for (size_t i = 0; i < n; ++i) {
                    VectorXd diff = X.row(long(i)).transpose() - xbar2.row(k).transpose();
                    sk.noalias() += r(long(i), k) * diff * diff.transpose();
                }
                VectorXd dxm = xbar2.row(k).transpose() - fs.m.row(k).transpose();
                double tr_sw = (sk * fs.w[k]).trace();
                elbo += 0.5 * (Nk(k) * (fs.log_lambda_tilde(k) - double(d) / fs.beta(k) -
                                        double(d) * kLog2Pi) -
                               fs.nu(k) * tr_sw -
                               Nk(k) * fs.nu(k) * dxm.dot(fs.w[k] * dxm));

                // E[ln p(mu,Lambda)]
                VectorXd dmm = fs.m.row(k).transpose() - m0;
                elbo += 0.5 * (double(d) * std::log(beta0 / (2.0 * M_PI)) +
                               fs.log_lambda_tilde(k) - double(d) * beta0 / fs.beta(k) -
                               beta0 * fs.nu(k) * dmm.dot(fs.w[k] * dmm));
                elbo += log_wishart_b(logdet_w0, nu0, d) +
                        0.5 * (nu0 - double(d) - 1.0) * fs.log_lambda_tilde(k) -
                        0.5 * fs.nu(k) * (w0_inv * fs.w[k]).trace();

                // -E[ln q(mu,Lambda)]
                double h_wishart = -log_wishart_b(fs.logdet_w[k], fs.nu(k), d) -
                                   0.5 * (fs.nu(k) - double(d) - 1.0) * fs.log_lambda_tilde(k) +
                                   0.5 * fs.nu(k) * double(d);
                elbo -= 0.5 * fs.log_lambda_tilde(k) +
                        0.5 * double(d) * std::log(fs.beta(k) / (2.0 * M_PI)) -
                        0.5 * double(d) - h_wishart;
            }
        } else {
            for (uint32_t k = 0; k < K; ++k) {
                VectorXd sk = VectorXd::Zero(long(d));
                for (size_t i = 0; i < n; ++i) {
                    VectorXd diff = X.row(long(i)).transpose() - xbar2.row(k).transpose();
                    sk += r(long(i), k) * diff.cwiseProduct(diff);
                }
                for (size_t j = 0; j < d; ++j) {
                    double elog = ds.e_log_lam(k, long(j));
                    double elam = ds.e_lam(k, long(j));
                    double dxm = xbar2(k, long(j)) - ds.m(k, long(j));
                    // E[ln p(X|Z,mu,lambda)]
                    elbo += 0.5 * (Nk(k) * (elog - kLog2Pi - 1.0 / ds.beta(k)) -
                                   elam * (sk(long(j)) + Nk(k) * dxm * dxm));
                    // E[ln p(mu,lambda)]
                    double dmm = ds.m(k, long(j)) - m0(long(j));
                    elbo += 0.5 * (std::log(beta0 / (2.0 * M_PI)) + elog -
                                   beta0 / ds.beta(k) - beta0 * elam * dmm * dmm);
                    elbo += a0 * std::log(b0(long(j))) - std::lgamma(a0) + (a0 - 1.0) * elog -
                            b0(long(j)) * elam;
                    // -E[ln q(mu,lambda)]
                    double h_gamma = ds.a(k) - std::log(ds.b(k, long(j))) +
                                     std::lgamma(ds.a(k)) + (1.0 - ds.a(k)) * digamma(ds.a(k));
                    elbo -= 0.5 * (elog + std::log(ds.beta(k) / (2.0 * M_PI)) - 1.0) - h_gamma;
                }
            }
        }

        res.elbo_trace.push_back(elbo);
        res.iterations = iter + 1;
        if (iter > 0 && elbo - prev_elbo < cfg.tol && elbo >= prev_elbo - 1e-8) break;
        prev_elbo = elbo;
    }

    // Expected parameters and pruned effective count.
    res.weights.resize(K);
    res.means.resize(size_t(K) * d);
    res.responsibilities.resize(n * K);
    Nk = r.colwise().sum();
    double alpha_sum = K * alpha0 + Nk.sum();
    const double prune = Nk.sum() / (2.0 * double(K));
    res.effective_K = 0;
    for (uint32_t k = 0; k < K; ++k) {
        res.weights[k] = (alpha0 + Nk(k)) / alpha_sum;
        if (Nk(k) >= prune) res.effective_K++;
    }
    if (!diagonal) {
        res.covariances.resize(size_t(K) * d * d);
        for (uint32_t k = 0; k < K; ++k) {
            for (size_t j = 0; j < d; ++j) res.means[size_t(k) * d + j] = fs.m(k, long(j));
            // E[Sigma] = W_k^{-1} / (nu_k - d - 1), falling back to nu_k scaling
            // when the Wishart mean of the inverse is undefined.
            double denom = fs.nu(k) - double(d) - 1.0;
            MatrixXd cov = denom > 0 ? MatrixXd(fs.w[k].inverse() / denom)
                                     : MatrixXd(fs.w[k].inverse() / fs.nu(k));
            for (size_t a = 0; a < d; ++a)
                for (size_t b = 0; b < d; ++b)
                    res.covariances[(size_t(k) * d + a) * d + b] = cov(long(a), long(b));
        }
    } else {
        res.covariances.resize(size_t(K) * d);
        for (uint32_t k = 0; k < K; ++k) {
            for (size_t j = 0; j < d; ++j) {
                res.means[size_t(k) * d + j] = ds.m(k, long(j));
                res.covariances[size_t(k) * d + j] = ds.b(k, long(j)) / std::max(ds.a(k) - 1.0, 0.5);
            }
        }
    }
    for (size_t i = 0; i < n; ++i)
        for (uint32_t k = 0; k < K; ++k) res.responsibilities[i * K + k] = r(long(i), k);
    return res;
}

}  // namespace hc
