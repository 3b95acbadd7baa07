#include "hc/lda.hpp"

#include <cassert>
#include <cmath>
#include <thread>

#include "hc/rng.hpp"

namespace hc {

namespace {

std::vector<std::vector<TokenId>> expand(const std::vector<Bow>& corpus) {
    std::vector<std::vector<TokenId>> docs(corpus.size());
    for (size_t d = 0; d < corpus.size(); ++d) {
        for (const auto& [w, c] : corpus[d]) {
            docs[d].insert(docs[d].end(), c, w);
        }
    }
    return docs;
}

uint32_t sample_discrete(const std::vector<double>& weights, double total, Rng& rng) {
    double u = uniform01(rng) * total;
    double acc = 0.0;
    for (uint32_t k = 0; k + 1 < weights.size(); ++k) {
        acc += weights[k];
        if (u < acc) return k;
    }
    return static_cast<uint32_t>(weights.size() - 1);
}

}  // namespace

LdaModel train_lda(const std::vector<Bow>& corpus, uint32_t V, const LdaConfig& cfg) {
    if (corpus.empty()) throw EmptyCorpus("train_lda");
    if (cfg.K < 1 || cfg.iters < 1) throw Error("train_lda: K and iters must be >= 1");
    const uint32_t K = cfg.K;
    const double alpha = cfg.alpha > 0 ? cfg.alpha : 1.0 / K;
    const double beta = cfg.beta;

    auto docs = expand(corpus);
    const size_t D = docs.size();
    Rng rng = make_rng(cfg.seed);

    std::vector<std::vector<uint32_t>> z(D);
    std::vector<uint32_t> n_dk(D * K, 0);
    std::vector<uint32_t> n_kw(size_t(K) * V, 0);
    std::vector<uint32_t> n_k(K, 0);

    for (size_t d = 0; d < D; ++d) {
        z[d].resize(docs[d].size());
        for (size_t i = 0; i < docs[d].size(); ++i) {
            uint32_t k = static_cast<uint32_t>(uniform_index(rng, K));
            z[d][i] = k;
            n_dk[d * K + k]++;
            n_kw[size_t(k) * V + docs[d][i]]++;
            n_k[k]++;
        }
    }

    std::vector<double> phi_acc;
    size_t acc_count = 0;
    const uint32_t tail_start = cfg.average_tail ? cfg.iters - std::max(1u, cfg.iters / 5)
                                                 : cfg.iters;

    std::vector<double> weights(K);
    for (uint32_t sweep = 0; sweep < cfg.iters; ++sweep) {
        for (size_t d = 0; d < D; ++d) {
            for (size_t i = 0; i < docs[d].size(); ++i) {
                const TokenId w = docs[d][i];
                const uint32_t old_k = z[d][i];
                n_dk[d * K + old_k]--;
                n_kw[size_t(old_k) * V + w]--;
                n_k[old_k]--;

                double total = 0.0;
                for (uint32_t k = 0; k < K; ++k) {
                    double p = (n_dk[d * K + k] + alpha) * (n_kw[size_t(k) * V + w] + beta) /
                               (n_k[k] + V * beta);
                    weights[k] = p;
                    total += p;
                }
                uint32_t new_k = sample_discrete(weights, total, rng);
                z[d][i] = new_k;
                n_dk[d * K + new_k]++;
                n_kw[size_t(new_k) * V + w]++;
                n_k[new_k]++;
            }
        }
        if (sweep >= tail_start) {
            if (phi_acc.empty()) phi_acc.assign(size_t(K) * V, 0.0);
            for (uint32_t k = 0; k < K; ++k) {
                for (uint32_t w = 0; w < V; ++w) {
                    phi_acc[size_t(k) * V + w] +=
                        (n_kw[size_t(k) * V + w] + beta) / (n_k[k] + V * beta);
                }
            }
            ++acc_count;
        }
    }

    LdaModel model;
    model.K = K;
    model.V = V;
    model.alpha = alpha;
    model.beta = beta;
    model.seed = cfg.seed;
    model.phi.resize(size_t(K) * V);
    if (acc_count > 0) {
        for (size_t i = 0; i < model.phi.size(); ++i) model.phi[i] = phi_acc[i] / acc_count;
    } else {
        for (uint32_t k = 0; k < K; ++k) {
            for (uint32_t w = 0; w < V; ++w) {
                model.phi[size_t(k) * V + w] =
                    (n_kw[size_t(k) * V + w] + beta) / (n_k[k] + V * beta);
            }
        }
    }
    // Normalize away residual rounding so rows sum to 1 exactly at 1e-9.
    for (uint32_t k = 0; k < K; ++k) {
        double s = 0.0;
        for (uint32_t w = 0; w < V; ++w) s += model.phi[size_t(k) * V + w];
        for (uint32_t w = 0; w < V; ++w) model.phi[size_t(k) * V + w] /= s;
    }
    return model;
}

std::vector<double> infer_theta(const LdaModel& model, const Bow& bow, uint32_t iters,
                                uint64_t seed) {
    const uint32_t K = model.K;
    std::vector<TokenId> tokens;
    for (const auto& [w, c] : bow) {
        if (w < model.V) tokens.insert(tokens.end(), c, w);
    }
    const size_t N = tokens.size();
    std::vector<double> theta(K, 1.0 / K);
    if (N == 0) return theta;

    Rng rng = make_rng(seed);
    std::vector<uint32_t> z(N);
    std::vector<uint32_t> n_k(K, 0);
    for (size_t i = 0; i < N; ++i) {
        uint32_t k = static_cast<uint32_t>(uniform_index(rng, K));
        z[i] = k;
        n_k[k]++;
    }
    std::vector<double> weights(K);
    for (uint32_t sweep = 0; sweep < iters; ++sweep) {
        for (size_t i = 0; i < N; ++i) {
            n_k[z[i]]--;
            double total = 0.0;
            for (uint32_t k = 0; k < K; ++k) {
                double p = (n_k[k] + model.alpha) * model.phi_at(k, tokens[i]);
                weights[k] = p;
                total += p;
            }
            uint32_t new_k = sample_discrete(weights, total, rng);
            z[i] = new_k;
            n_k[new_k]++;
        }
    }
    double denom = double(N) + K * model.alpha;
    double s = 0.0;
    for (uint32_t k = 0; k < K; ++k) {
        theta[k] = (n_k[k] + model.alpha) / denom;
        s += theta[k];
    }
    for (auto& t : theta) t /= s;
    return theta;
}

std::vector<ThetaEmbedding> embed_corpus(const LdaModel& model,
                                         const std::vector<std::string>& keys,
                                         const std::vector<Bow>& corpus, uint32_t iters,
                                         uint64_t seed, int threads) {
    assert(keys.size() == corpus.size());
    std::vector<ThetaEmbedding> out(corpus.size());
    auto work = [&](size_t begin, size_t end) {
        for (size_t d = begin; d < end; ++d) {
            out[d].key = keys[d];
            out[d].theta = infer_theta(model, corpus[d], iters, derive_seed(seed, "infer", d));
        }
    };
    if (threads <= 1 || corpus.size() < 2) {
        work(0, corpus.size());
    } else {
        size_t n = corpus.size();
        size_t t = std::min<size_t>(threads, n);
        std::vector<std::thread> pool;
        for (size_t i = 0; i < t; ++i) {
            pool.emplace_back(work, n * i / t, n * (i + 1) / t);
        }
        for (auto& th : pool) th.join();
    }
    return out;
}

std::vector<TokenId> generate_document(const LdaModel& model, size_t n_words, uint64_t seed) {
    Rng rng = make_rng(seed);
    const uint32_t K = model.K;

    // theta ~ Dir(alpha) via normalized gammas.
    std::vector<double> theta(K);
    std::gamma_distribution<double> gamma(model.alpha, 1.0);
    double s = 0.0;
    for (uint32_t k = 0; k < K; ++k) {
        theta[k] = gamma(rng);
        s += theta[k];
    }
    if (s <= 0.0) {
        std::fill(theta.begin(), theta.end(), 1.0 / K);
    } else {
        for (auto& t : theta) t /= s;
    }

    std::vector<TokenId> words;
    words.reserve(n_words);
    std::vector<double> row(model.V);
    for (size_t i = 0; i < n_words; ++i) {
        uint32_t k = sample_discrete(theta, 1.0, rng);
        for (uint32_t w = 0; w < model.V; ++w) row[w] = model.phi_at(k, w);
        words.push_back(sample_discrete(row, 1.0, rng));
    }
    return words;
}

}  // namespace hc
