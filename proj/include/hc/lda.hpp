#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hc/corpus.hpp"

namespace hc {

// Topic model: K row-stochastic topic-word distributions plus the symmetric
// Dirichlet concentrations used for document mixtures (alpha) and topic rows
// (beta).
struct LdaModel {
    uint32_t K = 0;
    uint32_t V = 0;
    double alpha = 0.0;
    double beta = 0.0;
    uint64_t seed = 0;
    std::vector<double> phi;  // K x V row-major, each row sums to 1

    double phi_at(uint32_t k, uint32_t w) const { return phi[size_t(k) * V + w]; }
};

struct ThetaEmbedding {
    std::string key;
    std::vector<double> theta;  // length K, sums to 1
};

struct LdaConfig {
    uint32_t K = 200;
    double alpha = 0.0;   // <= 0 means 1/K
    double beta = 0.01;
    uint32_t iters = 200;
    uint64_t seed = 1;
    bool average_tail = false;  // average theta/phi over the last 20% of sweeps
};

// Collapsed Gibbs sampler over the expanded token instances of each bow.
// Deterministic given the seed (single-threaded).
LdaModel train_lda(const std::vector<Bow>& corpus, uint32_t V, const LdaConfig& cfg);

// Held-out Gibbs with phi frozen; theta = smoothed topic counts of the final
// sweep. Empty documents get the prior mean (uniform for symmetric alpha).
std::vector<double> infer_theta(const LdaModel& model, const Bow& bow, uint32_t iters,
                                uint64_t seed);

std::vector<ThetaEmbedding> embed_corpus(const LdaModel& model,
                                         const std::vector<std::string>& keys,
                                         const std::vector<Bow>& corpus, uint32_t iters,
                                         uint64_t seed, int threads = 1);

// Samples theta ~ Dir(alpha), then N words via topic draws. Test/synthesis aid.
std::vector<TokenId> generate_document(const LdaModel& model, size_t n_words, uint64_t seed);

}  // namespace hc
