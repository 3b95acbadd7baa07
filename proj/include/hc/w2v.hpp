#pragma once

#include <cstdint>
#include <vector>

#include "hc/corpus.hpp"

namespace hc {

struct W2VConfig {
    uint32_t dim = 128;
    uint32_t window = 2;
    uint32_t negatives = 4;
    uint32_t epochs = 4;
    float lr = 0.025f;
    uint64_t seed = 1;
};

// Skip-gram with negative sampling. Row 0 (PAD) of both matrices stays zero.
struct W2VModel {
    uint32_t V = 0;
    uint32_t dim = 0;
    W2VConfig config;
    std::vector<float> input;   // V x dim, the word map
    std::vector<float> output;  // V x dim, context vectors

    const float* vec(TokenId id) const { return input.data() + size_t(id) * dim; }

    // Word-similarity representation: input row + output row (the standard
    // "word + context" sum); far more stable for similarity queries than
    // either matrix alone.
    std::vector<float> combined_vec(TokenId id) const {
        std::vector<float> v(dim);
        for (uint32_t j = 0; j < dim; ++j)
            v[j] = input[size_t(id) * dim + j] + output[size_t(id) * dim + j];
        return v;
    }
};

// All (center, context) pairs with |i - j| <= window, j != i, in scan order.
// PAD tokens are skipped entirely.
std::vector<std::pair<TokenId, TokenId>> extract_pairs(const std::vector<TokenId>& tokens,
                                                       uint32_t window);

// -log sigma(u.v) - sum_i log sigma(-u.n_i)
double sgns_loss(const std::vector<double>& u, const std::vector<double>& v,
                 const std::vector<std::vector<double>>& negatives);

// Deterministic single-threaded SGD over all pairs; negatives from the
// unigram^{3/4} distribution; learning rate decays linearly to lr/10000.
W2VModel train_sgns(const std::vector<std::vector<TokenId>>& corpus, uint32_t V,
                    const std::vector<uint64_t>& token_counts, const W2VConfig& cfg);

// Mean SGNS loss over the corpus with freshly sampled negatives (evaluation aid).
double mean_sgns_loss(const W2VModel& model, const std::vector<std::vector<TokenId>>& corpus,
                      const std::vector<uint64_t>& token_counts, uint64_t seed);

double cosine(const float* a, const float* b, size_t d);

}  // namespace hc
