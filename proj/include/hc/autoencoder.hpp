#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hc/w2v.hpp"

namespace hc {

// Word-vector stack for one session, truncated/padded to exactly N rows.
struct SessionMatrix {
    std::string key;
    int64_t ts = 0;
    size_t rows = 0;  // N
    size_t cols = 0;  // h
    size_t len = 0;   // true (pre-padding) token count, <= N
    std::vector<double> x;  // N x h row-major; padded rows are zero

    const double* row(size_t t) const { return x.data() + t * cols; }
};

struct SessionEmbedding {
    std::string key;
    int64_t ts = 0;
    std::vector<double> y;  // length M
};

struct AeDims {
    size_t N = 32;   // sequence length, must be even
    size_t h = 16;   // input channels (word dim)
    size_t F = 16;   // conv filters
    size_t M = 12;   // embedding size
};

// Encoder: same-padded conv (width 3) + ReLU, maxpool 2, LSTM cell of size M,
// final hidden state = embedding. Decoder: linear M -> (N/2)xF, nearest
// upsample x2, same-padded transposed conv back to h channels.
// linear_mode replaces every nonlinearity with identity, forces LSTM gates
// open, and swaps maxpool for mean pool (exact-linear configuration for
// gradient verification).
struct AutoencoderParams {
    AeDims dims;
    uint64_t seed = 0;
    bool linear_mode = false;
    std::vector<double> theta;  // all weights, flat (see layout in the .cpp)

    size_t size() const { return theta.size(); }
};

AutoencoderParams init_autoencoder(const AeDims& dims, uint64_t seed, bool linear_mode = false);

std::vector<double> encode(const AutoencoderParams& params, const SessionMatrix& x);
std::vector<double> decode(const AutoencoderParams& params, const std::vector<double>& y);

// MSE over non-PAD rows only; zero for empty sessions.
double reconstruction_loss(const AutoencoderParams& params, const SessionMatrix& x);

// Loss plus d loss / d theta.
double loss_and_gradient(const AutoencoderParams& params, const SessionMatrix& x,
                         std::vector<double>* grad);

struct AeTrainConfig {
    uint32_t steps = 300;
    uint32_t batch = 32;
    double lr = 1e-3;
    uint64_t seed = 1;
};

struct AeTrainResult {
    AutoencoderParams params;
    std::vector<double> loss_trace;  // per-step mean batch loss
};

AeTrainResult train_autoencoder(const std::vector<SessionMatrix>& sessions, const AeDims& dims,
                                const AeTrainConfig& cfg);

// Max relative error between analytic gradient and central finite differences
// over n_samples randomly chosen parameters.
double gradient_check(const AutoencoderParams& params, const SessionMatrix& x, double eps,
                      size_t n_samples, uint64_t seed);

SessionMatrix embed_session_matrix(const W2VModel& w2v, const std::vector<TokenId>& tokens,
                                   size_t n_rows);

std::vector<SessionEmbedding> encode_corpus(const W2VModel& w2v, const AutoencoderParams& params,
                                            const std::vector<RawDocument>& sessions,
                                            const Vocabulary& vocab, int threads = 1);

}  // namespace hc
