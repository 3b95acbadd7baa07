#include "hc/w2v.hpp"

#include <cmath>

#include "hc/rng.hpp"

namespace hc {

namespace {

// Cumulative table over unigram^{3/4}; PAD weight is zero and never drawn.
struct NegativeSampler {
    std::vector<double> cdf;

    explicit NegativeSampler(const std::vector<uint64_t>& counts) {
        cdf.resize(counts.size());
        double acc = 0.0;
        for (size_t i = 0; i < counts.size(); ++i) {
            if (i != Vocabulary::PAD && counts[i] > 0) acc += std::pow(double(counts[i]), 0.75);
            cdf[i] = acc;
        }
    }

    TokenId draw(Rng& rng) const {
        double u = uniform01(rng) * cdf.back();
        size_t lo = 0, hi = cdf.size() - 1;
        while (lo < hi) {
            size_t mid = (lo + hi) / 2;
            if (cdf[mid] > u) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        return static_cast<TokenId>(lo);
    }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::vector<std::pair<TokenId, TokenId>> extract_pairs(const std::vector<TokenId>& tokens,
                                                       uint32_t window) {
    std::vector<std::pair<TokenId, TokenId>> pairs;
    const size_t n = tokens.size();
    for (size_t i = 0; i < n; ++i) {
        if (tokens[i] == Vocabulary::PAD) continue;
        size_t lo = i >= window ? i - window : 0;
        size_t hi = std::min(n, i + window + 1);
        for (size_t j = lo; j < hi; ++j) {
            if (j == i || tokens[j] == Vocabulary::PAD) continue;
            pairs.emplace_back(tokens[i], tokens[j]);
        }
    }
    return pairs;
}

double sgns_loss(const std::vector<double>& u, const std::vector<double>& v,
                 const std::vector<std::vector<double>>& negatives) {
    double dot = 0.0;
    for (size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
    double loss = -std::log(sigmoid(dot));
    for (const auto& n : negatives) {
        double nd = 0.0;
        for (size_t i = 0; i < u.size(); ++i) nd += u[i] * n[i];
        loss -= std::log(sigmoid(-nd));
    }
    return loss;
}

W2VModel train_sgns(const std::vector<std::vector<TokenId>>& corpus, uint32_t V,
                    const std::vector<uint64_t>& token_counts, const W2VConfig& cfg) {
    if (corpus.empty()) throw EmptyCorpus("train_sgns");
    if (token_counts.size() != V) throw DimMismatch("token_counts size != V");

    W2VModel model;
    model.V = V;
    model.dim = cfg.dim;
    model.config = cfg;
    model.input.assign(size_t(V) * cfg.dim, 0.0f);
    model.output.assign(size_t(V) * cfg.dim, 0.0f);

    Rng rng = make_rng(derive_seed(cfg.seed, "w2v-init"));
    for (uint32_t w = 1; w < V; ++w) {  // PAD row stays zero
        for (uint32_t c = 0; c < cfg.dim; ++c) {
            model.input[size_t(w) * cfg.dim + c] =
                float((uniform01(rng) - 0.5) / cfg.dim);
        }
    }

    NegativeSampler sampler(token_counts);
    if (sampler.cdf.back() <= 0.0) throw EmptyCorpus("no non-PAD tokens");

    uint64_t total_pairs = 0;
    for (const auto& doc : corpus) total_pairs += extract_pairs(doc, cfg.window).size();
    total_pairs = std::max<uint64_t>(1, total_pairs * cfg.epochs);

    const uint32_t dim = cfg.dim;
    std::vector<float> grad_u(dim);
    uint64_t step = 0;
    Rng train_rng = make_rng(derive_seed(cfg.seed, "w2v-train"));

    for (uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (const auto& doc : corpus) {
            for (const auto& [center, context] : extract_pairs(doc, cfg.window)) {
                float lr = cfg.lr * float(1.0 - double(step) / double(total_pairs));
                lr = std::max(lr, cfg.lr * 1e-4f);
                ++step;

                float* u = model.input.data() + size_t(center) * dim;
                std::fill(grad_u.begin(), grad_u.end(), 0.0f);

                // positive pair
                {
                    float* v = model.output.data() + size_t(context) * dim;
                    double dot = 0.0;
                    for (uint32_t c = 0; c < dim; ++c) dot += double(u[c]) * v[c];
                    float g = float(sigmoid(dot) - 1.0);
                    for (uint32_t c = 0; c < dim; ++c) {
                        grad_u[c] += g * v[c];
                        v[c] -= lr * g * u[c];
                    }
                }
                // negatives; resample when the draw hits the positive context
                for (uint32_t neg = 0; neg < cfg.negatives; ++neg) {
                    TokenId nid = sampler.draw(train_rng);
                    if (nid == context) continue;
                    float* v = model.output.data() + size_t(nid) * dim;
                    double dot = 0.0;
                    for (uint32_t c = 0; c < dim; ++c) dot += double(u[c]) * v[c];
                    float g = float(sigmoid(dot));
                    for (uint32_t c = 0; c < dim; ++c) {
                        grad_u[c] += g * v[c];
                        v[c] -= lr * g * u[c];
                    }
                }
                for (uint32_t c = 0; c < dim; ++c) u[c] -= lr * grad_u[c];
            }
        }
    }
    return model;
}

double mean_sgns_loss(const W2VModel& model, const std::vector<std::vector<TokenId>>& corpus,
                      const std::vector<uint64_t>& token_counts, uint64_t seed) {
    NegativeSampler sampler(token_counts);
    Rng rng = make_rng(seed);
    const uint32_t dim = model.dim;
    double total = 0.0;
    size_t count = 0;
    for (const auto& doc : corpus) {
        for (const auto& [center, context] : extract_pairs(doc, model.config.window)) {
            const float* u = model.vec(center);
            const float* vp = model.output.data() + size_t(context) * dim;
            double dot = 0.0;
            for (uint32_t c = 0; c < dim; ++c) dot += double(u[c]) * vp[c];
            double loss = -std::log(sigmoid(dot));
            for (uint32_t neg = 0; neg < model.config.negatives; ++neg) {
                TokenId nid = sampler.draw(rng);
                if (nid == context) continue;
                const float* vn = model.output.data() + size_t(nid) * dim;
                double nd = 0.0;
                for (uint32_t c = 0; c < dim; ++c) nd += double(u[c]) * vn[c];
                loss -= std::log(sigmoid(-nd));
            }
            total += loss;
            ++count;
        }
    }
    return count ? total / double(count) : 0.0;
}

double cosine(const float* a, const float* b, size_t d) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < d; ++i) {
        dot += double(a[i]) * b[i];
        na += double(a[i]) * a[i];
        nb += double(b[i]) * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace hc
