#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hc/w2v.hpp"

using namespace hc;

namespace {

// vocab layout used throughout: 0 PAD, 1 HAPAX, 2=a, 3=b, 4=c, 5=d
std::vector<std::vector<TokenId>> pair_corpus() {
    std::vector<std::vector<TokenId>> corpus;
    for (int i = 0; i < 500; ++i) corpus.push_back({2, 3});
    for (int i = 0; i < 500; ++i) corpus.push_back({4, 5});
    return corpus;
}

const std::vector<uint64_t> kPairCounts{0, 0, 500, 500, 500, 500};

}  // namespace

TEST_CASE("extract_pairs window semantics") {
    using P = std::pair<TokenId, TokenId>;
    auto pairs = extract_pairs({2, 3, 4}, 2);
    CHECK(pairs == std::vector<P>{{2, 3}, {2, 4}, {3, 2}, {3, 4}, {4, 2}, {4, 3}});
    CHECK(extract_pairs({7}, 2).empty());
    CHECK(extract_pairs({}, 2).empty());
    // PAD tokens are skipped entirely
    auto padded = extract_pairs({2, Vocabulary::PAD, 3}, 1);
    for (const auto& [u, v] : padded) {
        CHECK(u != Vocabulary::PAD);
        CHECK(v != Vocabulary::PAD);
    }
}

TEST_CASE("sgns_loss analytic values") {
    std::vector<double> zero(8, 0.0);
    std::vector<std::vector<double>> negs(4, zero);
    CHECK(std::abs(sgns_loss(zero, zero, negs) - 5.0 * std::log(2.0)) < 1e-12);

    // u = v = (1,0), one negative n = (1,0): -ln s(1) - ln s(-1)
    std::vector<double> e1{1.0, 0.0};
    double expect = -std::log(1.0 / (1.0 + std::exp(-1.0))) -
                    std::log(1.0 / (1.0 + std::exp(1.0)));
    CHECK(sgns_loss(e1, e1, {e1}) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect == doctest::Approx(1.6265).epsilon(1e-4));

    // saturation: strongly aligned positive, strongly separated negatives
    std::vector<double> big{30.0, 0.0};
    std::vector<double> negbig{-30.0, 0.0};
    CHECK(sgns_loss(big, big, {negbig, negbig}) < 1e-9);
}

TEST_CASE("training reduces mean SGNS loss") {
    auto corpus = pair_corpus();
    W2VConfig cfg;
    cfg.dim = 16;
    cfg.seed = 3;
    W2VModel trained = train_sgns(corpus, 6, kPairCounts, cfg);

    W2VConfig zero_ep = cfg;
    zero_ep.epochs = 0;
    W2VModel init = train_sgns(corpus, 6, kPairCounts, zero_ep);

    double before = mean_sgns_loss(init, corpus, kPairCounts, 77);
    double after = mean_sgns_loss(trained, corpus, kPairCounts, 77);
    CHECK(after < 0.8 * before);
    for (double v : trained.input) CHECK(std::isfinite(v));
    for (double v : trained.output) CHECK(std::isfinite(v));
}

TEST_CASE("co-occurring tokens end up more similar than unrelated ones") {
    auto corpus = pair_corpus();
    for (uint64_t seed : {1u, 2u, 3u}) {
        W2VConfig cfg;
        cfg.dim = 16;
        cfg.seed = seed;
        auto m = train_sgns(corpus, 6, kPairCounts, cfg);
        auto a = m.combined_vec(2), b = m.combined_vec(3), c = m.combined_vec(4);
        CAPTURE(seed);
        CHECK(cosine(a.data(), b.data(), cfg.dim) > cosine(a.data(), c.data(), cfg.dim));
    }
}

TEST_CASE("training is deterministic and keeps the PAD row frozen at zero") {
    auto corpus = pair_corpus();
    W2VConfig cfg;
    cfg.dim = 8;
    cfg.seed = 12;
    auto m1 = train_sgns(corpus, 6, kPairCounts, cfg);
    auto m2 = train_sgns(corpus, 6, kPairCounts, cfg);
    CHECK(m1.input == m2.input);
    CHECK(m1.output == m2.output);
    for (uint32_t j = 0; j < cfg.dim; ++j) CHECK(m1.input[j] == 0.0f);
}

TEST_CASE("train_sgns rejects an empty corpus") {
    W2VConfig cfg;
    CHECK_THROWS_AS(train_sgns({}, 6, {0, 0, 1, 1, 1, 1}, cfg), EmptyCorpus);
}

TEST_CASE("cosine basics") {
    float x[2] = {1, 0}, y[2] = {0, 1}, z[2] = {2, 0};
    CHECK(cosine(x, y, 2) == doctest::Approx(0.0));
    CHECK(cosine(x, z, 2) == doctest::Approx(1.0));
}
