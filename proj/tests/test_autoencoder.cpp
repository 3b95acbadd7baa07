#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hc/autoencoder.hpp"
#include "hc/rng.hpp"

using namespace hc;

namespace {

SessionMatrix random_session(const AeDims& dims, size_t len, uint64_t seed) {
    SessionMatrix x;
    x.rows = dims.N;
    x.cols = dims.h;
    x.len = len;
    x.x.assign(dims.N * dims.h, 0.0);
    Rng rng = make_rng(seed);
    for (size_t t = 0; t < len; ++t)
        for (size_t j = 0; j < dims.h; ++j) x.x[t * dims.h + j] = uniform01(rng) - 0.5;
    return x;
}

// A small pool of structured sessions: a few prototype rows plus noise, so
// reconstruction has something learnable at desk scale.
std::vector<SessionMatrix> synthetic_sessions(const AeDims& dims, size_t n, uint64_t seed) {
    Rng rng = make_rng(seed);
    std::vector<std::vector<double>> protos(4, std::vector<double>(dims.h));
    for (auto& p : protos)
        for (auto& v : p) v = uniform01(rng) * 2.0 - 1.0;
    std::vector<SessionMatrix> out;
    for (size_t i = 0; i < n; ++i) {
        SessionMatrix x;
        x.rows = dims.N;
        x.cols = dims.h;
        x.len = dims.N / 2 + uniform_index(rng, dims.N / 2 + 1);
        x.x.assign(dims.N * dims.h, 0.0);
        const auto& p = protos[uniform_index(rng, protos.size())];
        for (size_t t = 0; t < x.len; ++t) {
            for (size_t j = 0; j < dims.h; ++j)
                x.x[t * dims.h + j] = p[j] + 0.05 * (uniform01(rng) - 0.5);
        }
        out.push_back(std::move(x));
    }
    return out;
}

}  // namespace

TEST_CASE("shape contracts at dims (N=8,h=4,F=6,M=5)") {
    AeDims dims{8, 4, 6, 5};
    auto params = init_autoencoder(dims, 1);
    auto x = random_session(dims, 8, 2);
    auto y = encode(params, x);
    CHECK(y.size() == 5);
    for (double v : y) CHECK(std::isfinite(v));
    auto xhat = decode(params, y);
    CHECK(xhat.size() == 8 * 4);
    for (double v : xhat) CHECK(std::isfinite(v));
    // pure functions
    CHECK(encode(params, x) == y);
    CHECK(decode(params, y) == xhat);
}

TEST_CASE("dimension mismatch is rejected") {
    AeDims dims{8, 4, 6, 5};
    auto params = init_autoencoder(dims, 1);
    auto wrong = random_session(AeDims{8, 6, 6, 5}, 8, 2);
    CHECK_THROWS_AS(encode(params, wrong), DimMismatch);
    CHECK_THROWS_AS(decode(params, std::vector<double>(7, 0.0)), DimMismatch);
}

TEST_CASE("zero parameters and zero input propagate to zero") {
    AeDims dims{8, 4, 6, 5};
    auto params = init_autoencoder(dims, 1);
    std::fill(params.theta.begin(), params.theta.end(), 0.0);
    SessionMatrix x;
    x.rows = 8;
    x.cols = 4;
    x.len = 8;
    x.x.assign(32, 0.0);
    for (double v : encode(params, x)) CHECK(v == 0.0);
    for (double v : decode(params, std::vector<double>(5, 0.0))) CHECK(v == 0.0);
}

TEST_CASE("gradient check: nonlinear < 1e-4 over 3 seeds, >= 200 samples") {
    AeDims dims{8, 4, 6, 5};
    for (uint64_t seed : {1u, 2u, 3u}) {
        auto params = init_autoencoder(dims, seed);
        CHECK(params.size() >= 200);
        auto x = random_session(dims, 6, seed + 100);
        double err = gradient_check(params, x, 1e-5, 200, seed);
        CAPTURE(seed);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("gradient check: exact-linear configuration < 1e-7") {
    AeDims dims{8, 4, 6, 5};
    auto params = init_autoencoder(dims, 9, /*linear_mode=*/true);
    auto x = random_session(dims, 8, 10);
    // Larger eps than the nonlinear check: per-coordinate curvature is mild in
    // the linear configuration, so roundoff (not truncation) dominates at 1e-5.
    CHECK(gradient_check(params, x, 1e-3, 200, 11) < 1e-7);
}

TEST_CASE("finite-difference truncation: eps=1e-2 is worse than eps=1e-5") {
    AeDims dims{8, 4, 6, 5};
    auto params = init_autoencoder(dims, 4);
    auto x = random_session(dims, 8, 5);
    double coarse = gradient_check(params, x, 1e-2, 200, 6);
    double fine = gradient_check(params, x, 1e-5, 200, 6);
    CHECK(coarse > fine);
}

TEST_CASE("reconstruction loss is the masked MSE over true-length rows") {
    AeDims dims{8, 4, 6, 5};
    auto params = init_autoencoder(dims, 21);
    auto x = random_session(dims, 3, 22);
    auto xhat = decode(params, encode(params, x));
    double manual = 0;
    for (size_t t = 0; t < x.len; ++t)
        for (size_t j = 0; j < dims.h; ++j) {
            double d = xhat[t * dims.h + j] - x.x[t * dims.h + j];
            manual += d * d;
        }
    manual /= double(x.len * dims.h);
    CHECK(reconstruction_loss(params, x) == doctest::Approx(manual).epsilon(1e-12));

    SessionMatrix empty;
    empty.rows = 8;
    empty.cols = 4;
    empty.len = 0;
    empty.x.assign(32, 0.0);
    CHECK(reconstruction_loss(params, empty) == 0.0);
}

TEST_CASE("training halves the masked MSE on 200 synthetic sessions") {
    AeDims dims{32, 16, 16, 12};
    auto sessions = synthetic_sessions(dims, 200, 31);
    AeTrainConfig cfg;
    cfg.steps = 300;
    cfg.seed = 32;
    auto res = train_autoencoder(sessions, dims, cfg);
    REQUIRE(!res.loss_trace.empty());
    for (double v : res.loss_trace) CHECK(std::isfinite(v));

    auto eval = [&](const AutoencoderParams& p) {
        double s = 0;
        for (const auto& x : sessions) s += reconstruction_loss(p, x);
        return s / double(sessions.size());
    };
    double initial = eval(init_autoencoder(dims, cfg.seed));
    double final_loss = eval(res.params);
    CHECK(final_loss < 0.5 * initial);
}

TEST_CASE("training is deterministic given the seed") {
    AeDims dims{16, 8, 8, 6};
    auto sessions = synthetic_sessions(dims, 40, 41);
    AeTrainConfig cfg;
    cfg.steps = 50;
    cfg.seed = 42;
    auto a = train_autoencoder(sessions, dims, cfg);
    auto b = train_autoencoder(sessions, dims, cfg);
    CHECK(a.params.theta == b.params.theta);
    CHECK(a.loss_trace == b.loss_trace);
}

TEST_CASE("train_autoencoder rejects an empty session list") {
    AeTrainConfig cfg;
    CHECK_THROWS_AS(train_autoencoder({}, AeDims{8, 4, 6, 5}, cfg), EmptyCorpus);
}

TEST_CASE("evaluation loss is non-increasing across 50-step checkpoints") {
    AeDims dims{16, 8, 8, 6};
    auto sessions = synthetic_sessions(dims, 60, 51);
    auto eval = [&](const AutoencoderParams& p) {
        double s = 0;
        for (const auto& x : sessions) s += reconstruction_loss(p, x);
        return s / double(sessions.size());
    };
    // Deterministic training: a k-step run is a prefix of a longer run with
    // the same seed, so re-running to each checkpoint reconstructs snapshots.
    std::vector<double> at;
    at.push_back(eval(init_autoencoder(dims, 52)));
    for (uint32_t steps = 50; steps <= 500; steps += 50) {
        AeTrainConfig cfg;
        cfg.steps = steps;
        cfg.seed = 52;
        at.push_back(eval(train_autoencoder(sessions, dims, cfg).params));
    }
    size_t violations = 0;
    for (size_t i = 1; i < at.size(); ++i)
        if (at[i] > at[i - 1]) ++violations;
    CHECK(violations * 20 <= at.size() - 1);  // <= 5% of checkpoint pairs
}

TEST_CASE("embed_session_matrix padding and truncation") {
    W2VModel w2v;
    w2v.V = 6;
    w2v.dim = 3;
    w2v.input.assign(18, 0.0f);
    for (uint32_t i = 0; i < 6; ++i)
        for (uint32_t j = 0; j < 3; ++j) w2v.input[i * 3 + j] = float(i * 10 + j);
    w2v.output = w2v.input;

    auto m = embed_session_matrix(w2v, {2, 3, 4}, 5);
    CHECK(m.rows == 5);
    CHECK(m.cols == 3);
    CHECK(m.len == 3);
    CHECK(m.x[0] == 20.0);   // row 0 = vec(2)
    CHECK(m.x[3] == 30.0);   // row 1 = vec(3)
    for (size_t i = 9; i < 15; ++i) CHECK(m.x[i] == 0.0);  // padded rows

    auto t = embed_session_matrix(w2v, {2, 3, 4, 5, 2, 3, 4}, 5);
    CHECK(t.len == 5);  // first N kept
    CHECK(t.x[12] == 20.0);  // row 4 = vec(2), the 5th token

    auto e = embed_session_matrix(w2v, {}, 5);
    CHECK(e.len == 0);
    for (double v : e.x) CHECK(v == 0.0);
}

TEST_CASE("encode_corpus preserves order and maps duplicates equally") {
    AeDims dims{8, 3, 4, 5};
    W2VModel w2v;
    w2v.V = 6;
    w2v.dim = 3;
    w2v.input.assign(18, 0.25f);
    w2v.output = w2v.input;
    auto params = init_autoencoder(dims, 61);

    auto vocab = build_vocabulary({{"ls", "wget", "ls", "wget"}}, VocabMode::FULL);
    std::vector<RawDocument> sessions{
        {"a-0", 100, {"ls", "wget"}}, {"b-0", 50, {"wget"}}, {"a-1", 200, {"ls", "wget"}}};
    auto embs = encode_corpus(w2v, params, sessions, vocab);
    REQUIRE(embs.size() == 3);
    CHECK(embs[0].key == "a-0");
    CHECK(embs[0].ts == 100);
    CHECK(embs[1].key == "b-0");
    CHECK(embs[0].y.size() == 5);
    CHECK(embs[0].y == embs[2].y);  // identical sessions -> identical embedding
    // threaded encoding matches single-threaded exactly
    auto threaded = encode_corpus(w2v, params, sessions, vocab, 4);
    for (size_t i = 0; i < embs.size(); ++i) CHECK(embs[i].y == threaded[i].y);
}
