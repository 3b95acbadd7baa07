#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hc/rng.hpp"
#include "hc/vdgmm.hpp"

using namespace hc;

namespace {

double gauss(Rng& rng) {
    return std::normal_distribution<double>(0.0, 1.0)(rng);
}

// Three well-separated Gaussians in R^2.
Points three_blobs(uint64_t seed, double sigma = 0.5, size_t per = 100) {
    const double centers[3][2] = {{0, 0}, {10, 0}, {0, 10}};
    Rng rng = make_rng(seed);
    Points p;
    p.n = 3 * per;
    p.d = 2;
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < per; ++i) {
            p.data.push_back(centers[c][0] + sigma * gauss(rng));
            p.data.push_back(centers[c][1] + sigma * gauss(rng));
        }
    return p;
}

void check_result_invariants(const VdgmmResult& r, size_t n) {
    REQUIRE(!r.elbo_trace.empty());
    for (size_t i = 1; i < r.elbo_trace.size(); ++i)
        CHECK(r.elbo_trace[i] >= r.elbo_trace[i - 1] - 1e-8);
    for (size_t i = 0; i < n; ++i) {
        double s = 0;
        for (uint32_t k = 0; k < r.Kmax; ++k) {
            double v = r.responsibilities[i * r.Kmax + k];
            CHECK(v >= 0.0);
            s += v;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(r.effective_K <= r.Kmax);
}

}  // namespace

TEST_CASE("three separated Gaussians: effective_K = 3 in >= 9/10 seeds") {
    int hits = 0;
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        Points p = three_blobs(seed);
        VdgmmConfig cfg;
        cfg.Kmax = 15;
        cfg.seed = seed;
        auto r = vdgmm(p, cfg);
        check_result_invariants(r, p.n);
        if (r.effective_K == 3) ++hits;
    }
    CHECK(hits >= 9);
}

TEST_CASE("identical points collapse to one effective component") {
    Points p;
    p.n = 50;
    p.d = 2;
    for (size_t i = 0; i < 50; ++i) {
        p.data.push_back(1.5);
        p.data.push_back(-2.0);
    }
    VdgmmConfig cfg;
    cfg.Kmax = 8;
    cfg.seed = 4;
    auto r = vdgmm(p, cfg);
    check_result_invariants(r, p.n);
    CHECK(r.effective_K == 1);
}

TEST_CASE("labels recover the partition on separated blobs") {
    Points p = three_blobs(7);
    VdgmmConfig cfg;
    cfg.Kmax = 15;
    cfg.seed = 7;
    auto r = vdgmm(p, cfg);
    auto labels = r.labels();
    std::vector<uint32_t> truth(p.n);
    for (size_t i = 0; i < p.n; ++i) truth[i] = uint32_t(i / 100);
    CHECK(agreement(labels, truth).ari == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("diagonal covariance path engages at d >= 32 and stays monotone") {
    // Two separated blobs in d = 40.
    Rng rng = make_rng(12);
    Points p;
    p.n = 120;
    p.d = 40;
    for (size_t i = 0; i < 120; ++i) {
        double shift = i < 60 ? 0.0 : 8.0;
        for (size_t j = 0; j < 40; ++j) p.data.push_back(shift + 0.5 * gauss(rng));
    }
    VdgmmConfig cfg;
    cfg.Kmax = 10;
    cfg.seed = 12;
    auto r = vdgmm(p, cfg);
    CHECK(r.covariance == CovarianceType::Diagonal);
    check_result_invariants(r, p.n);
    CHECK(r.effective_K == 2);
}

TEST_CASE("covariance type can be forced either way") {
    Points p = three_blobs(3, 0.5, 40);
    VdgmmConfig cfg;
    cfg.Kmax = 8;
    cfg.seed = 3;
    cfg.force_covariance = 1;
    auto diag = vdgmm(p, cfg);
    CHECK(diag.covariance == CovarianceType::Diagonal);
    check_result_invariants(diag, p.n);
    cfg.force_covariance = 0;
    auto full = vdgmm(p, cfg);
    CHECK(full.covariance == CovarianceType::Full);
    check_result_invariants(full, p.n);
}

TEST_CASE("deterministic given the seed; rejects n < 2") {
    Points p = three_blobs(9, 0.5, 30);
    VdgmmConfig cfg;
    cfg.Kmax = 6;
    cfg.seed = 9;
    auto a = vdgmm(p, cfg);
    auto b = vdgmm(p, cfg);
    CHECK(a.responsibilities == b.responsibilities);
    CHECK(a.elbo_trace == b.elbo_trace);

    Points tiny;
    tiny.n = 1;
    tiny.d = 2;
    tiny.data = {0.0, 0.0};
    CHECK_THROWS_AS(vdgmm(tiny, cfg), TooFewPoints);
}
