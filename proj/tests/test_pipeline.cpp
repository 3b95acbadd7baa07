#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "hc/io.hpp"
#include "hc/kmeans.hpp"
#include "hc/pipeline.hpp"
#include "hc/signals.hpp"
#include "hc/synth.hpp"

namespace fs = std::filesystem;
using namespace hc;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("hc_pipeline_tests") / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// Generates a small labeled corpus and returns the sessions file path plus
// the ip-level truth map.
fs::path make_synth(const fs::path& dir, uint32_t families, uint64_t seed) {
    PipelineConfig cfg;
    cfg.pipeline = "synth";
    cfg.synth_families = families;
    cfg.seed = seed;
    cfg.out_dir = dir.string();
    run_synth(cfg);
    return dir / "sessions.jsonl";
}

std::map<std::string, std::string> checksum_all(const fs::path& dir) {
    std::map<std::string, std::string> sums;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file())
            sums[entry.path().filename().string()] = file_checksum(entry.path());
    return sums;
}

}  // namespace

TEST_CASE("config JSON round trip preserves every field") {
    PipelineConfig c;
    c.input = "in.jsonl";
    c.out_dir = "/tmp/out";
    c.pipeline = "autoencoder";
    c.seed = 99;
    c.threads = 3;
    c.vocab_mode = "full";
    c.level = "session";
    c.lda_topics = 17;
    c.lda_alpha = 0.25;
    c.kmeans_k = 9;
    c.w2v_dim = 12;
    c.ae_steps = 123;
    c.vdgmm_kmax = 7;
    c.from_ts = 100;
    c.to_ts = 200;
    c.signal_ips = "1.1.1.1,2.2.2.2";
    c.synth_spec = "spec.json";
    c.excerpt_bytes = 64;
    auto back = PipelineConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(back.pipeline == "autoencoder");
    CHECK(back.lda_alpha == 0.25);
    CHECK(back.from_ts == 100);
}

TEST_CASE("config parsing rejects unknown keys and missing files") {
    CHECK_THROWS_AS(PipelineConfig::from_json(R"({"lda_topix": 4})"), Error);
    CHECK_THROWS_AS(PipelineConfig::from_json_file("/nonexistent/cfg.json"), IoError);
    // defaults survive an empty object
    auto c = PipelineConfig::from_json("{}");
    CHECK(c.lda_topics == 200);
    CHECK(c.seed == 1);
}

TEST_CASE("run_synth writes the advertised artifacts deterministically") {
    auto dir_a = scratch("synth_a");
    auto dir_b = scratch("synth_b");
    make_synth(dir_a, 3, 42);
    make_synth(dir_b, 3, 42);
    for (const char* name : {"sessions.jsonl", "truth.csv", "session_truth.csv"}) {
        CAPTURE(name);
        REQUIRE(fs::exists(dir_a / name));
        CHECK(file_checksum(dir_a / name) == file_checksum(dir_b / name));
    }
}

TEST_CASE("lda pipeline recovers a 2-family corpus with ARI >= 0.9") {
    auto synth_dir = scratch("lda_e2e_synth");
    auto sessions = make_synth(synth_dir, 2, 5);

    PipelineConfig cfg;
    cfg.input = sessions.string();
    cfg.out_dir = scratch("lda_e2e_out").string();
    cfg.pipeline = "lda";
    cfg.seed = 7;
    cfg.lda_topics = 4;
    cfg.lda_iters = 100;
    cfg.kmeans_k = 2;
    auto out = run_pipeline(cfg);
    for (const auto& name : out.artifacts) {
        CAPTURE(name);
        CHECK(fs::exists(fs::path(cfg.out_dir) / name));
    }

    auto assignment = read_assignment_csv(fs::path(cfg.out_dir) / "assignments.csv");
    auto truth = read_assignment_csv(synth_dir / "truth.csv");  // ip,family
    CHECK(agreement(assignment, truth).ari >= 0.9);
}

TEST_CASE("identical rerun reproduces byte-identical artifacts") {
    auto synth_dir = scratch("rerun_synth");
    auto sessions = make_synth(synth_dir, 2, 9);

    PipelineConfig cfg;
    cfg.input = sessions.string();
    cfg.out_dir = (fs::temp_directory_path() / "hc_pipeline_tests" / "rerun_out").string();
    cfg.pipeline = "lda";
    cfg.seed = 3;
    cfg.lda_topics = 4;
    cfg.lda_iters = 40;
    cfg.kmeans_k = 2;
    cfg.threads = 1;

    fs::remove_all(cfg.out_dir);
    run_lda_pipeline(cfg);
    auto first = checksum_all(cfg.out_dir);
    fs::remove_all(cfg.out_dir);
    run_lda_pipeline(cfg);
    auto second = checksum_all(cfg.out_dir);
    CHECK(first == second);
    CHECK(first.count("manifest.json") == 1);
}

TEST_CASE("a rerun in place reuses the trained model via the manifest") {
    auto synth_dir = scratch("reuse_synth");
    auto sessions = make_synth(synth_dir, 2, 13);

    PipelineConfig cfg;
    cfg.input = sessions.string();
    cfg.out_dir = scratch("reuse_out").string();
    cfg.pipeline = "lda";
    cfg.lda_topics = 4;
    cfg.lda_iters = 40;
    cfg.kmeans_k = 2;
    run_lda_pipeline(cfg);
    auto model_path = fs::path(cfg.out_dir) / "lda.model";
    auto stamp = fs::last_write_time(model_path);
    auto sum = file_checksum(model_path);
    run_lda_pipeline(cfg);
    CHECK(fs::last_write_time(model_path) == stamp);  // not retrained
    CHECK(file_checksum(model_path) == sum);
}

TEST_CASE("missing input file raises IoError before any artifact is written") {
    PipelineConfig cfg;
    cfg.input = "/nonexistent/sessions.jsonl";
    cfg.out_dir = scratch("missing_out").string();
    CHECK_THROWS_AS(run_lda_pipeline(cfg), IoError);
    CHECK_THROWS_AS(run_autoencoder_pipeline(cfg), IoError);
    CHECK(!fs::exists(fs::path(cfg.out_dir) / "vocab.tsv"));
}

TEST_CASE("autoencoder pipeline: window excluding every session -> EmptyWindow") {
    auto synth_dir = scratch("window_synth");
    auto sessions = make_synth(synth_dir, 2, 21);

    PipelineConfig cfg;
    cfg.input = sessions.string();
    cfg.out_dir = scratch("window_out").string();
    cfg.pipeline = "autoencoder";
    cfg.w2v_dim = 4;
    cfg.w2v_epochs = 1;
    cfg.ae_rows = 8;
    cfg.ae_filters = 4;
    cfg.ae_embed = 3;
    cfg.ae_steps = 5;
    cfg.vdgmm_kmax = 4;
    cfg.from_ts = int64_t(1) << 60;  // far beyond any generated timestamp
    CHECK_THROWS_AS(run_autoencoder_pipeline(cfg), EmptyWindow);
}

TEST_CASE("signals stage: per-ip CSVs, unknown ip rejection, single-session d=0") {
    auto dir = scratch("signals_out");
    std::vector<SessionEmbedding> embs{
        {"10.0.0.1-0", 100, {0.0, 0.0}},
        {"10.0.0.1-1", 200, {3.0, 4.0}},
        {"10.0.0.2-0", 150, {1.0, 1.0}},
    };
    save_embeddings(dir / "embeddings.bemb", embs);

    PipelineConfig cfg;
    cfg.pipeline = "signals";
    cfg.out_dir = dir.string();
    auto out = run_signals(cfg);
    CHECK(fs::exists(dir / "distances_10.0.0.1.csv"));
    CHECK(fs::exists(dir / "distances_10.0.0.2.csv"));
    CHECK(fs::exists(dir / "coactivity.csv"));
    CHECK(out.artifacts.size() == 3);

    // single-session ip: exactly one data row, distance exactly 0
    std::ifstream in(dir / "distances_10.0.0.2.csv");
    std::string header, row, extra;
    std::getline(in, header);
    REQUIRE(std::getline(in, row));
    CHECK(row == "150,0");
    CHECK(!std::getline(in, extra));

    cfg.signal_ips = "10.0.0.1,99.99.99.99";
    CHECK_THROWS_AS(run_signals(cfg), UnknownIp);

    PipelineConfig bad;
    bad.pipeline = "signals";
    bad.out_dir = scratch("signals_empty").string();
    CHECK_THROWS_AS(run_signals(bad), IoError);  // no embeddings artifact
}

TEST_CASE("same-family ips on alternating schedules have co-activity < 0.2") {
    // Two ips from one behavioral family, active in disjoint day-long windows.
    FamilySpec f;
    f.id = 0;
    f.templates = {{"uname -a", "free -m"}};
    f.ip_pool = 1;
    f.sessions_per_ip = 16;
    const int64_t day = 86400;
    FamilySpec g = f;
    f.intervals = {{0, day, 3600}, {2 * day, 3 * day, 3600}};
    g.intervals = {{day, 2 * day, 3600}, {3 * day, 4 * day, 3600}};
    g.id = 1;
    auto corpus = generate({f, g}, 3);

    std::vector<SessionEmbedding> embs;
    for (const auto& rec : corpus.records)
        embs.push_back({rec.ip + "-" + std::to_string(embs.size()), rec.ts, {0.0}});
    auto signals = build_signals(embs);
    REQUIRE(signals.size() == 2);
    CHECK(co_activity(signals[0], signals[1], day) < 0.2);
}

TEST_CASE("run_pipeline dispatches on the pipeline name") {
    PipelineConfig cfg;
    cfg.pipeline = "no-such-pipeline";
    CHECK_THROWS_AS(run_pipeline(cfg), Error);
}
