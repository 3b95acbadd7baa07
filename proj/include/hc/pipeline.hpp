#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hc/corpus.hpp"

namespace hc {

// Flat, typed run configuration. File form is a flat JSON object; unknown
// keys are rejected. Every field has the library default.
struct PipelineConfig {
    std::string input;    // JSON-lines session file
    std::string out_dir;
    std::string pipeline = "lda";  // lda | autoencoder | signals | synth
    uint64_t seed = 1;
    int threads = 1;

    // corpus
    std::string vocab_mode = "hapax";  // full | hapax
    std::string level;                 // ip | session; empty = pipeline default

    // lda
    uint32_t lda_topics = 200;
    double lda_alpha = 0.0;  // <=0 means 1/K
    double lda_beta = 0.01;
    uint32_t lda_iters = 200;
    uint32_t infer_iters = 50;

    // k-means
    uint32_t kmeans_k = 200;
    uint32_t kmeans_iters = 100;
    uint32_t kmeans_restarts = 5;

    // word2vec
    uint32_t w2v_dim = 128;
    uint32_t w2v_window = 2;
    uint32_t w2v_negatives = 4;
    uint32_t w2v_epochs = 4;
    double w2v_lr = 0.025;

    // autoencoder
    uint32_t ae_rows = 500;    // N
    uint32_t ae_filters = 64;  // F
    uint32_t ae_embed = 200;   // M
    uint32_t ae_steps = 300;
    uint32_t ae_batch = 32;
    double ae_lr = 1e-3;

    // vdgmm
    uint32_t vdgmm_kmax = 150;
    double vdgmm_tol = 1e-6;
    uint32_t vdgmm_iters = 200;
    int64_t from_ts = -1;  // inclusive window filter, -1 = open
    int64_t to_ts = -1;    // exclusive, -1 = open

    // signals
    std::string signal_ips;      // comma separated, empty = all
    int64_t coactivity_bin = 86400;
    std::string embeddings_file; // defaults to <out_dir>/embeddings.bemb

    // synth
    std::string synth_spec;      // spec JSON path, empty = built-in default
    uint32_t synth_families = 6;

    // report
    uint32_t excerpt_bytes = 512;

    std::string to_json() const;
    static PipelineConfig from_json_file(const std::filesystem::path& path);
    static PipelineConfig from_json(const std::string& text);
};

struct PipelineOutcome {
    std::filesystem::path out_dir;
    std::vector<std::string> artifacts;  // fixed filenames written
    uint32_t effective_k = 0;            // vdgmm only
};

PipelineOutcome run_lda_pipeline(const PipelineConfig& cfg);
PipelineOutcome run_autoencoder_pipeline(const PipelineConfig& cfg);
PipelineOutcome run_signals(const PipelineConfig& cfg);
PipelineOutcome run_synth(const PipelineConfig& cfg);
PipelineOutcome run_pipeline(const PipelineConfig& cfg);

}  // namespace hc
