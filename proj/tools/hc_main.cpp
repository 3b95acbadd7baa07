#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "hc/autoencoder.hpp"
#include "hc/io.hpp"
#include "hc/kmeans.hpp"
#include "hc/lda.hpp"
#include "hc/pipeline.hpp"
#include "hc/signals.hpp"
#include "hc/synth.hpp"
#include "hc/vdgmm.hpp"
#include "hc/w2v.hpp"

namespace fs = std::filesystem;

namespace {

int default_threads() {
    if (const char* env = std::getenv("HC_THREADS")) {
        int t = std::atoi(env);
        if (t >= 1) return t;
    }
    return 1;
}

// Subcommand state shared through one config object; per-command flags
// override config-file values.
struct Cli {
    hc::PipelineConfig cfg;
    std::string config_file;

    void load_config_file() {
        if (!config_file.empty()) {
            std::string out_dir = cfg.out_dir;  // flags already parsed win below
            cfg = hc::PipelineConfig::from_json_file(config_file);
            if (!out_dir.empty()) cfg.out_dir = out_dir;
        }
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"honeypot command-log clustering toolkit"};
    app.require_subcommand(1);

    Cli cli;
    cli.cfg.threads = default_threads();
    auto& cfg = cli.cfg;

    app.add_option("--threads", cfg.threads, "worker threads (1 = bitwise reproducible)");

    // corpus build
    auto* corpus_cmd = app.add_subcommand("corpus", "tokenize sessions and build vocabulary");
    auto* corpus_build = corpus_cmd->add_subcommand("build");
    corpus_build->add_option("--input", cfg.input)->required();
    corpus_build->add_option("--mode", cfg.vocab_mode)->check(CLI::IsMember({"full", "hapax"}));
    corpus_build->add_option("--level", cfg.level)->check(CLI::IsMember({"ip", "session"}));
    corpus_build->add_option("--out", cfg.out_dir)->required();

    // lda
    auto* lda_cmd = app.add_subcommand("lda", "topic model training and embedding");
    auto* lda_train = lda_cmd->add_subcommand("train");
    lda_train->add_option("--input", cfg.input)->required();
    lda_train->add_option("--k", cfg.lda_topics);
    lda_train->add_option("--iters", cfg.lda_iters);
    lda_train->add_option("--seed", cfg.seed);
    lda_train->add_option("--out", cfg.out_dir)->required();
    lda_train->add_option("--mode", cfg.vocab_mode);
    lda_train->add_option("--level", cfg.level);
    auto* lda_embed = lda_cmd->add_subcommand("embed");
    lda_embed->add_option("--input", cfg.input)->required();
    lda_embed->add_option("--seed", cfg.seed);
    lda_embed->add_option("--iters", cfg.infer_iters);
    lda_embed->add_option("--out", cfg.out_dir)->required();

    // w2v / ae
    auto* w2v_cmd = app.add_subcommand("w2v", "word embedding training");
    auto* w2v_train = w2v_cmd->add_subcommand("train");
    w2v_train->add_option("--input", cfg.input)->required();
    w2v_train->add_option("--dim", cfg.w2v_dim);
    w2v_train->add_option("--window", cfg.w2v_window);
    w2v_train->add_option("--negatives", cfg.w2v_negatives);
    w2v_train->add_option("--epochs", cfg.w2v_epochs);
    w2v_train->add_option("--seed", cfg.seed);
    w2v_train->add_option("--mode", cfg.vocab_mode);
    w2v_train->add_option("--out", cfg.out_dir)->required();

    auto* ae_cmd = app.add_subcommand("ae", "session autoencoder");
    auto* ae_train = ae_cmd->add_subcommand("train");
    ae_train->add_option("--input", cfg.input)->required();
    ae_train->add_option("--rows", cfg.ae_rows);
    ae_train->add_option("--filters", cfg.ae_filters);
    ae_train->add_option("--embed", cfg.ae_embed);
    ae_train->add_option("--steps", cfg.ae_steps);
    ae_train->add_option("--seed", cfg.seed);
    ae_train->add_option("--mode", cfg.vocab_mode);
    ae_train->add_option("--out", cfg.out_dir)->required();
    auto* ae_encode = ae_cmd->add_subcommand("encode");
    ae_encode->add_option("--input", cfg.input)->required();
    ae_encode->add_option("--out", cfg.out_dir)->required();
    double gc_eps = 1e-5;
    size_t gc_samples = 200;
    auto* ae_gradcheck = ae_cmd->add_subcommand("gradcheck");
    ae_gradcheck->add_option("--rows", cfg.ae_rows);
    ae_gradcheck->add_option("--filters", cfg.ae_filters);
    ae_gradcheck->add_option("--embed", cfg.ae_embed);
    ae_gradcheck->add_option("--eps", gc_eps);
    ae_gradcheck->add_option("--samples", gc_samples);
    ae_gradcheck->add_option("--seed", cfg.seed);

    // cluster
    auto* cluster_cmd = app.add_subcommand("cluster", "clustering and scoring");
    auto* cl_kmeans = cluster_cmd->add_subcommand("kmeans");
    cl_kmeans->add_option("--input", cfg.input)->required();
    cl_kmeans->add_option("--k", cfg.kmeans_k);
    cl_kmeans->add_option("--restarts", cfg.kmeans_restarts);
    cl_kmeans->add_option("--seed", cfg.seed);
    cl_kmeans->add_option("--out", cfg.out_dir)->required();
    auto* cl_vdgmm = cluster_cmd->add_subcommand("vdgmm");
    cl_vdgmm->add_option("--input", cfg.input)->required();
    cl_vdgmm->add_option("--kmax", cfg.vdgmm_kmax);
    cl_vdgmm->add_option("--from", cfg.from_ts);
    cl_vdgmm->add_option("--to", cfg.to_ts);
    cl_vdgmm->add_option("--seed", cfg.seed);
    cl_vdgmm->add_option("--out", cfg.out_dir)->required();
    std::string truth_file, assignment_file;
    auto* cl_score = cluster_cmd->add_subcommand("score");
    cl_score->add_option("--assignments", assignment_file)->required();
    cl_score->add_option("--truth", truth_file)->required();

    // signals
    auto* signals_cmd = app.add_subcommand("signals", "L2 time-series analysis");
    auto* sig_build = signals_cmd->add_subcommand("build");
    sig_build->add_option("--embeddings", cfg.embeddings_file)->required();
    sig_build->add_option("--out", cfg.out_dir)->required();
    auto* sig_dist = signals_cmd->add_subcommand("distances");
    sig_dist->add_option("--embeddings", cfg.embeddings_file)->required();
    sig_dist->add_option("--ip", cfg.signal_ips)->required();
    sig_dist->add_option("--out", cfg.out_dir)->required();
    auto* sig_co = signals_cmd->add_subcommand("coactivity");
    sig_co->add_option("--embeddings", cfg.embeddings_file)->required();
    sig_co->add_option("--ips", cfg.signal_ips)->required();
    sig_co->add_option("--bin", cfg.coactivity_bin);
    sig_co->add_option("--out", cfg.out_dir)->required();

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "labeled synthetic corpora");
    auto* synth_gen = synth_cmd->add_subcommand("generate");
    synth_gen->add_option("--spec", cfg.synth_spec);
    synth_gen->add_option("--families", cfg.synth_families);
    synth_gen->add_option("--seed", cfg.seed);
    synth_gen->add_option("--out", cfg.out_dir)->required();

    // pipeline run
    auto* pipeline_cmd = app.add_subcommand("pipeline", "end-to-end runs");
    auto* pipe_run = pipeline_cmd->add_subcommand("run");
    pipe_run->add_option("--config", cli.config_file)->required();
    pipe_run->add_option("--out", cfg.out_dir, "override the config's out_dir");
    pipe_run->add_option("--seed-override", cfg.seed);

    CLI11_PARSE(app, argc, argv);

    try {
        if (corpus_build->parsed()) {
            cfg.pipeline = "corpus";
            auto records = [&] {
                std::ifstream in(cfg.input);
                if (!in) throw hc::IoError("cannot read " + cfg.input);
                std::vector<hc::MalformedLine> errors;
                auto recs = hc::parse_records(in, &errors);
                for (const auto& e : errors) std::cerr << "warning: " << e.what() << "\n";
                return recs;
            }();
            auto raw = cfg.level == "session" ? hc::per_session_documents(records)
                                              : hc::aggregate_by_ip(records);
            std::vector<std::vector<std::string>> token_docs;
            for (const auto& d : raw) token_docs.push_back(d.tokens);
            auto vocab = hc::build_vocabulary(token_docs, cfg.vocab_mode == "full"
                                                              ? hc::VocabMode::FULL
                                                              : hc::VocabMode::HAPAX_MERGED);
            fs::create_directories(cfg.out_dir);
            std::ofstream vout(fs::path(cfg.out_dir) / "vocab.tsv");
            vocab.save_tsv(vout);
            std::vector<hc::Document> docs;
            for (const auto& rd : raw) {
                hc::Document doc;
                doc.key = rd.key;
                doc.ts = rd.ts;
                doc.tokens = hc::encode_tokens(rd.tokens, vocab);
                doc.bow = hc::to_bow(doc.tokens);
                docs.push_back(std::move(doc));
            }
            hc::write_documents_jsonl(fs::path(cfg.out_dir) / "documents.jsonl", docs);
            std::cout << "wrote " << docs.size() << " documents, vocabulary size "
                      << vocab.size() << "\n";
        } else if (lda_train->parsed() || lda_embed->parsed()) {
            cfg.pipeline = "lda";
            auto outcome = hc::run_lda_pipeline(cfg);
            std::cout << "lda pipeline artifacts in " << outcome.out_dir.string() << "\n";
        } else if (w2v_train->parsed() || ae_train->parsed() || ae_encode->parsed()) {
            cfg.pipeline = "autoencoder";
            auto outcome = hc::run_autoencoder_pipeline(cfg);
            std::cout << "autoencoder pipeline artifacts in " << outcome.out_dir.string()
                      << " (effective_K=" << outcome.effective_k << ")\n";
        } else if (ae_gradcheck->parsed()) {
            hc::AeDims dims{cfg.ae_rows, 8, cfg.ae_filters, cfg.ae_embed};
            auto params = hc::init_autoencoder(dims, cfg.seed);
            hc::SessionMatrix x;
            x.rows = dims.N;
            x.cols = dims.h;
            x.len = dims.N;
            x.x.resize(dims.N * dims.h);
            hc::Rng rng = hc::make_rng(cfg.seed);
            for (auto& v : x.x) v = hc::uniform01(rng) - 0.5;
            double err = hc::gradient_check(params, x, gc_eps, gc_samples, cfg.seed);
            std::cout << "max relative gradient error: " << err << "\n";
            return err < 1e-4 ? 0 : 1;
        } else if (cl_kmeans->parsed() || cl_vdgmm->parsed()) {
            // Input: embeddings file (BEMB) produced by a pipeline run.
            auto embs = hc::load_embeddings(cfg.input);
            hc::Points pts;
            pts.n = embs.size();
            pts.d = embs.empty() ? 0 : embs.front().y.size();
            std::vector<std::string> keys;
            for (const auto& e : embs) {
                pts.data.insert(pts.data.end(), e.y.begin(), e.y.end());
                keys.push_back(e.key);
            }
            fs::create_directories(cfg.out_dir);
            if (cl_kmeans->parsed()) {
                auto km = hc::kmeans(pts, std::min<uint32_t>(cfg.kmeans_k, uint32_t(pts.n)),
                                     cfg.kmeans_iters, cfg.seed, cfg.kmeans_restarts);
                hc::write_assignment_csv(fs::path(cfg.out_dir) / "assignments.csv", keys,
                                         km.assignment);
                std::cout << "inertia " << km.inertia << "\n";
            } else {
                hc::VdgmmConfig vc;
                vc.Kmax = std::min<uint32_t>(cfg.vdgmm_kmax, uint32_t(pts.n));
                vc.seed = cfg.seed;
                auto gm = hc::vdgmm(pts, vc);
                hc::write_assignment_csv(fs::path(cfg.out_dir) / "assignments.csv", keys,
                                         gm.labels());
                std::cout << "effective_K " << gm.effective_K << "\n";
            }
        } else if (cl_score->parsed()) {
            auto a = hc::read_assignment_csv(assignment_file);
            auto b = hc::read_assignment_csv(truth_file);
            auto scores = hc::agreement(a, b);
            std::cout << "ARI " << scores.ari << " NMI " << scores.nmi << " purity "
                      << scores.purity << "\n";
        } else if (sig_build->parsed() || sig_dist->parsed() || sig_co->parsed()) {
            cfg.pipeline = "signals";
            if (sig_dist->parsed() || sig_build->parsed()) cfg.coactivity_bin = 86400;
            auto outcome = hc::run_signals(cfg);
            std::cout << "signals artifacts in " << outcome.out_dir.string() << "\n";
        } else if (synth_gen->parsed()) {
            cfg.pipeline = "synth";
            auto outcome = hc::run_synth(cfg);
            std::cout << "synthetic corpus in " << outcome.out_dir.string() << "\n";
        } else if (pipe_run->parsed()) {
            cli.load_config_file();
            if (cli.cfg.threads == 1) cli.cfg.threads = default_threads();
            auto outcome = hc::run_pipeline(cli.cfg);
            std::cout << "pipeline '" << cli.cfg.pipeline << "' artifacts in "
                      << outcome.out_dir.string() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
