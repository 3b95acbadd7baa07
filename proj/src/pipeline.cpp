#include "hc/pipeline.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hc/autoencoder.hpp"
#include "hc/io.hpp"
#include "hc/kmeans.hpp"
#include "hc/lda.hpp"
#include "hc/signals.hpp"
#include "hc/synth.hpp"
#include "hc/vdgmm.hpp"
#include "hc/w2v.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hc {

namespace {

json config_to_jsonobj(const PipelineConfig& c) {
    return json{
        {"input", c.input}, {"out_dir", c.out_dir}, {"pipeline", c.pipeline},
        {"seed", c.seed}, {"threads", c.threads},
        {"vocab_mode", c.vocab_mode}, {"level", c.level},
        {"lda_topics", c.lda_topics}, {"lda_alpha", c.lda_alpha}, {"lda_beta", c.lda_beta},
        {"lda_iters", c.lda_iters}, {"infer_iters", c.infer_iters},
        {"kmeans_k", c.kmeans_k}, {"kmeans_iters", c.kmeans_iters},
        {"kmeans_restarts", c.kmeans_restarts},
        {"w2v_dim", c.w2v_dim}, {"w2v_window", c.w2v_window},
        {"w2v_negatives", c.w2v_negatives}, {"w2v_epochs", c.w2v_epochs}, {"w2v_lr", c.w2v_lr},
        {"ae_rows", c.ae_rows}, {"ae_filters", c.ae_filters}, {"ae_embed", c.ae_embed},
        {"ae_steps", c.ae_steps}, {"ae_batch", c.ae_batch}, {"ae_lr", c.ae_lr},
        {"vdgmm_kmax", c.vdgmm_kmax}, {"vdgmm_tol", c.vdgmm_tol},
        {"vdgmm_iters", c.vdgmm_iters}, {"from_ts", c.from_ts}, {"to_ts", c.to_ts},
        {"signal_ips", c.signal_ips}, {"coactivity_bin", c.coactivity_bin},
        {"embeddings_file", c.embeddings_file},
        {"synth_spec", c.synth_spec}, {"synth_families", c.synth_families},
        {"excerpt_bytes", c.excerpt_bytes},
    };
}

// Tracks artifact checksums; a stage may be skipped when a previous run with
// the same config left a matching artifact behind.
class Manifest {
public:
    Manifest(const fs::path& dir, const PipelineConfig& cfg) : dir_(dir) {
        config_sum_ = string_checksum(PipelineConfig(cfg).to_json());
        fs::path old_path = dir_ / "manifest.json";
        if (fs::exists(old_path)) {
            std::ifstream in(old_path);
            json old = json::parse(in, nullptr, false);
            if (!old.is_discarded() && old.value("config_checksum", "") == config_sum_) {
                old_ = old;
            }
        }
        fresh_["config_checksum"] = config_sum_;
        fresh_["seed"] = cfg.seed;
        if (!cfg.input.empty() && fs::exists(cfg.input)) {
            fresh_["inputs"] = {{cfg.input, file_checksum(cfg.input)}};
        }
        fresh_["artifacts"] = json::object();
    }

    bool reusable(const std::string& name) const {
        if (!old_.contains("artifacts") || !old_["artifacts"].contains(name)) return false;
        fs::path p = dir_ / name;
        return fs::exists(p) && file_checksum(p) == old_["artifacts"][name].get<std::string>();
    }

    void record(const std::string& name) {
        fresh_["artifacts"][name] = file_checksum(dir_ / name);
    }

    void save() const {
        std::ofstream out(dir_ / "manifest.json");
        out << fresh_.dump(2) << "\n";
    }

private:
    fs::path dir_;
    std::string config_sum_;
    json old_;
    json fresh_;
};

std::vector<SessionRecord> load_input(const PipelineConfig& cfg) {
    if (!fs::exists(cfg.input)) throw IoError("input file does not exist: " + cfg.input);
    std::ifstream in(cfg.input);
    std::vector<MalformedLine> errors;
    auto records = parse_records(in, &errors, false);
    if (records.empty()) throw EmptyCorpus(cfg.input);
    return records;
}

void echo_config(const PipelineConfig& cfg, const fs::path& dir) {
    std::ofstream out(dir / "config.echo.json");
    out << cfg.to_json() << "\n";
}

std::map<std::string, std::string> raw_text_by_key(const std::vector<SessionRecord>& records,
                                                   bool per_session) {
    std::map<std::string, std::string> text;
    if (per_session) {
        auto sorted = sort_sessions(records);
        std::unordered_map<std::string, size_t> next;
        for (const auto& rec : sorted) {
            std::string key = SessionId{rec.ip, next[rec.ip]++}.str();
            std::string body;
            for (const auto& line : rec.commands) body += line + "\n";
            text[key] = body;
        }
    } else {
        for (const auto& rec : sort_sessions(records)) {
            auto& body = text[rec.ip];
            for (const auto& line : rec.commands) body += line + "\n";
        }
    }
    return text;
}

Vocabulary build_and_save_vocab(const std::vector<RawDocument>& raw, const PipelineConfig& cfg,
                                const fs::path& dir, Manifest& manifest) {
    std::vector<std::vector<std::string>> token_docs;
    token_docs.reserve(raw.size());
    for (const auto& doc : raw) token_docs.push_back(doc.tokens);
    VocabMode mode = cfg.vocab_mode == "full" ? VocabMode::FULL : VocabMode::HAPAX_MERGED;
    Vocabulary vocab = build_vocabulary(token_docs, mode);
    std::ofstream out(dir / "vocab.tsv");
    vocab.save_tsv(out);
    out.close();
    manifest.record("vocab.tsv");
    return vocab;
}

std::vector<Document> encode_documents(const std::vector<RawDocument>& raw,
                                       const Vocabulary& vocab, const fs::path& dir,
                                       Manifest& manifest) {
    std::vector<Document> docs;
    docs.reserve(raw.size());
    for (const auto& rd : raw) {
        Document doc;
        doc.key = rd.key;
        doc.ts = rd.ts;
        doc.tokens = encode_tokens(rd.tokens, vocab);
        doc.bow = to_bow(doc.tokens);
        docs.push_back(std::move(doc));
    }
    write_documents_jsonl(dir / "documents.jsonl", docs);
    manifest.record("documents.jsonl");
    return docs;
}

}  // namespace

std::string PipelineConfig::to_json() const { return config_to_jsonobj(*this).dump(2); }

PipelineConfig PipelineConfig::from_json(const std::string& text) {
    json j = json::parse(text);
    PipelineConfig c;
    json known = config_to_jsonobj(c);
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw Error("unknown config key: " + key);
    }
    auto s = [&](const char* k, std::string& dst) { if (j.contains(k)) dst = j[k].get<std::string>(); };
    auto u32 = [&](const char* k, uint32_t& dst) { if (j.contains(k)) dst = j[k].get<uint32_t>(); };
    auto i64 = [&](const char* k, int64_t& dst) { if (j.contains(k)) dst = j[k].get<int64_t>(); };
    auto f64 = [&](const char* k, double& dst) { if (j.contains(k)) dst = j[k].get<double>(); };
    s("input", c.input); s("out_dir", c.out_dir); s("pipeline", c.pipeline);
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("threads")) c.threads = j["threads"].get<int>();
    s("vocab_mode", c.vocab_mode); s("level", c.level);
    u32("lda_topics", c.lda_topics); f64("lda_alpha", c.lda_alpha); f64("lda_beta", c.lda_beta);
    u32("lda_iters", c.lda_iters); u32("infer_iters", c.infer_iters);
    u32("kmeans_k", c.kmeans_k); u32("kmeans_iters", c.kmeans_iters);
    u32("kmeans_restarts", c.kmeans_restarts);
    u32("w2v_dim", c.w2v_dim); u32("w2v_window", c.w2v_window);
    u32("w2v_negatives", c.w2v_negatives); u32("w2v_epochs", c.w2v_epochs);
    f64("w2v_lr", c.w2v_lr);
    u32("ae_rows", c.ae_rows); u32("ae_filters", c.ae_filters); u32("ae_embed", c.ae_embed);
    u32("ae_steps", c.ae_steps); u32("ae_batch", c.ae_batch); f64("ae_lr", c.ae_lr);
    u32("vdgmm_kmax", c.vdgmm_kmax); f64("vdgmm_tol", c.vdgmm_tol);
    u32("vdgmm_iters", c.vdgmm_iters); i64("from_ts", c.from_ts); i64("to_ts", c.to_ts);
    s("signal_ips", c.signal_ips); i64("coactivity_bin", c.coactivity_bin);
    s("embeddings_file", c.embeddings_file);
    s("synth_spec", c.synth_spec); u32("synth_families", c.synth_families);
    u32("excerpt_bytes", c.excerpt_bytes);
    return c;
}

PipelineConfig PipelineConfig::from_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

PipelineOutcome run_lda_pipeline(const PipelineConfig& cfg) {
    auto records = load_input(cfg);
    fs::create_directories(cfg.out_dir);
    fs::path dir = cfg.out_dir;
    Manifest manifest(dir, cfg);
    echo_config(cfg, dir);

    bool per_session = cfg.level == "session";
    auto raw = per_session ? per_session_documents(records) : aggregate_by_ip(records);
    Vocabulary vocab = build_and_save_vocab(raw, cfg, dir, manifest);
    auto docs = encode_documents(raw, vocab, dir, manifest);

    std::vector<Bow> bows;
    std::vector<std::string> keys;
    for (const auto& d : docs) {
        bows.push_back(d.bow);
        keys.push_back(d.key);
    }

    LdaModel model;
    if (manifest.reusable("lda.model")) {
        model = load_lda(dir / "lda.model");
    } else {
        LdaConfig lc;
        lc.K = cfg.lda_topics;
        lc.alpha = cfg.lda_alpha;
        lc.beta = cfg.lda_beta;
        lc.iters = cfg.lda_iters;
        lc.seed = derive_seed(cfg.seed, "lda-train");
        model = train_lda(bows, uint32_t(vocab.size()), lc);
        save_lda(dir / "lda.model", model);
    }
    manifest.record("lda.model");

    auto thetas = embed_corpus(model, keys, bows, cfg.infer_iters,
                               derive_seed(cfg.seed, "lda-embed"), cfg.threads);
    write_theta_csv(dir / "theta.csv", thetas);
    manifest.record("theta.csv");

    Points pts;
    pts.n = thetas.size();
    pts.d = model.K;
    pts.data.reserve(pts.n * pts.d);
    for (const auto& t : thetas) pts.data.insert(pts.data.end(), t.theta.begin(), t.theta.end());

    uint32_t k = std::min<uint32_t>(cfg.kmeans_k, uint32_t(pts.n));
    auto km = kmeans(pts, k, cfg.kmeans_iters, derive_seed(cfg.seed, "kmeans"),
                     cfg.kmeans_restarts);
    write_assignment_csv(dir / "assignments.csv", keys, km.assignment);
    manifest.record("assignments.csv");

    auto report = make_report(keys, km.assignment, pts, raw_text_by_key(records, per_session),
                              cfg.excerpt_bytes);
    std::ofstream rep(dir / "report.txt");
    write_report(rep, report);
    rep.close();
    manifest.record("report.txt");
    manifest.save();

    return PipelineOutcome{dir, {"vocab.tsv", "documents.jsonl", "lda.model", "theta.csv",
                                 "assignments.csv", "report.txt", "manifest.json"}, 0};
}

PipelineOutcome run_autoencoder_pipeline(const PipelineConfig& cfg) {
    auto records = load_input(cfg);
    fs::create_directories(cfg.out_dir);
    fs::path dir = cfg.out_dir;
    Manifest manifest(dir, cfg);
    echo_config(cfg, dir);

    auto raw = per_session_documents(records);  // session level by definition
    Vocabulary vocab = build_and_save_vocab(raw, cfg, dir, manifest);
    auto docs = encode_documents(raw, vocab, dir, manifest);

    std::vector<std::vector<TokenId>> token_lists;
    std::vector<uint64_t> counts(vocab.size(), 0);
    for (const auto& d : docs) {
        token_lists.push_back(d.tokens);
        for (TokenId id : d.tokens) counts[id]++;
    }

    W2VModel w2v;
    if (manifest.reusable("w2v.model")) {
        w2v = load_w2v(dir / "w2v.model");
    } else {
        W2VConfig wc;
        wc.dim = cfg.w2v_dim;
        wc.window = cfg.w2v_window;
        wc.negatives = cfg.w2v_negatives;
        wc.epochs = cfg.w2v_epochs;
        wc.lr = float(cfg.w2v_lr);
        wc.seed = derive_seed(cfg.seed, "w2v");
        w2v = train_sgns(token_lists, uint32_t(vocab.size()), counts, wc);
        save_w2v(dir / "w2v.model", w2v);
    }
    manifest.record("w2v.model");

    AeDims dims{cfg.ae_rows, cfg.w2v_dim, cfg.ae_filters, cfg.ae_embed};
    AutoencoderParams ae;
    if (manifest.reusable("ae.model")) {
        ae = load_autoencoder(dir / "ae.model");
    } else {
        std::vector<SessionMatrix> matrices;
        matrices.reserve(docs.size());
        for (const auto& d : docs) {
            auto sm = embed_session_matrix(w2v, d.tokens, dims.N);
            sm.key = d.key;
            sm.ts = d.ts;
            matrices.push_back(std::move(sm));
        }
        AeTrainConfig tc;
        tc.steps = cfg.ae_steps;
        tc.batch = cfg.ae_batch;
        tc.lr = cfg.ae_lr;
        tc.seed = derive_seed(cfg.seed, "autoencoder");
        ae = train_autoencoder(matrices, dims, tc).params;
        save_autoencoder(dir / "ae.model", ae);
    }
    manifest.record("ae.model");

    auto embeddings = encode_corpus(w2v, ae, raw, vocab, cfg.threads);
    save_embeddings(dir / "embeddings.bemb", embeddings);
    manifest.record("embeddings.bemb");
    manifest.record("embeddings.bemb.csv");

    // Optional bounded-period filter before clustering.
    std::vector<size_t> kept;
    for (size_t i = 0; i < embeddings.size(); ++i) {
        int64_t ts = embeddings[i].ts;
        if (cfg.from_ts >= 0 && ts < cfg.from_ts) continue;
        if (cfg.to_ts >= 0 && ts >= cfg.to_ts) continue;
        kept.push_back(i);
    }
    if (kept.empty())
        throw EmptyWindow("[" + std::to_string(cfg.from_ts) + ", " + std::to_string(cfg.to_ts) + ")");

    Points pts;
    pts.n = kept.size();
    pts.d = cfg.ae_embed;
    std::vector<std::string> keys;
    for (size_t i : kept) {
        pts.data.insert(pts.data.end(), embeddings[i].y.begin(), embeddings[i].y.end());
        keys.push_back(embeddings[i].key);
    }

    VdgmmConfig vc;
    vc.Kmax = std::min<uint32_t>(cfg.vdgmm_kmax, uint32_t(pts.n));
    vc.tol = cfg.vdgmm_tol;
    vc.max_iters = cfg.vdgmm_iters;
    vc.seed = derive_seed(cfg.seed, "vdgmm");
    auto gm = vdgmm(pts, vc);
    auto labels = gm.labels();

    json summary{{"effective_K", gm.effective_K},
                 {"Kmax", gm.Kmax},
                 {"covariance", gm.covariance == CovarianceType::Full ? "full" : "diagonal"},
                 {"final_elbo", gm.elbo_trace.back()},
                 {"iterations", gm.iterations},
                 {"weights", gm.weights},
                 {"means", gm.means}};
    std::ofstream vj(dir / "vdgmm.json");
    vj << summary.dump(2) << "\n";
    vj.close();
    manifest.record("vdgmm.json");

    write_assignment_csv(dir / "assignments.csv", keys, labels);
    manifest.record("assignments.csv");

    auto report = make_report(keys, labels, pts, raw_text_by_key(records, true),
                              cfg.excerpt_bytes);
    std::ofstream rep(dir / "report.txt");
    write_report(rep, report);
    rep.close();
    manifest.record("report.txt");
    manifest.save();

    return PipelineOutcome{dir, {"vocab.tsv", "documents.jsonl", "w2v.model", "ae.model",
                                 "embeddings.bemb", "vdgmm.json", "assignments.csv",
                                 "report.txt", "manifest.json"}, gm.effective_K};
}

PipelineOutcome run_signals(const PipelineConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    fs::path dir = cfg.out_dir;
    fs::path emb_path = cfg.embeddings_file.empty() ? dir / "embeddings.bemb"
                                                    : fs::path(cfg.embeddings_file);
    if (!fs::exists(emb_path)) throw IoError("embeddings artifact missing: " + emb_path.string());
    auto embeddings = load_embeddings(emb_path);
    auto signals = build_signals(embeddings);
    echo_config(cfg, dir);

    std::set<std::string> wanted;
    if (!cfg.signal_ips.empty()) {
        std::istringstream ss(cfg.signal_ips);
        std::string ip;
        while (std::getline(ss, ip, ',')) {
            if (ip.empty()) continue;
            bool known = false;
            for (const auto& sig : signals) known = known || sig.ip == ip;
            if (!known) throw UnknownIp(ip);
            wanted.insert(ip);
        }
    }

    PipelineOutcome outcome{dir, {}, 0};
    std::vector<const Signal*> selected;
    for (const auto& sig : signals) {
        if (!wanted.empty() && !wanted.count(sig.ip)) continue;
        selected.push_back(&sig);
        auto series = distance_series(sig);
        std::string name = "distances_" + sig.ip + ".csv";
        std::ofstream out(dir / name);
        out.precision(17);
        out << "ts,d\n";
        for (const auto& [ts, d] : series.points) out << ts << "," << d << "\n";
        outcome.artifacts.push_back(name);
    }

    std::ofstream co(dir / "coactivity.csv");
    co.precision(17);
    co << "ip_a,ip_b,jaccard\n";
    for (size_t i = 0; i < selected.size(); ++i) {
        for (size_t j = i + 1; j < selected.size(); ++j) {
            co << selected[i]->ip << "," << selected[j]->ip << ","
               << co_activity(*selected[i], *selected[j], cfg.coactivity_bin) << "\n";
        }
    }
    outcome.artifacts.push_back("coactivity.csv");
    return outcome;
}

PipelineOutcome run_synth(const PipelineConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    fs::path dir = cfg.out_dir;

    std::vector<FamilySpec> specs;
    if (!cfg.synth_spec.empty()) {
        std::ifstream in(cfg.synth_spec);
        if (!in) throw IoError("cannot read spec: " + cfg.synth_spec);
        specs = load_spec(in);
    } else {
        specs = default_spec(cfg.synth_families);
    }
    auto corpus = generate(specs, cfg.seed);
    echo_config(cfg, dir);

    std::ofstream sessions(dir / "sessions.jsonl");
    for (const auto& rec : corpus.records) {
        sessions << json{{"ip", rec.ip}, {"ts", rec.ts}, {"commands", rec.commands}}.dump()
                 << "\n";
    }
    std::ofstream truth(dir / "truth.csv");
    truth << "ip,family\n";
    for (const auto& [ip, fam] : corpus.ip_truth) truth << ip << "," << fam << "\n";
    std::ofstream st(dir / "session_truth.csv");
    st << "session_id,family,template\n";
    for (const auto& [sid, ft] : corpus.session_truth) {
        st << sid << "," << ft.first << "," << ft.second << "\n";
    }
    return PipelineOutcome{dir, {"sessions.jsonl", "truth.csv", "session_truth.csv"}, 0};
}

PipelineOutcome run_pipeline(const PipelineConfig& cfg) {
    if (cfg.pipeline == "lda") return run_lda_pipeline(cfg);
    if (cfg.pipeline == "autoencoder") return run_autoencoder_pipeline(cfg);
    if (cfg.pipeline == "signals") return run_signals(cfg);
    if (cfg.pipeline == "synth") return run_synth(cfg);
    throw Error("unknown pipeline: " + cfg.pipeline);
}

}  // namespace hc
