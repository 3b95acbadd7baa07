#include "hc/io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace hc {

namespace {

std::ofstream open_out(const std::filesystem::path& path, bool binary = true) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary = true) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw IoError("cannot read " + path.string());
    return in;
}

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("truncated file");
    return v;
}

void expect_magic(std::istream& in, const char* magic, const std::filesystem::path& path) {
    char buf[4];
    in.read(buf, 4);
    if (!in || std::string(buf, 4) != magic)
        throw IoError(path.string() + ": bad magic, expected " + magic);
}

}  // namespace

void save_lda(const std::filesystem::path& path, const LdaModel& model) {
    auto out = open_out(path);
    out.write("LDA1", 4);
    put<uint32_t>(out, model.K);
    put<uint32_t>(out, model.V);
    put<double>(out, model.alpha);
    put<double>(out, model.beta);
    out.write(reinterpret_cast<const char*>(model.phi.data()),
              std::streamsize(model.phi.size() * sizeof(double)));
}

LdaModel load_lda(const std::filesystem::path& path) {
    auto in = open_in(path);
    expect_magic(in, "LDA1", path);
    LdaModel model;
    model.K = get<uint32_t>(in);
    model.V = get<uint32_t>(in);
    model.alpha = get<double>(in);
    model.beta = get<double>(in);
    model.phi.resize(size_t(model.K) * model.V);
    in.read(reinterpret_cast<char*>(model.phi.data()),
            std::streamsize(model.phi.size() * sizeof(double)));
    if (!in) throw IoError(path.string() + ": truncated phi block");
    return model;
}

void save_w2v(const std::filesystem::path& path, const W2VModel& model) {
    auto out = open_out(path);
    out.write("W2V1", 4);
    put<uint32_t>(out, model.V);
    put<uint32_t>(out, model.dim);
    out.write(reinterpret_cast<const char*>(model.input.data()),
              std::streamsize(model.input.size() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(model.output.data()),
              std::streamsize(model.output.size() * sizeof(float)));
}

W2VModel load_w2v(const std::filesystem::path& path) {
    auto in = open_in(path);
    expect_magic(in, "W2V1", path);
    W2VModel model;
    model.V = get<uint32_t>(in);
    model.dim = get<uint32_t>(in);
    size_t n = size_t(model.V) * model.dim;
    model.input.resize(n);
    model.output.resize(n);
    in.read(reinterpret_cast<char*>(model.input.data()), std::streamsize(n * sizeof(float)));
    in.read(reinterpret_cast<char*>(model.output.data()), std::streamsize(n * sizeof(float)));
    if (!in) throw IoError(path.string() + ": truncated matrices");
    return model;
}

void save_autoencoder(const std::filesystem::path& path, const AutoencoderParams& p) {
    auto out = open_out(path);
    out.write("SAE1", 4);
    put<uint32_t>(out, uint32_t(p.dims.N));
    put<uint32_t>(out, uint32_t(p.dims.h));
    put<uint32_t>(out, uint32_t(p.dims.F));
    put<uint32_t>(out, uint32_t(p.dims.M));
    put<uint64_t>(out, p.seed);
    put<uint8_t>(out, p.linear_mode ? 1 : 0);
    put<uint64_t>(out, p.theta.size());
    out.write(reinterpret_cast<const char*>(p.theta.data()),
              std::streamsize(p.theta.size() * sizeof(double)));
}

AutoencoderParams load_autoencoder(const std::filesystem::path& path) {
    auto in = open_in(path);
    expect_magic(in, "SAE1", path);
    AutoencoderParams p;
    p.dims.N = get<uint32_t>(in);
    p.dims.h = get<uint32_t>(in);
    p.dims.F = get<uint32_t>(in);
    p.dims.M = get<uint32_t>(in);
    p.seed = get<uint64_t>(in);
    p.linear_mode = get<uint8_t>(in) != 0;
    p.theta.resize(get<uint64_t>(in));
    in.read(reinterpret_cast<char*>(p.theta.data()),
            std::streamsize(p.theta.size() * sizeof(double)));
    if (!in) throw IoError(path.string() + ": truncated parameter block");
    return p;
}

void save_embeddings(const std::filesystem::path& path,
                     const std::vector<SessionEmbedding>& embs) {
    auto out = open_out(path);
    out.write("BEMB", 4);
    uint32_t rows = uint32_t(embs.size());
    uint32_t cols = embs.empty() ? 0 : uint32_t(embs.front().y.size());
    put<uint32_t>(out, rows);
    put<uint32_t>(out, cols);
    for (const auto& e : embs) {
        for (double v : e.y) put<float>(out, float(v));
    }
    auto side = open_out(path.string() + ".csv", false);
    side << "key,ts,row_index\n";
    for (size_t i = 0; i < embs.size(); ++i) {
        side << embs[i].key << "," << embs[i].ts << "," << i << "\n";
    }
}

std::vector<SessionEmbedding> load_embeddings(const std::filesystem::path& path) {
    auto in = open_in(path);
    expect_magic(in, "BEMB", path);
    uint32_t rows = get<uint32_t>(in);
    uint32_t cols = get<uint32_t>(in);
    std::vector<SessionEmbedding> embs(rows);
    for (auto& e : embs) {
        e.y.resize(cols);
        for (auto& v : e.y) v = double(get<float>(in));
    }
    auto side = open_in(path.string() + ".csv", false);
    std::string line;
    std::getline(side, line);  // header
    size_t i = 0;
    while (std::getline(side, line) && i < rows) {
        size_t c1 = line.find(','), c2 = line.rfind(',');
        if (c1 == std::string::npos || c2 <= c1) throw IoError("bad sidecar line: " + line);
        embs[i].key = line.substr(0, c1);
        embs[i].ts = std::stoll(line.substr(c1 + 1, c2 - c1 - 1));
        ++i;
    }
    if (i != rows) throw IoError(path.string() + ".csv: row count mismatch");
    return embs;
}

void write_theta_csv(const std::filesystem::path& path,
                     const std::vector<ThetaEmbedding>& thetas) {
    auto out = open_out(path, false);
    out.precision(17);
    for (const auto& t : thetas) {
        out << t.key;
        for (double v : t.theta) out << "," << v;
        out << "\n";
    }
}

void write_assignment_csv(const std::filesystem::path& path, const std::vector<std::string>& keys,
                          const std::vector<uint32_t>& assignment) {
    auto out = open_out(path, false);
    out << "key,cluster_id\n";
    for (size_t i = 0; i < keys.size(); ++i) out << keys[i] << "," << assignment[i] << "\n";
}

std::map<std::string, uint32_t> read_assignment_csv(const std::filesystem::path& path) {
    auto in = open_in(path, false);
    std::map<std::string, uint32_t> out;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        size_t c = line.rfind(',');
        if (c == std::string::npos) continue;
        out[line.substr(0, c)] = uint32_t(std::stoul(line.substr(c + 1)));
    }
    return out;
}

void write_documents_jsonl(const std::filesystem::path& path, const std::vector<Document>& docs) {
    auto out = open_out(path, false);
    for (const auto& doc : docs) {
        nlohmann::json j{{"key", doc.key}, {"ts", doc.ts}, {"tokens", doc.tokens}};
        out << j.dump() << "\n";
    }
}

std::vector<Document> read_documents_jsonl(const std::filesystem::path& path) {
    auto in = open_in(path, false);
    std::vector<Document> docs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        Document doc;
        doc.key = j.at("key").get<std::string>();
        doc.ts = j.at("ts").get<int64_t>();
        doc.tokens = j.at("tokens").get<std::vector<TokenId>>();
        doc.bow = to_bow(doc.tokens);
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::string string_checksum(const std::string& bytes) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_checksum(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return string_checksum(ss.str());
}

}  // namespace hc
