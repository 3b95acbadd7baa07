#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hc/autoencoder.hpp"
#include "hc/lda.hpp"
#include "hc/w2v.hpp"

namespace hc {

// Little-endian binary model files, identified by 4-byte magic.
void save_lda(const std::filesystem::path& path, const LdaModel& model);       // "LDA1"
LdaModel load_lda(const std::filesystem::path& path);

void save_w2v(const std::filesystem::path& path, const W2VModel& model);       // "W2V1"
W2VModel load_w2v(const std::filesystem::path& path);

void save_autoencoder(const std::filesystem::path& path, const AutoencoderParams& p);  // "SAE1"
AutoencoderParams load_autoencoder(const std::filesystem::path& path);

// "BEMB": u32 rows, u32 cols, f32 row-major, plus sidecar CSV key,ts,row_index.
void save_embeddings(const std::filesystem::path& path, const std::vector<SessionEmbedding>& embs);
std::vector<SessionEmbedding> load_embeddings(const std::filesystem::path& path);

void write_theta_csv(const std::filesystem::path& path, const std::vector<ThetaEmbedding>& thetas);
void write_assignment_csv(const std::filesystem::path& path, const std::vector<std::string>& keys,
                          const std::vector<uint32_t>& assignment);
std::map<std::string, uint32_t> read_assignment_csv(const std::filesystem::path& path);

void write_documents_jsonl(const std::filesystem::path& path, const std::vector<Document>& docs);
std::vector<Document> read_documents_jsonl(const std::filesystem::path& path);

// FNV-1a over file bytes, hex string; used for manifests and rerun checks.
std::string file_checksum(const std::filesystem::path& path);
std::string string_checksum(const std::string& bytes);

}  // namespace hc
