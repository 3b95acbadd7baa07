#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "hc/errors.hpp"

namespace hc {

// One captured intrusion session: who, when, and the raw command lines.
struct SessionRecord {
    std::string ip;
    int64_t ts = 0;
    std::vector<std::string> commands;
};

// Per-IP session ordinal in time order (ties broken by input order).
// Rendered as "{ip}-{index}"; index 4 is the 5th session of that IP.
struct SessionId {
    std::string ip;
    size_t index = 0;

    std::string str() const { return ip + "-" + std::to_string(index); }
    bool operator==(const SessionId&) const = default;
};

// Splits one shell command line into tokens. Redirection operators collapse
// to "_r_", pipes/conjunctions to "_p_"/"_P_"/"_a_"/"_A_", then the line is
// split on [;,"() ] and empty pieces are dropped. Total and deterministic.
std::vector<std::string> tokenize(const std::string& line);

std::vector<std::string> tokenize_session(const SessionRecord& rec);

enum class VocabMode { FULL, HAPAX_MERGED };

using TokenId = uint32_t;
using Bow = std::map<TokenId, uint32_t>;  // sparse id -> count

class Vocabulary {
public:
    static constexpr TokenId PAD = 0;
    static constexpr TokenId HAPAX = 1;

    VocabMode mode = VocabMode::FULL;

    // Ids are dense: reserved 0/1, then first-occurrence order. In
    // HAPAX_MERGED mode every token with corpus frequency 1 maps to HAPAX.
    TokenId id_of(const std::string& token) const;  // throws Error if absent
    bool contains(const std::string& token) const { return token_to_id_.count(token) > 0; }
    const std::string& token_of(TokenId id) const;
    uint64_t count_of(TokenId id) const { return counts_.at(id); }
    size_t size() const { return id_to_token_.size(); }  // includes PAD and HAPAX

    void save_tsv(std::ostream& out) const;
    static Vocabulary load_tsv(std::istream& in);

    friend Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& docs,
                                       VocabMode mode);

private:
    std::unordered_map<std::string, TokenId> token_to_id_;
    std::vector<std::string> id_to_token_;  // reserved ids render as "<pad>", "<hapax>"
    std::vector<uint64_t> counts_;
};

// A bag-of-words document at either aggregation level.
struct Document {
    std::string key;  // ip, or SessionId string
    int64_t ts = 0;   // first session ts (session-level docs carry their own)
    std::vector<TokenId> tokens;
    Bow bow;
};

// Parses newline-delimited JSON records {"ip": str, "ts": int, "commands": [str...]}.
// Malformed lines are collected into `errors` with 1-based line numbers; with
// strict=true the first malformed line throws instead.
std::vector<SessionRecord> parse_records(std::istream& in, std::vector<MalformedLine>* errors,
                                         bool strict = false);

// Stable (ts, input order) sort of record indices, grouped per ip.
std::vector<SessionRecord> sort_sessions(std::vector<SessionRecord> records);

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& docs, VocabMode mode);

// Maps token strings to ids under the vocabulary's unknown-token policy:
// FULL drops unknowns, HAPAX_MERGED maps them to HAPAX.
std::vector<TokenId> encode_tokens(const std::vector<std::string>& tokens, const Vocabulary& vocab);

Bow to_bow(const std::vector<TokenId>& ids);
Bow to_bow(const std::vector<std::string>& tokens, const Vocabulary& vocab);

// One document per distinct ip; tokens are that ip's sessions concatenated in
// ascending ts (ties by input order). Token strings, pre-vocabulary.
struct RawDocument {
    std::string key;
    int64_t ts = 0;
    std::vector<std::string> tokens;
};

std::vector<RawDocument> aggregate_by_ip(const std::vector<SessionRecord>& records);
std::vector<RawDocument> per_session_documents(const std::vector<SessionRecord>& records);

// Session ids in the same order as per_session_documents.
std::vector<SessionId> session_ids(const std::vector<SessionRecord>& records);

}  // namespace hc
