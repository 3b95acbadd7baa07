#include "hc/corpus.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

namespace hc {

namespace {

// Left-to-right non-overlapping replace, same semantics as str.replace.
void replace_all(std::string& s, std::string_view from, std::string_view to) {
    std::string out;
    out.reserve(s.size());
    size_t pos = 0;
    while (true) {
        size_t hit = s.find(from, pos);
        if (hit == std::string::npos) break;
        out.append(s, pos, hit - pos);
        out.append(to);
        pos = hit + from.size();
    }
    out.append(s, pos, std::string::npos);
    s = std::move(out);
}

// Alternation order matters: longer redirection forms win at equal start.
constexpr std::string_view kRedirs[] = {"2>&1", ">&", "&>", ">|", ">>", "0>", "1>", "2>"};

std::string collapse_redirections(const std::string& line) {
    std::string out;
    out.reserve(line.size() + 8);
    size_t i = 0;
    while (i < line.size()) {
        bool matched = false;
        for (std::string_view pat : kRedirs) {
            if (line.compare(i, pat.size(), pat) == 0) {
                out += " _r_ ";
                i += pat.size();
                matched = true;
                break;
            }
        }
        if (!matched) out += line[i++];
    }
    return out;
}

bool is_separator(char c) {
    return c == ';' || c == ',' || c == '"' || c == '(' || c == ')' || c == ' ';
}

}  // namespace

std::vector<std::string> tokenize(const std::string& line) {
    std::string s = collapse_redirections(line);
    replace_all(s, ">", " > ");
    replace_all(s, "<", " < ");
    replace_all(s, "=", " = ");
    replace_all(s, "||", " _P_ ");
    replace_all(s, "|", " _p_ ");
    replace_all(s, "&&", " _A_ ");
    replace_all(s, "&", " _a_ ");

    std::vector<std::string> tokens;
    std::string cur;
    for (char c : s) {
        if (is_separator(c)) {
            if (!cur.empty()) tokens.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::vector<std::string> tokenize_session(const SessionRecord& rec) {
    std::vector<std::string> all;
    for (const auto& line : rec.commands) {
        auto toks = tokenize(line);
        all.insert(all.end(), std::make_move_iterator(toks.begin()),
                   std::make_move_iterator(toks.end()));
    }
    return all;
}

std::vector<SessionRecord> parse_records(std::istream& in, std::vector<MalformedLine>* errors,
                                         bool strict) {
    std::vector<SessionRecord> records;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fail = [&](const std::string& msg) {
            MalformedLine err(line_no, msg);
            if (strict) throw err;
            if (errors) errors->push_back(err);
        };
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            fail("not a JSON object");
            continue;
        }
        if (!j.contains("ip") || !j["ip"].is_string() || j["ip"].get<std::string>().empty() ||
            !j.contains("ts") || !j["ts"].is_number_integer() || j["ts"].get<int64_t>() < 0 ||
            !j.contains("commands") || !j["commands"].is_array()) {
            fail("missing or invalid field (need ip: str, ts: int >= 0, commands: [str])");
            continue;
        }
        SessionRecord rec;
        rec.ip = j["ip"].get<std::string>();
        rec.ts = j["ts"].get<int64_t>();
        bool ok = true;
        for (const auto& c : j["commands"]) {
            if (!c.is_string()) {
                fail("commands entries must be strings");
                ok = false;
                break;
            }
            rec.commands.push_back(c.get<std::string>());
        }
        if (ok) records.push_back(std::move(rec));
    }
    return records;
}

std::vector<SessionRecord> sort_sessions(std::vector<SessionRecord> records) {
    std::stable_sort(records.begin(), records.end(),
                     [](const SessionRecord& a, const SessionRecord& b) {
                         if (a.ip != b.ip) return a.ip < b.ip;
                         return a.ts < b.ts;
                     });
    return records;
}

TokenId Vocabulary::id_of(const std::string& token) const {
    auto it = token_to_id_.find(token);
    if (it == token_to_id_.end()) throw Error("token not in vocabulary: " + token);
    return it->second;
}

const std::string& Vocabulary::token_of(TokenId id) const {
    if (id >= id_to_token_.size()) throw Error("token id out of range");
    return id_to_token_[id];
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& docs, VocabMode mode) {
    if (docs.empty()) throw EmptyCorpus("build_vocabulary needs at least one document");

    // Phase 1: corpus frequencies, remembering first-occurrence order.
    std::unordered_map<std::string, uint64_t> freq;
    std::vector<const std::string*> order;
    for (const auto& doc : docs) {
        for (const auto& tok : doc) {
            auto [it, inserted] = freq.try_emplace(tok, 0);
            it->second++;
            if (inserted) order.push_back(&it->first);
        }
    }

    // Phase 2: deterministic id assignment.
    Vocabulary v;
    v.mode = mode;
    v.id_to_token_ = {"<pad>", "<hapax>"};
    v.counts_ = {0, 0};
    for (const std::string* tok : order) {
        uint64_t n = freq[*tok];
        if (mode == VocabMode::HAPAX_MERGED && n == 1) {
            v.token_to_id_[*tok] = Vocabulary::HAPAX;
            v.counts_[Vocabulary::HAPAX] += 1;
        } else {
            TokenId id = static_cast<TokenId>(v.id_to_token_.size());
            v.token_to_id_[*tok] = id;
            v.id_to_token_.push_back(*tok);
            v.counts_.push_back(n);
        }
    }
    return v;
}

std::vector<TokenId> encode_tokens(const std::vector<std::string>& tokens,
                                   const Vocabulary& vocab) {
    std::vector<TokenId> ids;
    ids.reserve(tokens.size());
    for (const auto& tok : tokens) {
        if (vocab.contains(tok)) {
            ids.push_back(vocab.id_of(tok));
        } else if (vocab.mode == VocabMode::HAPAX_MERGED) {
            ids.push_back(Vocabulary::HAPAX);
        }
        // FULL mode: unknown tokens dropped.
    }
    return ids;
}

Bow to_bow(const std::vector<TokenId>& ids) {
    Bow bow;
    for (TokenId id : ids) bow[id]++;
    return bow;
}

Bow to_bow(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
    return to_bow(encode_tokens(tokens, vocab));
}

std::vector<RawDocument> aggregate_by_ip(const std::vector<SessionRecord>& records) {
    auto sorted = sort_sessions(records);
    std::vector<RawDocument> docs;
    // Keep first-seen ip order from the original input for stable output.
    std::unordered_map<std::string, size_t> slot;
    for (const auto& rec : records) {
        if (slot.try_emplace(rec.ip, docs.size()).second) {
            docs.push_back(RawDocument{rec.ip, rec.ts, {}});
        }
    }
    for (const auto& rec : sorted) {
        auto& doc = docs[slot[rec.ip]];
        doc.ts = std::min(doc.ts, rec.ts);
        auto toks = tokenize_session(rec);
        doc.tokens.insert(doc.tokens.end(), toks.begin(), toks.end());
    }
    return docs;
}

std::vector<RawDocument> per_session_documents(const std::vector<SessionRecord>& records) {
    auto sorted = sort_sessions(records);
    std::vector<RawDocument> docs;
    docs.reserve(sorted.size());
    std::unordered_map<std::string, size_t> next_index;
    for (const auto& rec : sorted) {
        SessionId sid{rec.ip, next_index[rec.ip]++};
        docs.push_back(RawDocument{sid.str(), rec.ts, tokenize_session(rec)});
    }
    return docs;
}

std::vector<SessionId> session_ids(const std::vector<SessionRecord>& records) {
    auto sorted = sort_sessions(records);
    std::vector<SessionId> ids;
    ids.reserve(sorted.size());
    std::unordered_map<std::string, size_t> next_index;
    for (const auto& rec : sorted) ids.push_back(SessionId{rec.ip, next_index[rec.ip]++});
    return ids;
}

namespace {

std::string escape_token(const std::string& tok) {
    std::string out;
    for (char c : tok) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            default: out += c;
        }
    }
    return out;
}

std::string unescape_token(const std::string& s) {
    std::string out;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            char n = s[++i];
            out += (n == 't') ? '\t' : (n == 'n') ? '\n' : n;
        } else {
            out += s[i];
        }
    }
    return out;
}

}  // namespace

void Vocabulary::save_tsv(std::ostream& out) const {
    out << "#mode\t" << (mode == VocabMode::FULL ? "full" : "hapax") << "\n";
    for (size_t id = 0; id < id_to_token_.size(); ++id) {
        out << id << "\t" << escape_token(id_to_token_[id]) << "\t" << counts_[id] << "\n";
    }
}

Vocabulary Vocabulary::load_tsv(std::istream& in) {
    Vocabulary v;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            v.mode = line.find("hapax") != std::string::npos ? VocabMode::HAPAX_MERGED
                                                             : VocabMode::FULL;
            continue;
        }
        size_t t1 = line.find('\t');
        size_t t2 = line.rfind('\t');
        if (t1 == std::string::npos || t2 == t1) throw IoError("bad vocabulary line: " + line);
        TokenId id = static_cast<TokenId>(std::stoul(line.substr(0, t1)));
        std::string tok = unescape_token(line.substr(t1 + 1, t2 - t1 - 1));
        uint64_t count = std::stoull(line.substr(t2 + 1));
        if (id != v.id_to_token_.size()) throw IoError("non-dense vocabulary ids");
        v.id_to_token_.push_back(tok);
        v.counts_.push_back(count);
        if (id >= 2) v.token_to_id_[tok] = id;
    }
    if (v.id_to_token_.size() < 2) throw IoError("vocabulary file missing reserved ids");
    return v;
}

}  // namespace hc
