#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "phraseqa/config.hpp"
#include "phraseqa/http_server.hpp"
#include "phraseqa/service.hpp"
#include "support.hpp"

using namespace phraseqa;
using json = nlohmann::json;

namespace {

const char* kCorpus =
    R"({"doc_id":"d1","title":"Remdesivir trial","abstract":"Remdesivir shortened recovery time in hospitalized adults. There is no cure for COVID-19 and the vaccine development is estimated to require 12-18 months.","date":"2020-05-22","venue":"NEJM","impact_factor":70.6,"authors":["J. Beigel"],"url":"https://example.org/d1"}
{"doc_id":"d2","title":"Masks","abstract":"Face masks reduce transmission of SARS-CoV-2. Heart disease increases mortality risk among patients.","date":"2020-06-01"}
{"doc_id":"d3","title":"Incubation","abstract":"The incubation period lasts up to 14 days. Most infections are mild. Café workers with cardiovascular disease were at risk.","date":"2020-03-10"}
{"doc_id":"d4","title":"Old","abstract":"Coronaviruses cause colds in humans.","date":"2019-11-01"}
)";

const char* kDictionary = R"({"cui":"D000086382","canonical_name":"COVID-19","etype":"disease","synonyms":["covid-19"]}
{"cui":"D006331","canonical_name":"Heart Diseases","etype":"disease","synonyms":["heart disease"]}
{"cui":"D002318","canonical_name":"Cardiovascular Diseases","etype":"disease","synonyms":["cardiovascular disease"]}
{"cui":"C000606551","canonical_name":"remdesivir","etype":"drug","synonyms":[]}
{"cui":"2697049","canonical_name":"SARS-CoV-2","etype":"species","synonyms":[]}
{"cui":"9606","canonical_name":"Homo sapiens","etype":"species","synonyms":["humans","patients"]}
)";

struct Built {
    std::filesystem::path dir;
    BuildSummary summary;
};

Built build_fixture(const std::string& name, std::optional<Date> recent_after = std::nullopt) {
    const auto dir = test::scratch_dir(name);
    std::ofstream(dir / "corpus.jsonl") << kCorpus;
    std::ofstream(dir / "dict.jsonl") << kDictionary;
    BuildOptions opts;
    opts.index.num_centroids = 8;
    opts.dictionary = dir / "dict.jsonl";
    opts.recent_after = recent_after;
    auto summary = build_artifacts(dir / "corpus.jsonl", dir / "index", opts);
    return {dir / "index", summary};
}

AskOptions fixed_options() {
    AskOptions o;
    o.now = Date{2020, 7, 1};
    return o;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST(Config, DefaultsMatchDocumentedValues) {
    const Settings s;
    EXPECT_EQ(s.ask.k, 10u);
    EXPECT_EQ(s.ask.nprobe, 64u);
    EXPECT_EQ(s.ask.lambda, 1.0);
    EXPECT_EQ(s.ask.rerank_depth, 100u);
    EXPECT_TRUE(s.ask.metadata.all_zero());
    EXPECT_EQ(s.index.num_centroids, 1024u);
}

TEST(Config, FileThenEnvOverrides) {
    Settings s;
    apply_config(s, json{{"k", 5}, {"lambda", 0.5}, {"host", "127.0.0.1"}, {"skip_malformed", true}});
    EXPECT_EQ(s.ask.k, 5u);
    EXPECT_EQ(s.ask.lambda, 0.5);
    EXPECT_EQ(s.host, "127.0.0.1");
    EXPECT_TRUE(s.skip_malformed);
    const std::map<std::string, std::string> env{{"PHRASEQA_K", "7"}, {"PHRASEQA_NPROBE", "3"}, {"PHRASEQA_HOST", "localhost"},
                                                 {"PHRASEQA_W_RECENCY", "0.25"}};
    apply_env(s, [&](const char* name) -> const char* {
        auto it = env.find(name);
        return it == env.end() ? nullptr : it->second.c_str();
    });
    EXPECT_EQ(s.ask.k, 7u);
    EXPECT_EQ(s.ask.nprobe, 3u);
    EXPECT_EQ(s.host, "localhost");
    EXPECT_EQ(s.ask.metadata.recency, 0.25);
    EXPECT_EQ(s.ask.lambda, 0.5);
}

TEST(Config, RejectsUnknownAndIllTyped) {
    Settings s;
    EXPECT_THROW(apply_config(s, json{{"nprobes", 3}}), Error);
    EXPECT_THROW(apply_config(s, json{{"k", -1}}), Error);
    EXPECT_THROW(apply_config(s, json{{"k", "ten"}}), Error);
    EXPECT_THROW(apply_config(s, json{{"skip_malformed", 1}}), Error);
    EXPECT_THROW(apply_config(s, json::array()), Error);
    EXPECT_THROW(apply_env(s, [](const char* n) -> const char* { return std::string(n) == "PHRASEQA_PORT" ? "http" : nullptr; }),
                 Error);
}

TEST(Config, EveryKeyRoundTrips) {
    Settings a;
    a.ask.k = 3;
    a.index.encoder.context_weight = 0.5f;
    const auto j = settings_to_json(a);
    EXPECT_EQ(j.size(), setting_keys().size());
    Settings b;
    apply_config(b, j);
    EXPECT_EQ(settings_to_json(b), j);
}

TEST(Build, WritesArtifactsAndSummary) {
    const auto b = build_fixture("svc_build");
    for (const char* f : {"corpus.jsonl", "header.bin", "postings.bin", "entries.bin", "dictionary.jsonl", "mentions.jsonl",
                          "entities.json", "manifest.json"}) {
        EXPECT_TRUE(std::filesystem::exists(b.dir / f)) << f;
    }
    EXPECT_EQ(b.summary.documents, 4u);
    EXPECT_EQ(b.summary.sentences, 8u);
    EXPECT_EQ(b.summary.index.num_centroids, 8u);
    EXPECT_GT(b.summary.mentions, 0u);
    EXPECT_EQ(b.summary.version, compute_index_version(b.dir));
    const auto manifest = json::parse(read_file(b.dir / "manifest.json"));
    EXPECT_EQ(manifest["version"], b.summary.version);
}

TEST(Build, RecentAfterFilters) {
    const auto b = build_fixture("svc_recent", Date{2020, 1, 1});
    EXPECT_EQ(b.summary.documents, 3u);
    const auto engine = Engine::open(b.dir);
    EXPECT_FALSE(engine->corpus().find("d4"));
}

TEST(Build, RebuildIsByteIdentical) {
    const auto a = build_fixture("svc_det_a");
    const auto b = build_fixture("svc_det_b");
    for (const auto& e : std::filesystem::directory_iterator(a.dir)) {
        EXPECT_EQ(read_file(e.path()), read_file(b.dir / e.path().filename())) << e.path().filename();
    }
    EXPECT_EQ(a.summary.version, b.summary.version);
}

TEST(Engine, AnswersPlantedSentenceFirst) {
    const auto b = build_fixture("svc_ask");
    const auto engine = Engine::open(b.dir);
    const auto r = engine->ask("Is there a cure for COVID-19?", fixed_options());
    ASSERT_FALSE(r.phrase_results.empty());
    EXPECT_EQ(r.phrase_results[0].doc_id, "d1");
    EXPECT_EQ(r.phrase_results[0].sent_index, 1u);
    EXPECT_EQ(r.index_version, engine->version());
    ASSERT_FALSE(r.entity_results.empty());
}

TEST(Engine, ResponseInvariants) {
    const auto b = build_fixture("svc_inv");
    const auto engine = Engine::open(b.dir);
    for (const char* q : {"heart disease mortality", "incubation period", "masks", "cafe workers risk", "zzzz qqqq"}) {
        for (std::size_t k : {1, 3, 10}) {
            auto opts = fixed_options();
            opts.k = k;
            const auto r = engine->ask(q, opts);
            EXPECT_LE(r.phrase_results.size(), k);
            for (double t : {r.timing.encode_ms, r.timing.search_ms, r.timing.rerank_ms, r.timing.metadata_ms,
                             r.timing.assemble_ms, r.timing.entity_ms, r.timing.total_ms}) {
                EXPECT_GE(t, 0.0);
            }
            for (const auto& a : r.phrase_results) {
                ASSERT_LE(a.answer_span.end, a.sentence_text.size());
                EXPECT_EQ(a.sentence_text.substr(a.answer_span.begin, a.answer_span.size()), a.phrase_text);
                for (const auto& m : a.entities) {
                    EXPECT_EQ(a.sentence_text.substr(m.char_span.begin, m.char_span.size()), m.surface);
                }
            }
        }
    }
}

TEST(Engine, DegenerateQueryIsStructuredError) {
    const auto b = build_fixture("svc_degenerate");
    const auto engine = Engine::open(b.dir);
    for (const char* q : {"", "  ", "?!"}) {
        try {
            engine->ask(q, fixed_options());
            FAIL() << q;
        } catch (const QueryError& e) {
            EXPECT_EQ(e.code(), "degenerate_query");
            EXPECT_EQ(e.http_status(), 400);
        }
    }
}

TEST(Engine, RepeatableAndConcurrent) {
    const auto b = build_fixture("svc_conc");
    const auto engine = Engine::open(b.dir);
    const std::vector<std::string> qs{"cure", "heart disease", "masks transmission", "incubation 14 days", "recovery"};
    std::vector<std::string> serial;
    for (const auto& q : qs) serial.push_back(to_json(engine->ask(q, fixed_options()), false).dump());
    for (const auto& q : qs) EXPECT_EQ(to_json(engine->ask(q, fixed_options()), false).dump(), serial[&q - &qs[0]]);

    std::vector<std::string> parallel(qs.size() * 4);
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            for (std::size_t i = 0; i < qs.size(); ++i) {
                parallel[t * qs.size() + i] = to_json(engine->ask(qs[i], fixed_options()), false).dump();
            }
        });
    }
    for (auto& th : threads) th.join();
    for (std::size_t i = 0; i < parallel.size(); ++i) EXPECT_EQ(parallel[i], serial[i % qs.size()]);
}

TEST(Engine, SaveLoadSameResponses) {
    const auto b = build_fixture("svc_rt");
    const auto first = Engine::open(b.dir);
    const auto copy = test::scratch_dir("svc_rt_copy");
    std::filesystem::copy(b.dir, copy, std::filesystem::copy_options::recursive);
    const auto second = Engine::open(copy);
    for (const char* q : {"cure", "heart disease", "cardiovascular disease", "vaccine development months"}) {
        EXPECT_EQ(to_json(first->ask(q, fixed_options()), false), to_json(second->ask(q, fixed_options()), false));
    }
}

TEST(Engine, OpenMissingDirectoryThrows) {
    EXPECT_THROW(Engine::open("/nonexistent/phraseqa"), Error);
}

TEST(Json, SchemaAndUtf16Offsets) {
    const auto b = build_fixture("svc_json");
    const auto engine = Engine::open(b.dir);
    const auto j = to_json(engine->ask("cardiovascular disease workers", fixed_options()));
    EXPECT_EQ(j["schema_version"], kResponseSchemaVersion);
    EXPECT_TRUE(j.contains("timing_ms"));
    ASSERT_FALSE(j["phrase_results"].empty());
    const auto& top = j["phrase_results"][0];
    EXPECT_EQ(top["rank"], 1);
    EXPECT_EQ(top["doc_id"], "d3");
    // "Café" is one byte longer in UTF-8 than in UTF-16
    const std::string sentence = top["sentence_text"];
    EXPECT_EQ(sentence.rfind("Caf\xC3\xA9", 0), 0u);
    const std::size_t start = top["answer_start"], start16 = top["answer_start_utf16"];
    if (start >= 5) {
        EXPECT_EQ(start16, start - 1);
    }
    EXPECT_FALSE(to_json(engine->ask("masks", fixed_options()), false).contains("timing_ms"));
}

TEST(Http, HandlerValidation) {
    const auto b = build_fixture("svc_http_handlers");
    EngineHandle empty;
    auto r = handle_ask(empty, {}, {{"q", "cure"}});
    EXPECT_EQ(r.status, 503);
    EXPECT_EQ(json::parse(r.body)["error"]["code"], "index_unavailable");
    EXPECT_EQ(handle_health(empty).status, 503);

    EngineHandle handle(Engine::open(b.dir));
    EXPECT_EQ(handle_ask(handle, {}, {}).status, 400);
    EXPECT_EQ(handle_ask(handle, {}, {{"q", "cure"}, {"k", "0"}}).status, 400);
    EXPECT_EQ(handle_ask(handle, {}, {{"q", "cure"}, {"k", "abc"}}).status, 400);
    EXPECT_EQ(handle_ask(handle, {}, {{"q", "cure"}, {"nprobe", "-2"}}).status, 400);
    r = handle_ask(handle, {}, {{"q", "???"}});
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(json::parse(r.body)["error"]["code"], "degenerate_query");
    r = handle_ask(handle, {}, {{"q", "cure"}, {"k", "2"}, {"nprobe", "1"}});
    EXPECT_EQ(r.status, 200);
    EXPECT_LE(json::parse(r.body)["phrase_results"].size(), 2u);
    const auto h = json::parse(handle_health(handle).body);
    EXPECT_EQ(h["status"], "ok");
    EXPECT_EQ(h["index_version"], handle.get()->version());
}

TEST(Http, ReloadSwapsEngine) {
    const auto a = build_fixture("svc_reload_a");
    const auto b = build_fixture("svc_reload_b", Date{2020, 1, 1});
    EngineHandle handle(Engine::open(a.dir));
    const auto before = handle.get();
    handle.reload(b.dir);
    EXPECT_NE(handle.get(), before);
    EXPECT_EQ(before->corpus().size(), 4u); // old snapshot stays valid
    EXPECT_EQ(handle.get()->corpus().size(), 3u);
    EXPECT_THROW(handle.reload("/nonexistent/phraseqa"), Error);
    EXPECT_EQ(handle.get()->corpus().size(), 3u);
}

TEST(Http, ServesOverLoopback) {
    const auto b = build_fixture("svc_http_live");
    EngineHandle handle(Engine::open(b.dir));
    ApiServer server(handle, fixed_options());
    const int port = server.bind("127.0.0.1", 0);
    ASSERT_GT(port, 0);
    std::thread th([&] { server.listen(); });

    httplib::Client client("127.0.0.1", port);
    auto health = client.Get("/api/health");
    for (int i = 0; i < 50 && !health; ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        health = client.Get("/api/health");
    }
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);
    auto ask = client.Get("/api/ask?q=is%20there%20a%20cure%20for%20covid-19&k=3&nprobe=8");
    ASSERT_TRUE(ask);
    EXPECT_EQ(ask->status, 200);
    EXPECT_EQ(ask->get_header_value("Access-Control-Allow-Origin"), "*");
    const auto j = json::parse(ask->body);
    EXPECT_EQ(j["query"], "is there a cure for covid-19");
    EXPECT_LE(j["phrase_results"].size(), 3u);
    auto bad = client.Get("/api/ask?k=3");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 400);

    server.stop();
    th.join();
}
