#include "phraseqa/service.hpp"

#include <chrono>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include "phraseqa/hashing.hpp"
#include "phraseqa/text.hpp"

namespace phraseqa {

using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

constexpr const char* kIndexFiles[] = {"header.bin", "postings.bin", "entries.bin", "entities.json"};

} // namespace

Date today_utc() {
    const auto days = std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now());
    const std::chrono::year_month_day ymd{days};
    return Date{int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day())};
}

Engine::Engine(Corpus corpus, PhraseIndex index, EntityIndex entities, MentionTable mentions, std::string version)
    : corpus_(std::move(corpus)),
      index_(std::move(index)),
      entities_(std::move(entities)),
      mentions_(std::move(mentions)),
      encoder_(index_.config().encoder, index_.idf()),
      version_(std::move(version)) {}

std::shared_ptr<const Engine> Engine::open(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw Error("index directory " + dir.string() + " does not exist");
    }
    auto corpus = load_corpus(dir / "corpus.jsonl");
    auto index = PhraseIndex::load(dir);
    auto entities = EntityIndex::load(dir / "entities.json");
    auto mentions = MentionTable::load(dir / "mentions.jsonl");
    return std::make_shared<const Engine>(std::move(corpus), std::move(index), std::move(entities),
                                          std::move(mentions), compute_index_version(dir));
}

AskResponse Engine::ask(std::string_view query, const AskOptions& opts) const {
    if (opts.k == 0) {
        throw QueryError("bad_parameter", 400, "k must be >= 1");
    }
    const auto t_start = Clock::now();
    AskResponse resp;
    resp.query = std::string(query);
    resp.index_version = version_;

    auto t = Clock::now();
    const auto q = encoder_.encode_query(query);
    resp.timing.encode_ms = ms_since(t);
    if (q.degenerate) {
        throw QueryError("degenerate_query", 400, "query contains no searchable words");
    }

    // Entity search does not depend on the phrase pipeline.
    auto entity_future = std::async(std::launch::async, [&] {
        const auto t0 = Clock::now();
        auto results = entities_.search(query, opts.entity_top_k, opts.bm25);
        return std::make_pair(std::move(results), ms_since(t0));
    });

    t = Clock::now();
    const auto hits = index_.search_dense(q.dense.span(), std::max(opts.rerank_depth, opts.k), opts.nprobe);
    resp.timing.search_ms = ms_since(t);

    t = Clock::now();
    auto ranked = rerank_sparse(hits, q, opts.lambda, index_);
    resp.timing.rerank_ms = ms_since(t);

    t = Clock::now();
    ranked = blend_metadata(std::move(ranked), index_, corpus_, opts.metadata, opts.now.value_or(today_utc()));
    resp.timing.metadata_ms = ms_since(t);

    t = Clock::now();
    resp.phrase_results = assemble_answers(ranked, index_, corpus_, mentions_, opts.k);
    resp.timing.assemble_ms = ms_since(t);

    auto [entity_results, entity_ms] = entity_future.get();
    resp.entity_results = std::move(entity_results);
    resp.timing.entity_ms = entity_ms;
    resp.timing.total_ms = ms_since(t_start);
    return resp;
}

std::shared_ptr<const Engine> EngineHandle::get() const {
    std::lock_guard lock(mu_);
    return engine_;
}

void EngineHandle::reset(std::shared_ptr<const Engine> engine) {
    std::lock_guard lock(mu_);
    engine_ = std::move(engine);
}

void EngineHandle::reload(const std::filesystem::path& dir) {
    auto fresh = Engine::open(dir);
    reset(std::move(fresh));
}

std::string compute_index_version(const std::filesystem::path& dir) {
    std::uint64_t h = fnv1a64("phraseqa-index");
    for (const char* name : kIndexFiles) {
        std::ifstream in(dir / name, std::ios::binary);
        if (!in) {
            throw Error("missing index file " + (dir / name).string());
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        h = splitmix64(h ^ fnv1a64(buf.str()));
    }
    std::ostringstream os;
    os << "v1-" << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

BuildSummary build_artifacts(const std::filesystem::path& corpus_path, const std::filesystem::path& out_dir,
                             const BuildOptions& opts) {
    BuildSummary summary;
    std::vector<LoadIssue> issues;
    auto corpus = load_corpus(corpus_path, opts.load, &issues);
    summary.skipped_lines = issues.size();
    if (opts.recent_after) {
        corpus = filter_recent(corpus, *opts.recent_after);
    }
    if (corpus.empty()) {
        throw Error("no documents to index");
    }
    summary.documents = corpus.size();

    EntityDictionary dict;
    if (opts.dictionary) {
        dict = EntityDictionary::load(*opts.dictionary);
    }

    auto idf = build_idf(corpus, opts.index.encoder);
    IndexInput input;
    IndexConfig cfg = opts.index;
    if (opts.vectors) {
        const auto vectors = import_vectors(*opts.vectors, corpus);
        if (vectors.empty()) {
            throw Error("vector file contains no records");
        }
        input = input_from_vectors(corpus, vectors, std::move(idf));
        cfg.encoder.dense_dim = input.entries.front().dense.dim();
    } else {
        const Encoder encoder(cfg.encoder, std::move(idf));
        input = encode_corpus(corpus, encoder);
    }
    summary.sentences = input.sentences.size();
    summary.phrases = input.entries.size();
    auto index = build_index(std::move(input), cfg, &summary.index);

    std::filesystem::create_directories(out_dir);
    save_corpus(out_dir / "corpus.jsonl", corpus);
    index.save(out_dir);
    dict.save(out_dir / "dictionary.jsonl");
    const auto mentions = tag_corpus(corpus, dict);
    mentions.save(out_dir / "mentions.jsonl");
    summary.mentions = mentions.size();
    const auto entity_index = build_entity_index(corpus, dict);
    entity_index.save(out_dir / "entities.json");
    summary.entities = entity_index.entities().size();
    summary.version = compute_index_version(out_dir);

    json manifest{{"format", "phraseqa-index"},
                  {"version", summary.version},
                  {"documents", summary.documents},
                  {"sentences", summary.sentences},
                  {"phrases", summary.phrases},
                  {"num_centroids", summary.index.num_centroids},
                  {"mentions", summary.mentions},
                  {"entities", summary.entities},
                  {"recent_after", opts.recent_after ? json(opts.recent_after->to_string()) : json(nullptr)}};
    std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << '\n';
    return summary;
}

json error_json(std::string_view code, std::string_view message) {
    return json{{"schema_version", kResponseSchemaVersion},
                {"error", {{"code", std::string(code)}, {"message", std::string(message)}}}};
}

json to_json(const AskResponse& r, bool include_timing) {
    json j;
    j["schema_version"] = kResponseSchemaVersion;
    j["query"] = r.query;
    j["index_version"] = r.index_version;

    json phrases = json::array();
    for (std::size_t i = 0; i < r.phrase_results.size(); ++i) {
        const auto& a = r.phrase_results[i];
        json entities = json::array();
        for (const auto& m : a.entities) {
            entities.push_back({{"surface", m.surface},
                                {"start", m.char_span.begin},
                                {"end", m.char_span.end},
                                {"start_utf16", utf16_offset(a.sentence_text, m.char_span.begin)},
                                {"end_utf16", utf16_offset(a.sentence_text, m.char_span.end)},
                                {"cui", m.cui},
                                {"canonical_name", m.canonical_name},
                                {"etype", std::string(to_string(m.etype))},
                                {"link_url", m.link_url}});
        }
        phrases.push_back({{"rank", i + 1},
                           {"phrase_id", a.phrase_id},
                           {"doc_id", a.doc_id},
                           {"sent_index", a.sent_index},
                           {"phrase_text", a.phrase_text},
                           {"sentence_text", a.sentence_text},
                           {"answer_start", a.answer_span.begin},
                           {"answer_end", a.answer_span.end},
                           {"answer_start_utf16", utf16_offset(a.sentence_text, a.answer_span.begin)},
                           {"answer_end_utf16", utf16_offset(a.sentence_text, a.answer_span.end)},
                           {"title", a.title},
                           {"date", a.date ? json(a.date->to_string()) : json(nullptr)},
                           {"venue", a.venue ? json(*a.venue) : json(nullptr)},
                           {"url", a.url ? json(*a.url) : json(nullptr)},
                           {"authors", a.authors},
                           {"scores",
                            {{"dense", a.scores.dense_score},
                             {"sparse", a.scores.sparse_score},
                             {"metadata", a.scores.metadata_score},
                             {"total", a.scores.total}}},
                           {"entities", std::move(entities)}});
    }
    j["phrase_results"] = std::move(phrases);

    json ents = json::array();
    for (const auto& e : r.entity_results) {
        ents.push_back({{"cui", e.cui},
                        {"canonical_name", e.canonical_name},
                        {"etype", std::string(to_string(e.etype))},
                        {"score", e.score},
                        {"doc_ids", e.doc_ids}});
    }
    j["entity_results"] = std::move(ents);

    if (include_timing) {
        j["timing_ms"] = {{"encode", r.timing.encode_ms},     {"search", r.timing.search_ms},
                          {"rerank", r.timing.rerank_ms},     {"metadata", r.timing.metadata_ms},
                          {"assemble", r.timing.assemble_ms}, {"entity", r.timing.entity_ms},
                          {"total", r.timing.total_ms}};
    }
    return j;
}

} // namespace phraseqa
