#pragma once

// Query orchestration over a built index directory: phrase answers
// (dense search, sparse re-rank, metadata blend, sentence assembly) and
// entity results, kept as two separate lists.

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "phraseqa/corpus.hpp"
#include "phraseqa/dense_index.hpp"
#include "phraseqa/encoder.hpp"
#include "phraseqa/entity.hpp"
#include "phraseqa/error.hpp"
#include "phraseqa/ranker.hpp"

namespace phraseqa {

inline constexpr int kResponseSchemaVersion = 1;

struct AskOptions {
    std::size_t k = 10;
    std::size_t nprobe = kDefaultNprobe;
    double lambda = kDefaultSparseWeight;
    std::size_t rerank_depth = kDefaultRerankDepth;
    MetadataWeights metadata;
    std::optional<Date> now; // defaults to today (UTC)
    std::size_t entity_top_k = 10;
    Bm25Params bm25;
};

struct StageTiming {
    double encode_ms = 0.0;
    double search_ms = 0.0;
    double rerank_ms = 0.0;
    double metadata_ms = 0.0;
    double assemble_ms = 0.0;
    double entity_ms = 0.0;
    double total_ms = 0.0;
};

struct AskResponse {
    std::string query;
    std::vector<Answer> phrase_results;
    std::vector<EntitySearchResult> entity_results;
    StageTiming timing;
    std::string index_version;
};

/// Request-level failure with a stable machine-readable code.
class QueryError : public Error {
public:
    QueryError(std::string code, int http_status, const std::string& what)
        : Error(what), code_(std::move(code)), status_(http_status) {}

    const std::string& code() const noexcept { return code_; }
    int http_status() const noexcept { return status_; }

private:
    std::string code_;
    int status_;
};

/// Immutable loaded artifacts; safe for concurrent ask() calls.
class Engine {
public:
    Engine(Corpus corpus, PhraseIndex index, EntityIndex entities, MentionTable mentions, std::string version);

    static std::shared_ptr<const Engine> open(const std::filesystem::path& dir);

    /// Throws QueryError("degenerate_query") when the query has no words.
    AskResponse ask(std::string_view query, const AskOptions& opts) const;

    const Corpus& corpus() const noexcept { return corpus_; }
    const PhraseIndex& index() const noexcept { return index_; }
    const EntityIndex& entity_index() const noexcept { return entities_; }
    const MentionTable& mentions() const noexcept { return mentions_; }
    const Encoder& encoder() const noexcept { return encoder_; }
    const std::string& version() const noexcept { return version_; }

private:
    Corpus corpus_;
    PhraseIndex index_;
    EntityIndex entities_;
    MentionTable mentions_;
    Encoder encoder_;
    std::string version_;
};

/// Holds the current engine; readers keep their snapshot alive while a
/// reload swaps in a new one.
class EngineHandle {
public:
    EngineHandle() = default;
    explicit EngineHandle(std::shared_ptr<const Engine> engine) : engine_(std::move(engine)) {}

    std::shared_ptr<const Engine> get() const;
    void reset(std::shared_ptr<const Engine> engine);
    /// Opens `dir` fully before swapping; on failure the old engine stays.
    void reload(const std::filesystem::path& dir);

private:
    mutable std::mutex mu_;
    std::shared_ptr<const Engine> engine_;
};

struct BuildOptions {
    std::optional<Date> recent_after;
    std::optional<std::filesystem::path> dictionary;
    std::optional<std::filesystem::path> vectors;
    IndexConfig index;
    LoadOptions load;
};

struct BuildSummary {
    std::size_t documents = 0;
    std::size_t skipped_lines = 0;
    std::size_t sentences = 0;
    std::size_t phrases = 0;
    std::size_t mentions = 0;
    std::size_t entities = 0;
    BuildReport index;
    std::string version;
};

/// Writes corpus.jsonl, header.bin, postings.bin, entries.bin,
/// dictionary.jsonl, mentions.jsonl, entities.json and manifest.json.
BuildSummary build_artifacts(const std::filesystem::path& corpus_path, const std::filesystem::path& out_dir,
                             const BuildOptions& opts);

/// Content hash of the persisted index files.
std::string compute_index_version(const std::filesystem::path& dir);

nlohmann::json to_json(const AskResponse& response, bool include_timing = true);
nlohmann::json error_json(std::string_view code, std::string_view message);

Date today_utc();

} // namespace phraseqa
