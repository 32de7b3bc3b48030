#pragma once

// Dictionary-based entity tagging and linking, and an entity-level search
// over an inverted document index.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "phraseqa/corpus.hpp"

namespace phraseqa {

enum class EntityType { disease, drug, gene, species, other };

std::string_view to_string(EntityType t) noexcept;
std::optional<EntityType> parse_entity_type(std::string_view s) noexcept;

struct Concept {
    std::string cui;
    std::string canonical_name;
    EntityType etype = EntityType::other;
    std::vector<std::string> synonyms; // includes canonical_name
};

class EntityDictionary {
public:
    /// Adds a concept; canonical_name is added as a synonym. Throws Error if
    /// the cui exists or any synonym already maps to another cui.
    void add(Concept c);

    const Concept* lookup(std::string_view normalized_key) const;
    const Concept* find_cui(std::string_view cui) const;
    const std::vector<Concept>& concepts() const noexcept { return concepts_; }
    std::size_t max_tokens() const noexcept { return max_tokens_; }
    bool empty() const noexcept { return concepts_.empty(); }

    /// Normalized tokens of `surface` joined by single spaces.
    static std::string key_of(std::string_view surface);

    /// Line-delimited {cui, canonical_name, etype, synonyms: [..]}.
    static EntityDictionary parse(std::istream& in);
    static EntityDictionary load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

private:
    std::vector<Concept> concepts_;
    std::unordered_map<std::string, std::size_t> by_key_;
    std::unordered_map<std::string, std::size_t> by_cui_;
    std::size_t max_tokens_ = 0;
};

struct EntityMention {
    std::string doc_id;
    std::uint32_t sent_index = 0;
    CharSpan char_span;
    std::string surface;
    std::string cui;
    std::string canonical_name;
    EntityType etype = EntityType::other;
    std::string link_url;

    friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

/// Case-insensitive leftmost-longest matching on token boundaries. Spans are
/// offset by `base`; the returned mentions are disjoint and sorted.
std::vector<EntityMention> tag_mentions(std::string_view text, const EntityDictionary& dict, std::size_t base = 0);

/// Tags one analyzed sentence of `doc` (spans are abstract offsets).
std::vector<EntityMention> tag_sentence(const Document& doc, const AnalyzedSentence& sentence,
                                        const EntityDictionary& dict);

/// CTD detail page for MeSH-style ids (D/C prefix), NCBI Taxonomy for
/// numeric ids, empty otherwise.
std::string link_url_for(std::string_view cui, EntityType etype);

/// Throws Error when the surface is not in the dictionary.
std::pair<std::string, std::string> link_mention(const EntityMention& mention, const EntityDictionary& dict);

/// Mentions grouped by (doc_id, sent_index).
class MentionTable {
public:
    void add(EntityMention m);
    const std::vector<EntityMention>& at(std::string_view doc_id, std::uint32_t sent_index) const;
    std::size_t size() const noexcept { return count_; }
    std::vector<EntityMention> all() const;

    /// Line-delimited mention records.
    void save(const std::filesystem::path& path) const;
    static MentionTable load(const std::filesystem::path& path);

private:
    std::map<std::pair<std::string, std::uint32_t>, std::vector<EntityMention>, std::less<>> by_sentence_;
    std::size_t count_ = 0;
};

MentionTable tag_corpus(const Corpus& corpus, const EntityDictionary& dict);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct EntitySearchResult {
    std::string cui;
    std::string canonical_name;
    EntityType etype = EntityType::other;
    double score = 0.0;
    std::vector<std::string> doc_ids; // largest contributions first

    friend bool operator==(const EntitySearchResult&, const EntitySearchResult&) = default;
};

/// Inverted index of abstract unigrams plus per-document entity counts.
class EntityIndex {
public:
    struct Posting {
        std::uint32_t doc = 0;
        std::uint32_t tf = 0;
        friend bool operator==(const Posting&, const Posting&) = default;
    };
    struct EntityInfo {
        std::string cui;
        std::string canonical_name;
        EntityType etype = EntityType::other;
        friend bool operator==(const EntityInfo&, const EntityInfo&) = default;
    };
    struct EntityCount {
        std::uint32_t entity = 0; // into entities()
        std::uint32_t count = 0;
        friend bool operator==(const EntityCount&, const EntityCount&) = default;
    };

    std::size_t num_docs() const noexcept { return doc_ids_.size(); }
    const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
    const std::vector<std::uint32_t>& doc_lengths() const noexcept { return doc_lengths_; }
    const std::map<std::string, std::vector<Posting>, std::less<>>& postings() const noexcept { return postings_; }
    const std::vector<EntityInfo>& entities() const noexcept { return entities_; }
    /// Per document, sorted by entity ordinal.
    const std::vector<std::vector<EntityCount>>& doc_entities() const noexcept { return doc_entities_; }

    std::uint32_t count(std::string_view cui, std::string_view doc_id) const;

    /// score(e) = sum over docs of BM25(query, d) * ln(1 + count(e, d)),
    /// descending, ties by cui. At most `max_support` doc ids per result.
    std::vector<EntitySearchResult> search(std::string_view query, std::size_t top_k, const Bm25Params& params = {},
                                           std::size_t max_support = 5) const;

    void save(const std::filesystem::path& path) const;
    static EntityIndex load(const std::filesystem::path& path);

    friend bool operator==(const EntityIndex&, const EntityIndex&) = default;

private:
    friend EntityIndex build_entity_index(const Corpus&, const EntityDictionary&);

    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    std::map<std::string, std::vector<Posting>, std::less<>> postings_;
    std::vector<EntityInfo> entities_; // sorted by cui
    std::vector<std::vector<EntityCount>> doc_entities_;
};

EntityIndex build_entity_index(const Corpus& corpus, const EntityDictionary& dict);

/// Non-punctuation lowercased unigrams, the unit of the term index.
std::vector<std::string> index_terms(std::string_view text);

} // namespace phraseqa
