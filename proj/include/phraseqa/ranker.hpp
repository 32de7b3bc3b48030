#pragma once

// Sparse re-ranking of dense candidates, optional metadata blending, and
// sentence-level answer assembly.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phraseqa/corpus.hpp"
#include "phraseqa/dense_index.hpp"
#include "phraseqa/encoder.hpp"
#include "phraseqa/entity.hpp"

namespace phraseqa {

inline constexpr std::size_t kDefaultRerankDepth = 100;
inline constexpr double kDefaultSparseWeight = 1.0;

/// total == dense_score + lambda * sparse_score + metadata_score.
struct ScoredCandidate {
    std::uint32_t phrase_id = 0;
    double dense_score = 0.0;
    double sparse_score = 0.0;
    double metadata_score = 0.0;
    double total = 0.0;

    friend bool operator==(const ScoredCandidate&, const ScoredCandidate&) = default;
};

/// Higher total first, then lower phrase_id.
constexpr bool ranks_before(const ScoredCandidate& a, const ScoredCandidate& b) noexcept {
    return a.total > b.total || (a.total == b.total && a.phrase_id < b.phrase_id);
}

std::vector<ScoredCandidate> rerank_sparse(std::span<const SearchHit> candidates, const QueryVector& query,
                                           double lambda, const PhraseIndex& index);

struct MetadataWeights {
    double recency = 0.0;
    double impact = 0.0;
    double external = 0.0;
    double tau_days = 365.0;

    bool all_zero() const noexcept { return recency == 0.0 && impact == 0.0 && external == 0.0; }
};

/// exp(-age_days / tau) with age clamped at 0; 0 for undated documents.
double recency_score(const Document& doc, const Date& now, double tau_days);
/// impact / (1 + impact); 0 when absent.
double impact_score(const Document& doc);

/// Replaces each candidate's metadata_score and re-sorts by the new total.
std::vector<ScoredCandidate> blend_metadata(std::vector<ScoredCandidate> ranked, const PhraseIndex& index,
                                            const Corpus& corpus, const MetadataWeights& weights, const Date& now);

struct Answer {
    std::uint32_t phrase_id = 0;
    std::string doc_id;
    std::uint32_t sent_index = 0;
    std::string phrase_text;
    std::string sentence_text;
    CharSpan answer_span; // within sentence_text

    std::string title;
    std::optional<Date> date;
    std::optional<std::string> venue;
    std::optional<std::string> url;
    std::vector<std::string> authors;

    ScoredCandidate scores;
    /// Mentions in the sentence; char_span rebased to sentence_text.
    std::vector<EntityMention> entities;
};

/// Keeps the best candidate per (doc_id, sent_index) and returns at most k
/// answers in ranked order.
std::vector<Answer> assemble_answers(std::span<const ScoredCandidate> ranked, const PhraseIndex& index,
                                     const Corpus& corpus, const MentionTable& mentions, std::size_t k);

} // namespace phraseqa
