#pragma once

// Paired dense/sparse encoders for phrases and queries.
//
// Dense side: every normalized token maps to a pseudo-random unit vector
// (feature hashing). A phrase is the normalized sum of its own token vectors
// plus `context_weight` times the rest of its sentence; a query is the
// normalized sum of its content-token vectors.
//
// Sparse side: hashed unigrams and bigrams of non-punctuation tokens,
// weighted tf * idf with idf = ln(1 + N / df) over indexed sentences. Every
// phrase in a sentence shares the sentence's sparse vector.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "phraseqa/corpus.hpp"

namespace phraseqa {

struct DenseVector {
    std::vector<float> values;

    std::size_t dim() const noexcept { return values.size(); }
    std::span<const float> span() const noexcept { return values; }
    bool is_zero() const noexcept;
    friend bool operator==(const DenseVector&, const DenseVector&) = default;
};

struct SparseEntry {
    std::uint32_t term_id = 0;
    float weight = 0.0f;
    friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Entries strictly ascending by term_id.
struct SparseVector {
    std::vector<SparseEntry> entries;

    bool empty() const noexcept { return entries.empty(); }
    /// True when ids are strictly ascending and weights finite.
    bool well_formed() const noexcept;
    friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

double sparse_dot(const SparseVector& a, const SparseVector& b) noexcept;

struct PhraseVector {
    DenseVector dense;
    SparseVector sparse;
    friend bool operator==(const PhraseVector&, const PhraseVector&) = default;
};

struct QueryVector {
    DenseVector dense;
    SparseVector sparse;
    std::string raw_text;
    bool degenerate = false; // no content tokens; dense is all zeros
};

struct EncoderConfig {
    std::size_t dense_dim = 256;
    std::uint32_t sparse_dim = 1u << 20;
    float context_weight = 0.25f;
    std::uint64_t seed = 0x5eed;
    std::size_t max_phrase_len = kDefaultMaxPhraseLen;
};

/// Sentence-level document frequencies of hashed sparse terms.
class IdfTable {
public:
    IdfTable() = default;
    IdfTable(std::uint64_t num_sentences, std::vector<std::pair<std::uint32_t, std::uint32_t>> df_sorted);

    std::uint64_t num_sentences() const noexcept { return num_sentences_; }
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& document_frequencies() const noexcept { return df_; }

    /// ln(1 + N / df); nullopt for terms never seen at build time.
    std::optional<double> idf(std::uint32_t term_id) const;

    friend bool operator==(const IdfTable&, const IdfTable&) = default;

private:
    std::uint64_t num_sentences_ = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> df_;
};

/// Hashed unigram and bigram term ids of the non-punctuation tokens, in
/// occurrence order (duplicates kept).
std::vector<std::uint32_t> sparse_terms(std::span<const Token> tokens, std::uint32_t sparse_dim);

IdfTable build_idf(const Corpus& corpus, const EncoderConfig& cfg);

/// Unit-norm pseudo-random vector; a pure function of its arguments.
/// Requires dim >= 8.
DenseVector hash_token_vector(std::string_view token, std::size_t dim, std::uint64_t seed);

/// The fixed English function-word list used for query dense encoding.
std::span<const std::string_view> stopwords();
bool is_stopword(std::string_view normalized) noexcept;

class Encoder {
public:
    Encoder(EncoderConfig cfg, IdfTable idf);

    const EncoderConfig& config() const noexcept { return cfg_; }
    const IdfTable& idf() const noexcept { return idf_; }

    /// Throws Error when `cand` does not resolve inside `doc`.
    PhraseVector encode_phrase(const Document& doc, const PhraseCandidate& cand) const;
    QueryVector encode_query(std::string_view text) const;

    SparseVector encode_sentence_sparse(const AnalyzedSentence& sentence) const;
    /// Dense vectors for every candidate of one sentence; equals calling
    /// encode_phrase per candidate.
    std::vector<DenseVector> encode_sentence_dense(const AnalyzedSentence& sentence,
                                                   std::span<const PhraseCandidate> cands) const;

private:
    std::vector<DenseVector> token_vectors(std::span<const Token> tokens) const;
    SparseVector weigh(std::span<const std::uint32_t> terms) const;

    EncoderConfig cfg_;
    IdfTable idf_;
};

using PhraseVectorMap = std::unordered_map<PhraseCandidate, PhraseVector, PhraseCandidateHash>;

/// Line-delimited vector exchange records. Throws ParseError (record unit)
/// on unresolvable candidates, dimension mismatch or non-finite values.
PhraseVectorMap import_vectors(const std::filesystem::path& path, const Corpus& corpus);
/// Records are written sorted by (doc_id, sent_index, token span).
void export_vectors(const std::filesystem::path& path, const PhraseVectorMap& vectors);

} // namespace phraseqa
