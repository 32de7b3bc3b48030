#pragma once

// Inverted-file phrase index for maximum inner product search.
//
// Phrase vectors are partitioned by k-means (Euclidean assignment); a query
// scores every centroid by inner product, probes the `nprobe` best cells and
// ranks their members by exact inner product. Posting lists hold full
// vectors, so the only approximation is which cells get probed.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "phraseqa/corpus.hpp"
#include "phraseqa/encoder.hpp"
#include "phraseqa/kmeans.hpp"

namespace phraseqa {

struct IndexConfig {
    std::size_t num_centroids = 1024;
    std::size_t kmeans_iters = 20;
    std::uint64_t seed = 1234;
    EncoderConfig encoder;
};

inline constexpr std::size_t kDefaultNprobe = 64;

struct SentenceRecord {
    std::uint32_t doc = 0; // ordinal into the index's doc id table
    std::uint32_t sent_index = 0;
    CharSpan span;
};

struct PhraseEntry {
    std::uint32_t sentence = 0; // into IndexInput::sentences
    std::uint32_t sparse = 0;   // into IndexInput::sparse
    TokenSpan tokens;
    CharSpan chars;
    DenseVector dense;
};

/// Everything build_index needs; phrase_id is the position in `entries`.
struct IndexInput {
    std::vector<std::string> doc_ids;
    std::vector<SentenceRecord> sentences;
    std::vector<SparseVector> sparse;
    std::vector<PhraseEntry> entries;
    IdfTable idf;
};

struct SearchHit {
    std::uint32_t phrase_id = 0;
    float score = 0.0f;
    friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

/// Higher score first, then lower phrase_id.
constexpr bool ranks_before(const SearchHit& a, const SearchHit& b) noexcept {
    return a.score > b.score || (a.score == b.score && a.phrase_id < b.phrase_id);
}

struct SearchStats {
    std::size_t inner_products = 0;
    std::size_t centroids_scored = 0;
    std::size_t probed_entries = 0; // summed sizes of probed postings
};

struct BuildReport {
    std::size_t requested_centroids = 0;
    std::size_t num_centroids = 0;
    std::size_t kmeans_iterations = 0;
    std::vector<std::string> warnings;
};

class PhraseIndex {
public:
    PhraseIndex() = default;

    const IndexConfig& config() const noexcept { return cfg_; }
    const IdfTable& idf() const noexcept { return idf_; }
    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t num_centroids() const noexcept { return k_; }

    MatrixView vectors() const noexcept { return {matrix_, entries_.size(), dim_}; }
    MatrixView centroids() const noexcept { return {centroids_, k_, dim_}; }
    const std::vector<std::vector<std::uint32_t>>& postings() const noexcept { return postings_; }

    const PhraseEntry& entry(std::uint32_t phrase_id) const { return entries_.at(phrase_id); }
    const SentenceRecord& sentence_of(std::uint32_t phrase_id) const { return sentences_.at(entry(phrase_id).sentence); }
    const SparseVector& sparse_of(std::uint32_t phrase_id) const { return sparse_.at(entry(phrase_id).sparse); }
    const std::string& doc_id_of(std::uint32_t phrase_id) const { return doc_ids_.at(sentence_of(phrase_id).doc); }
    PhraseCandidate candidate(std::uint32_t phrase_id) const;
    std::span<const float> dense(std::uint32_t phrase_id) const { return vectors().row(phrase_id); }

    /// Probes the `nprobe` centroids with the highest inner product (clamped
    /// to [1, num_centroids]). Throws Error on dimension mismatch.
    std::vector<SearchHit> search_dense(std::span<const float> query, std::size_t top_n, std::size_t nprobe,
                                        SearchStats* stats = nullptr) const;
    std::vector<SearchHit> exact_search(std::span<const float> query, std::size_t top_n) const;

    /// Writes header.bin, postings.bin and entries.bin into `dir`.
    void save(const std::filesystem::path& dir) const;
    static PhraseIndex load(const std::filesystem::path& dir);

private:
    friend PhraseIndex build_index(IndexInput input, const IndexConfig& cfg, BuildReport* report);

    IndexConfig cfg_;
    IdfTable idf_;
    std::size_t dim_ = 0;
    std::size_t k_ = 0;
    std::vector<float> centroids_;
    std::vector<std::vector<std::uint32_t>> postings_;
    std::vector<std::string> doc_ids_;
    std::vector<SentenceRecord> sentences_;
    std::vector<SparseVector> sparse_;
    std::vector<PhraseEntry> entries_; // dense vectors moved into matrix_
    std::vector<float> matrix_;
};

/// Full scan with the same scoring and tie-break as search_dense.
std::vector<SearchHit> exact_search(const MatrixView& vectors, std::span<const float> query, std::size_t top_n);

/// Clamps num_centroids to the entry count (with a warning in `report`).
/// Throws Error on zero entries or non-uniform dimensions.
PhraseIndex build_index(IndexInput input, const IndexConfig& cfg, BuildReport* report = nullptr);

/// Segments, enumerates and encodes every phrase of the corpus.
IndexInput encode_corpus(const Corpus& corpus, const Encoder& encoder);

/// Index input from externally supplied vectors; entries follow corpus order.
IndexInput input_from_vectors(const Corpus& corpus, const PhraseVectorMap& vectors, IdfTable idf);

} // namespace phraseqa
