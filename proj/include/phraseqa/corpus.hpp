#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "phraseqa/text.hpp"

namespace phraseqa {

/// Proleptic Gregorian calendar date.
struct Date {
    int year = 1970;
    unsigned month = 1;
    unsigned day = 1;

    /// Strict `YYYY-MM-DD`; nullopt for anything else, including invalid days.
    static std::optional<Date> parse(std::string_view iso);
    std::string to_string() const;
    std::int64_t days_since_epoch() const;

    friend auto operator<=>(const Date&, const Date&) = default;
    friend bool operator==(const Date&, const Date&) = default;
};

struct Document {
    std::string doc_id;
    std::string title;
    std::string abstract;
    std::optional<Date> date;
    std::optional<std::string> venue;
    std::optional<double> impact_factor;
    std::optional<double> external_score;
    std::vector<std::string> authors;
    std::optional<std::string> url;
};

struct Sentence {
    std::string doc_id;
    std::uint32_t sent_index = 0;
    CharSpan char_span; // into the abstract
};

struct TokenSpan {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;

    std::uint32_t size() const noexcept { return end - begin; }
    friend auto operator<=>(const TokenSpan&, const TokenSpan&) = default;
};

struct PhraseCandidate {
    std::string doc_id;
    std::uint32_t sent_index = 0;
    TokenSpan token_span; // over the sentence's tokens
    CharSpan char_span;   // into the abstract

    friend bool operator==(const PhraseCandidate&, const PhraseCandidate&) = default;
};

struct PhraseCandidateHash {
    std::size_t operator()(const PhraseCandidate& c) const noexcept;
};

/// A sentence together with its tokens (offsets into the abstract).
struct AnalyzedSentence {
    Sentence sentence;
    std::vector<Token> tokens;
};

/// Immutable, ordered collection of documents with unique ids.
class Corpus {
public:
    Corpus() = default;
    /// Throws Error on duplicate doc_id.
    explicit Corpus(std::vector<Document> docs);

    std::size_t size() const noexcept { return docs_.size(); }
    bool empty() const noexcept { return docs_.empty(); }
    const Document& operator[](std::size_t i) const { return docs_[i]; }
    const std::vector<Document>& documents() const noexcept { return docs_; }
    auto begin() const noexcept { return docs_.begin(); }
    auto end() const noexcept { return docs_.end(); }

    std::optional<std::size_t> find(std::string_view doc_id) const;

private:
    std::vector<Document> docs_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

struct LoadOptions {
    bool skip_malformed = false;
};

struct LoadIssue {
    std::size_t line = 0;
    std::string field;
    std::string message;
};

/// One JSON object per line. Blank lines are ignored. Malformed lines throw
/// ParseError unless `skip_malformed`, in which case they are reported via
/// `issues`. Duplicate doc_id always throws.
Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& opts = {},
                   std::vector<LoadIssue>* issues = nullptr);
Corpus parse_corpus(std::istream& in, const LoadOptions& opts = {}, std::vector<LoadIssue>* issues = nullptr);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);
std::string document_to_json_line(const Document& doc);

/// Documents dated strictly after `cutoff`; undated documents are dropped.
Corpus filter_recent(const Corpus& corpus, const Date& cutoff);

std::vector<Sentence> segment_sentences(const Document& doc);
std::vector<AnalyzedSentence> analyze(const Document& doc);

/// All spans [i, j) with 1 <= j - i <= max_phrase_len in (i, j) order.
std::vector<PhraseCandidate> enumerate_phrases(const AnalyzedSentence& sentence, std::size_t max_phrase_len);

inline constexpr std::size_t kDefaultMaxPhraseLen = 5;

} // namespace phraseqa
