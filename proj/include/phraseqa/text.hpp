#pragma once

// Tokenization, sentence splitting and text normalization shared by the
// corpus, encoder, entity and eval modules. All offsets are UTF-8 byte
// offsets into the original text.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace phraseqa {

/// Half-open [begin, end) range.
struct CharSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    bool empty() const noexcept { return end <= begin; }
    bool contains(const CharSpan& other) const noexcept { return begin <= other.begin && other.end <= end; }
    friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct Token {
    CharSpan span;
    std::string norm; // lowercased form used for matching
    bool punct = false;
};

/// Byte length of the Unicode whitespace code point starting at `pos`, or 0.
std::size_t whitespace_length(std::string_view text, std::size_t pos) noexcept;

bool is_ascii_punct(char c) noexcept;

std::string ascii_lower(std::string_view s);

/// Whitespace split, then leading/trailing ASCII punctuation peeled off into
/// one-character tokens. Spans are relative to `text` offset by `base`.
std::vector<Token> tokenize(std::string_view text, std::size_t base = 0);

/// Splits after '.', '!' or '?' when followed by whitespace and then an
/// uppercase ASCII letter or digit, except inside matched (), [] or {}.
/// Returned spans are trimmed and never empty.
std::vector<CharSpan> split_sentences(std::string_view text);

/// Lowercase, drop ASCII punctuation, collapse whitespace runs to one space,
/// trim.
std::string normalize_answer(std::string_view text);

/// Number of UTF-16 code units needed for the UTF-8 prefix text[0, bytes).
std::size_t utf16_offset(std::string_view text, std::size_t bytes) noexcept;

} // namespace phraseqa
