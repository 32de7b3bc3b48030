#include "phraseqa/text.hpp"

#include <cstdint>

namespace phraseqa {
namespace {

// Decodes one UTF-8 code point; returns byte length (1 on invalid input).
std::size_t decode_utf8(std::string_view s, std::size_t pos, char32_t& cp) noexcept {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    const std::size_t remaining = s.size() - pos;
    auto cont = [&](std::size_t k) { return static_cast<unsigned char>(s[pos + k]) & 0x3Fu; };
    if (b0 < 0x80) {
        cp = b0;
        return 1;
    }
    if ((b0 & 0xE0) == 0xC0 && remaining >= 2) {
        cp = (char32_t(b0 & 0x1F) << 6) | cont(1);
        return 2;
    }
    if ((b0 & 0xF0) == 0xE0 && remaining >= 3) {
        cp = (char32_t(b0 & 0x0F) << 12) | (char32_t(cont(1)) << 6) | cont(2);
        return 3;
    }
    if ((b0 & 0xF8) == 0xF0 && remaining >= 4) {
        cp = (char32_t(b0 & 0x07) << 18) | (char32_t(cont(1)) << 12) | (char32_t(cont(2)) << 6) | cont(3);
        return 4;
    }
    cp = 0xFFFD;
    return 1;
}

bool is_unicode_space(char32_t cp) noexcept {
    switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
        return true;
    default:
        return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_ascii_upper_or_digit(char c) noexcept {
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

} // namespace

std::size_t whitespace_length(std::string_view text, std::size_t pos) noexcept {
    if (pos >= text.size()) {
        return 0;
    }
    char32_t cp = 0;
    const std::size_t len = decode_utf8(text, pos, cp);
    return is_unicode_space(cp) ? len : 0;
}

bool is_ascii_punct(char c) noexcept {
    return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return out;
}

std::vector<Token> tokenize(std::string_view text, std::size_t base) {
    std::vector<Token> tokens;
    auto emit = [&](std::size_t b, std::size_t e, bool punct) {
        tokens.push_back(Token{{base + b, base + e}, ascii_lower(text.substr(b, e - b)), punct});
    };

    std::size_t pos = 0;
    while (pos < text.size()) {
        if (std::size_t ws = whitespace_length(text, pos); ws > 0) {
            pos += ws;
            continue;
        }
        std::size_t end = pos;
        while (end < text.size() && whitespace_length(text, end) == 0) {
            ++end;
        }
        std::size_t lo = pos;
        std::size_t hi = end;
        while (lo < hi && is_ascii_punct(text[lo])) {
            ++lo;
        }
        if (lo == hi) {
            for (std::size_t i = pos; i < end; ++i) {
                emit(i, i + 1, true);
            }
        } else {
            while (hi > lo && is_ascii_punct(text[hi - 1])) {
                --hi;
            }
            for (std::size_t i = pos; i < lo; ++i) {
                emit(i, i + 1, true);
            }
            emit(lo, hi, false);
            for (std::size_t i = hi; i < end; ++i) {
                emit(i, i + 1, true);
            }
        }
        pos = end;
    }
    return tokens;
}

std::vector<CharSpan> split_sentences(std::string_view text) {
    // Bytes inside a matched bracket pair are protected from splitting.
    std::vector<int> depth_delta(text.size() + 1, 0);
    {
        std::vector<std::pair<char, std::size_t>> stack;
        for (std::size_t i = 0; i < text.size(); ++i) {
            const char c = text[i];
            if (c == '(' || c == '[' || c == '{') {
                stack.emplace_back(c, i);
            } else if (c == ')' || c == ']' || c == '}') {
                const char open = c == ')' ? '(' : (c == ']' ? '[' : '{');
                // Pop to the nearest matching opener; unmatched closers are ignored.
                for (std::size_t k = stack.size(); k-- > 0;) {
                    if (stack[k].first == open) {
                        ++depth_delta[stack[k].second + 1];
                        --depth_delta[i];
                        stack.resize(k);
                        break;
                    }
                }
            }
        }
    }

    std::vector<CharSpan> spans;
    auto push_trimmed = [&](std::size_t b, std::size_t e) {
        while (b < e) {
            const std::size_t ws = whitespace_length(text, b);
            if (ws == 0) {
                break;
            }
            b += ws;
        }
        // Trailing trim walks back over single bytes; multi-byte spaces are
        // handled by re-checking every code point start.
        std::size_t last_non_ws = b;
        for (std::size_t i = b; i < e;) {
            const std::size_t ws = whitespace_length(text, i);
            if (ws == 0) {
                char32_t cp = 0;
                i += decode_utf8(text, i, cp);
                last_non_ws = i;
            } else {
                i += ws;
            }
        }
        if (last_non_ws > b) {
            spans.push_back({b, last_non_ws});
        }
    };

    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        depth += depth_delta[i];
        const char c = text[i];
        if (depth > 0 || (c != '.' && c != '!' && c != '?')) {
            continue;
        }
        std::size_t j = i + 1;
        std::size_t ws_total = 0;
        while (j < text.size()) {
            const std::size_t ws = whitespace_length(text, j);
            if (ws == 0) {
                break;
            }
            j += ws;
            ws_total += ws;
        }
        if (ws_total > 0 && j < text.size() && is_ascii_upper_or_digit(text[j])) {
            push_trimmed(start, i + 1);
            start = i + 1;
        }
    }
    push_trimmed(start, text.size());
    return spans;
}

std::string normalize_answer(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (std::size_t pos = 0; pos < text.size();) {
        if (std::size_t ws = whitespace_length(text, pos); ws > 0) {
            pending_space = !out.empty();
            pos += ws;
            continue;
        }
        const char c = text[pos++];
        if (is_ascii_punct(c)) {
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
    }
    return out;
}

std::size_t utf16_offset(std::string_view text, std::size_t bytes) noexcept {
    std::size_t units = 0;
    for (std::size_t pos = 0; pos < bytes && pos < text.size();) {
        char32_t cp = 0;
        pos += decode_utf8(text, pos, cp);
        units += cp >= 0x10000 ? 2 : 1;
    }
    return units;
}

} // namespace phraseqa
