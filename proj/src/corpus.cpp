#include "phraseqa/corpus.hpp"

#include <charconv>
#include <cstdio>
#include <chrono>
#include <fstream>
#include <functional>
#include <istream>

#include "json.hpp"

#include "phraseqa/error.hpp"

namespace phraseqa {

using json = nlohmann::json;

std::optional<Date> Date::parse(std::string_view iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') {
        return std::nullopt;
    }
    auto num = [&](std::size_t off, std::size_t len, int& out) {
        const char* b = iso.data() + off;
        auto [ptr, ec] = std::from_chars(b, b + len, out);
        return ec == std::errc{} && ptr == b + len;
    };
    int y = 0, m = 0, d = 0;
    if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) {
        return std::nullopt;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                          std::chrono::day{unsigned(d)}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return Date{y, unsigned(m), unsigned(d)};
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", year, month, day);
    return buf;
}

std::int64_t Date::days_since_epoch() const {
    const std::chrono::sys_days days{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}};
    return days.time_since_epoch().count();
}

std::size_t PhraseCandidateHash::operator()(const PhraseCandidate& c) const noexcept {
    std::size_t h = std::hash<std::string>{}(c.doc_id);
    auto mix = [&h](std::uint64_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
    mix(c.sent_index);
    mix(c.token_span.begin);
    mix(c.token_span.end);
    return h;
}

Corpus::Corpus(std::vector<Document> docs) : docs_(std::move(docs)) {
    by_id_.reserve(docs_.size());
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        if (!by_id_.emplace(docs_[i].doc_id, i).second) {
            throw Error("duplicate doc_id '" + docs_[i].doc_id + "'");
        }
    }
}

std::optional<std::size_t> Corpus::find(std::string_view doc_id) const {
    auto it = by_id_.find(std::string(doc_id));
    if (it == by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

namespace {

Document parse_document(const std::string& line, std::size_t line_no) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(line_no, "", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ParseError(line_no, "", "record is not a JSON object");
    }

    auto required_string = [&](const char* key) {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) {
            throw ParseError(line_no, key, std::string("missing field '") + key + "'");
        }
        if (!it->is_string()) {
            throw ParseError(line_no, key, std::string("field '") + key + "' must be a string");
        }
        return it->get<std::string>();
    };
    auto optional_string = [&](const char* key) -> std::optional<std::string> {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) {
            return std::nullopt;
        }
        if (!it->is_string()) {
            throw ParseError(line_no, key, std::string("field '") + key + "' must be a string");
        }
        return it->get<std::string>();
    };
    auto optional_number = [&](const char* key) -> std::optional<double> {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) {
            return std::nullopt;
        }
        if (!it->is_number()) {
            throw ParseError(line_no, key, std::string("field '") + key + "' must be a number");
        }
        return it->get<double>();
    };

    Document doc;
    doc.doc_id = required_string("doc_id");
    if (doc.doc_id.empty()) {
        throw ParseError(line_no, "doc_id", "field 'doc_id' is empty");
    }
    doc.title = optional_string("title").value_or("");
    doc.abstract = required_string("abstract");
    if (split_sentences(doc.abstract).empty()) {
        throw ParseError(line_no, "abstract", "field 'abstract' is empty");
    }
    if (auto d = optional_string("date")) {
        doc.date = Date::parse(*d);
        if (!doc.date) {
            throw ParseError(line_no, "date", "field 'date' is not YYYY-MM-DD: '" + *d + "'");
        }
    }
    doc.venue = optional_string("venue");
    doc.impact_factor = optional_number("impact_factor");
    if (doc.impact_factor && *doc.impact_factor < 0.0) {
        throw ParseError(line_no, "impact_factor", "field 'impact_factor' must be non-negative");
    }
    doc.external_score = optional_number("external_score");
    doc.url = optional_string("url");
    if (auto it = j.find("authors"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) {
            throw ParseError(line_no, "authors", "field 'authors' must be an array");
        }
        for (const auto& a : *it) {
            if (!a.is_string()) {
                throw ParseError(line_no, "authors", "field 'authors' must contain strings");
            }
            doc.authors.push_back(a.get<std::string>());
        }
    }
    return doc;
}

} // namespace

Corpus parse_corpus(std::istream& in, const LoadOptions& opts, std::vector<LoadIssue>* issues) {
    std::vector<Document> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            docs.push_back(parse_document(line, line_no));
        } catch (const ParseError& e) {
            if (!opts.skip_malformed) {
                throw;
            }
            if (issues != nullptr) {
                issues->push_back({e.line(), e.field(), e.what()});
            }
        }
    }
    return Corpus(std::move(docs));
}

Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& opts, std::vector<LoadIssue>* issues) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open corpus file " + path.string());
    }
    return parse_corpus(in, opts, issues);
}

std::string document_to_json_line(const Document& doc) {
    json j;
    j["doc_id"] = doc.doc_id;
    j["title"] = doc.title;
    j["abstract"] = doc.abstract;
    if (doc.date) j["date"] = doc.date->to_string();
    if (doc.venue) j["venue"] = *doc.venue;
    if (doc.impact_factor) j["impact_factor"] = *doc.impact_factor;
    if (doc.external_score) j["external_score"] = *doc.external_score;
    j["authors"] = doc.authors;
    if (doc.url) j["url"] = *doc.url;
    return j.dump();
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write corpus file " + path.string());
    }
    for (const auto& doc : corpus) {
        out << document_to_json_line(doc) << '\n';
    }
}

Corpus filter_recent(const Corpus& corpus, const Date& cutoff) {
    std::vector<Document> kept;
    for (const auto& doc : corpus) {
        if (doc.date && *doc.date > cutoff) {
            kept.push_back(doc);
        }
    }
    return Corpus(std::move(kept));
}

std::vector<Sentence> segment_sentences(const Document& doc) {
    std::vector<Sentence> out;
    const auto spans = split_sentences(doc.abstract);
    out.reserve(spans.size());
    for (std::size_t i = 0; i < spans.size(); ++i) {
        out.push_back(Sentence{doc.doc_id, static_cast<std::uint32_t>(i), spans[i]});
    }
    return out;
}

std::vector<AnalyzedSentence> analyze(const Document& doc) {
    std::vector<AnalyzedSentence> out;
    for (auto& s : segment_sentences(doc)) {
        auto text = std::string_view(doc.abstract).substr(s.char_span.begin, s.char_span.size());
        auto tokens = tokenize(text, s.char_span.begin);
        out.push_back(AnalyzedSentence{std::move(s), std::move(tokens)});
    }
    return out;
}

std::vector<PhraseCandidate> enumerate_phrases(const AnalyzedSentence& sentence, std::size_t max_phrase_len) {
    std::vector<PhraseCandidate> out;
    const auto& toks = sentence.tokens;
    const std::size_t n = toks.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j <= n && j - i <= max_phrase_len; ++j) {
            out.push_back(PhraseCandidate{sentence.sentence.doc_id, sentence.sentence.sent_index,
                                          TokenSpan{std::uint32_t(i), std::uint32_t(j)},
                                          CharSpan{toks[i].span.begin, toks[j - 1].span.end}});
        }
    }
    return out;
}

} // namespace phraseqa
