#include "phraseqa/encoder.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <tuple>

#include "json.hpp"

#include "phraseqa/error.hpp"
#include "phraseqa/hashing.hpp"

namespace phraseqa {

using json = nlohmann::json;

namespace {

constexpr std::array<std::string_view, 50> kStopwords = {
    "a",    "an",    "the",   "and",   "or",   "but",  "if",    "then",   "of",    "to",
    "in",   "on",    "at",    "by",    "for",  "with", "from",  "into",   "about", "as",
    "is",   "are",   "was",   "were",  "be",   "been", "being", "am",     "it",    "its",
    "this", "that",  "these", "those", "there", "what", "which", "who",   "whom",  "whose",
    "how",  "when",  "where", "why",   "do",   "does", "did",   "can",    "could", "should",
};

DenseVector normalized(std::span<const double> v) {
    double norm2 = 0.0;
    for (double x : v) {
        norm2 += x * x;
    }
    DenseVector out;
    out.values.assign(v.size(), 0.0f);
    if (norm2 == 0.0) {
        return out;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.values[i] = static_cast<float>(v[i] * inv);
    }
    return out;
}

} // namespace

bool DenseVector::is_zero() const noexcept {
    return std::all_of(values.begin(), values.end(), [](float x) { return x == 0.0f; });
}

bool SparseVector::well_formed() const noexcept {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!std::isfinite(entries[i].weight)) {
            return false;
        }
        if (i > 0 && entries[i - 1].term_id >= entries[i].term_id) {
            return false;
        }
    }
    return true;
}

double sparse_dot(const SparseVector& a, const SparseVector& b) noexcept {
    double acc = 0.0;
    auto ia = a.entries.begin();
    auto ib = b.entries.begin();
    while (ia != a.entries.end() && ib != b.entries.end()) {
        if (ia->term_id < ib->term_id) {
            ++ia;
        } else if (ib->term_id < ia->term_id) {
            ++ib;
        } else {
            acc += double(ia->weight) * double(ib->weight);
            ++ia;
            ++ib;
        }
    }
    return acc;
}

IdfTable::IdfTable(std::uint64_t num_sentences, std::vector<std::pair<std::uint32_t, std::uint32_t>> df_sorted)
    : num_sentences_(num_sentences), df_(std::move(df_sorted)) {
    for (std::size_t i = 1; i < df_.size(); ++i) {
        if (df_[i - 1].first >= df_[i].first) {
            throw Error("idf table terms must be strictly ascending");
        }
    }
}

std::optional<double> IdfTable::idf(std::uint32_t term_id) const {
    auto it = std::lower_bound(df_.begin(), df_.end(), term_id,
                               [](const auto& p, std::uint32_t t) { return p.first < t; });
    if (it == df_.end() || it->first != term_id || it->second == 0) {
        return std::nullopt;
    }
    return std::log(1.0 + double(num_sentences_) / double(it->second));
}

std::vector<std::uint32_t> sparse_terms(std::span<const Token> tokens, std::uint32_t sparse_dim) {
    std::vector<std::uint32_t> terms;
    const Token* prev = nullptr;
    for (const auto& tok : tokens) {
        if (tok.punct) {
            continue;
        }
        terms.push_back(static_cast<std::uint32_t>(fnv1a64(tok.norm) % sparse_dim));
        if (prev != nullptr) {
            std::string bigram;
            bigram.reserve(prev->norm.size() + 1 + tok.norm.size());
            bigram.append(prev->norm).push_back(' ');
            bigram.append(tok.norm);
            terms.push_back(static_cast<std::uint32_t>(fnv1a64(bigram) % sparse_dim));
        }
        prev = &tok;
    }
    return terms;
}

IdfTable build_idf(const Corpus& corpus, const EncoderConfig& cfg) {
    std::unordered_map<std::uint32_t, std::uint32_t> df;
    std::uint64_t sentences = 0;
    for (const auto& doc : corpus) {
        for (const auto& s : analyze(doc)) {
            ++sentences;
            auto terms = sparse_terms(s.tokens, cfg.sparse_dim);
            std::sort(terms.begin(), terms.end());
            terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
            for (auto t : terms) {
                ++df[t];
            }
        }
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> sorted(df.begin(), df.end());
    std::sort(sorted.begin(), sorted.end());
    return IdfTable(sentences, std::move(sorted));
}

DenseVector hash_token_vector(std::string_view token, std::size_t dim, std::uint64_t seed) {
    if (dim < 8) {
        throw Error("hash_token_vector: dim must be >= 8");
    }
    const std::uint64_t key = splitmix64(fnv1a64(token) ^ splitmix64(seed));
    std::vector<double> v(dim);
    // Box-Muller over counter-indexed uniforms.
    for (std::size_t i = 0; i < dim; i += 2) {
        const double u1 = unit_interval(splitmix64(key + 2 * i)) + 0x1.0p-53; // (0, 1]
        const double u2 = unit_interval(splitmix64(key + 2 * i + 1));
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        v[i] = r * std::cos(theta);
        if (i + 1 < dim) {
            v[i + 1] = r * std::sin(theta);
        }
    }
    return normalized(v);
}

std::span<const std::string_view> stopwords() {
    return kStopwords;
}

bool is_stopword(std::string_view normalized) noexcept {
    return std::find(kStopwords.begin(), kStopwords.end(), normalized) != kStopwords.end();
}

Encoder::Encoder(EncoderConfig cfg, IdfTable idf) : cfg_(cfg), idf_(std::move(idf)) {
    if (cfg_.dense_dim < 8) {
        throw Error("encoder dense_dim must be >= 8");
    }
    if (cfg_.sparse_dim == 0) {
        throw Error("encoder sparse_dim must be positive");
    }
}

std::vector<DenseVector> Encoder::token_vectors(std::span<const Token> tokens) const {
    std::vector<DenseVector> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        out.push_back(hash_token_vector(t.norm, cfg_.dense_dim, cfg_.seed));
    }
    return out;
}

SparseVector Encoder::weigh(std::span<const std::uint32_t> terms) const {
    std::map<std::uint32_t, std::uint32_t> tf;
    for (auto t : terms) {
        ++tf[t];
    }
    SparseVector out;
    for (const auto& [term, count] : tf) {
        if (auto idf = idf_.idf(term)) {
            out.entries.push_back({term, static_cast<float>(double(count) * *idf)});
        }
    }
    return out;
}

SparseVector Encoder::encode_sentence_sparse(const AnalyzedSentence& sentence) const {
    return weigh(sparse_terms(sentence.tokens, cfg_.sparse_dim));
}

std::vector<DenseVector> Encoder::encode_sentence_dense(const AnalyzedSentence& sentence,
                                                        std::span<const PhraseCandidate> cands) const {
    const auto tv = token_vectors(sentence.tokens);
    const std::size_t dim = cfg_.dense_dim;
    std::vector<DenseVector> out;
    out.reserve(cands.size());
    std::vector<double> phrase(dim);
    std::vector<double> context(dim);
    for (const auto& c : cands) {
        if (c.token_span.begin >= c.token_span.end || c.token_span.end > tv.size()) {
            throw Error("phrase candidate token span out of range");
        }
        std::fill(phrase.begin(), phrase.end(), 0.0);
        std::fill(context.begin(), context.end(), 0.0);
        for (std::size_t t = 0; t < tv.size(); ++t) {
            const bool inside = t >= c.token_span.begin && t < c.token_span.end;
            auto& acc = inside ? phrase : context;
            for (std::size_t d = 0; d < dim; ++d) {
                acc[d] += double(tv[t].values[d]);
            }
        }
        const double alpha = cfg_.context_weight;
        for (std::size_t d = 0; d < dim; ++d) {
            phrase[d] += alpha * context[d];
        }
        out.push_back(normalized(phrase));
    }
    return out;
}

PhraseVector Encoder::encode_phrase(const Document& doc, const PhraseCandidate& cand) const {
    if (cand.doc_id != doc.doc_id) {
        throw Error("candidate doc_id '" + cand.doc_id + "' does not match document '" + doc.doc_id + "'");
    }
    auto sentences = analyze(doc);
    if (cand.sent_index >= sentences.size()) {
        throw Error("candidate sent_index " + std::to_string(cand.sent_index) + " out of range for '" +
                    doc.doc_id + "'");
    }
    const auto& s = sentences[cand.sent_index];
    PhraseVector pv;
    pv.dense = std::move(encode_sentence_dense(s, std::span(&cand, 1)).front());
    pv.sparse = encode_sentence_sparse(s);
    return pv;
}

QueryVector Encoder::encode_query(std::string_view text) const {
    QueryVector q;
    q.raw_text = std::string(text);
    const auto tokens = tokenize(text);

    std::vector<const Token*> content;
    std::vector<const Token*> all_words;
    for (const auto& t : tokens) {
        if (t.punct) {
            continue;
        }
        all_words.push_back(&t);
        if (!is_stopword(t.norm)) {
            content.push_back(&t);
        }
    }
    const auto& chosen = content.empty() ? all_words : content;

    std::vector<double> sum(cfg_.dense_dim, 0.0);
    for (const Token* t : chosen) {
        const auto v = hash_token_vector(t->norm, cfg_.dense_dim, cfg_.seed);
        for (std::size_t d = 0; d < cfg_.dense_dim; ++d) {
            sum[d] += double(v.values[d]);
        }
    }
    q.dense = normalized(sum);
    q.degenerate = q.dense.is_zero();
    q.sparse = weigh(sparse_terms(tokens, cfg_.sparse_dim));
    return q;
}

PhraseVectorMap import_vectors(const std::filesystem::path& path, const Corpus& corpus) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open vector file " + path.string());
    }
    using Unit = ParseError::Unit;
    PhraseVectorMap out;
    std::unordered_map<std::size_t, std::vector<AnalyzedSentence>> analyzed;
    std::optional<std::size_t> dim;
    std::string line;
    std::size_t record = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::size_t idx = record++;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(idx, "", std::string("invalid JSON: ") + e.what(), Unit::record);
        }
        try {
            const auto doc_id = j.at("doc_id").get<std::string>();
            const auto sent_index = j.at("sent_index").get<std::uint32_t>();
            const auto tb = j.at("token_start").get<std::uint32_t>();
            const auto te = j.at("token_end").get<std::uint32_t>();

            const auto doc_idx = corpus.find(doc_id);
            if (!doc_idx) {
                throw ParseError(idx, "doc_id", "unknown doc_id '" + doc_id + "'", Unit::record);
            }
            auto [it, inserted] = analyzed.try_emplace(*doc_idx);
            if (inserted) {
                it->second = analyze(corpus[*doc_idx]);
            }
            const auto& sentences = it->second;
            if (sent_index >= sentences.size()) {
                throw ParseError(idx, "sent_index", "sent_index out of range", Unit::record);
            }
            const auto& toks = sentences[sent_index].tokens;
            if (tb >= te || te > toks.size()) {
                throw ParseError(idx, "token_start", "token span out of range", Unit::record);
            }

            PhraseVector pv;
            for (const auto& x : j.at("dense")) {
                const double v = x.get<double>();
                if (!std::isfinite(v)) {
                    throw ParseError(idx, "dense", "non-finite dense value", Unit::record);
                }
                pv.dense.values.push_back(static_cast<float>(v));
            }
            if (pv.dense.values.empty()) {
                throw ParseError(idx, "dense", "empty dense vector", Unit::record);
            }
            if (!dim) {
                dim = pv.dense.dim();
            } else if (*dim != pv.dense.dim()) {
                throw ParseError(idx, "dense",
                                 "dimension mismatch: expected " + std::to_string(*dim) + ", got " +
                                     std::to_string(pv.dense.dim()),
                                 Unit::record);
            }
            for (const auto& e : j.at("sparse")) {
                const double w = e.at(1).get<double>();
                pv.sparse.entries.push_back({e.at(0).get<std::uint32_t>(), static_cast<float>(w)});
            }
            if (!pv.sparse.well_formed()) {
                throw ParseError(idx, "sparse", "sparse entries must be finite and strictly ascending", Unit::record);
            }

            PhraseCandidate cand{doc_id, sent_index, TokenSpan{tb, te},
                                 CharSpan{toks[tb].span.begin, toks[te - 1].span.end}};
            if (!out.emplace(std::move(cand), std::move(pv)).second) {
                throw ParseError(idx, "", "duplicate candidate", Unit::record);
            }
        } catch (const json::exception& e) {
            throw ParseError(idx, "", std::string("bad record: ") + e.what(), Unit::record);
        }
    }
    return out;
}

void export_vectors(const std::filesystem::path& path, const PhraseVectorMap& vectors) {
    std::vector<const PhraseVectorMap::value_type*> items;
    items.reserve(vectors.size());
    for (const auto& kv : vectors) {
        items.push_back(&kv);
    }
    std::sort(items.begin(), items.end(), [](const auto* a, const auto* b) {
        return std::tie(a->first.doc_id, a->first.sent_index, a->first.token_span) <
               std::tie(b->first.doc_id, b->first.sent_index, b->first.token_span);
    });
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write vector file " + path.string());
    }
    for (const auto* kv : items) {
        json j;
        j["doc_id"] = kv->first.doc_id;
        j["sent_index"] = kv->first.sent_index;
        j["token_start"] = kv->first.token_span.begin;
        j["token_end"] = kv->first.token_span.end;
        j["dense"] = kv->second.dense.values;
        json sparse = json::array();
        for (const auto& e : kv->second.sparse.entries) {
            sparse.push_back({e.term_id, e.weight});
        }
        j["sparse"] = std::move(sparse);
        out << j.dump() << '\n';
    }
}

} // namespace phraseqa
