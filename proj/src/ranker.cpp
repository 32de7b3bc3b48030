#include "phraseqa/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "phraseqa/error.hpp"

namespace phraseqa {

std::vector<ScoredCandidate> rerank_sparse(std::span<const SearchHit> candidates, const QueryVector& query,
                                           double lambda, const PhraseIndex& index) {
    std::vector<ScoredCandidate> out;
    out.reserve(candidates.size());
    for (const auto& hit : candidates) {
        ScoredCandidate sc;
        sc.phrase_id = hit.phrase_id;
        sc.dense_score = hit.score;
        sc.sparse_score = sparse_dot(query.sparse, index.sparse_of(hit.phrase_id));
        sc.total = sc.dense_score + lambda * sc.sparse_score;
        out.push_back(sc);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return ranks_before(a, b); });
    return out;
}

double recency_score(const Document& doc, const Date& now, double tau_days) {
    if (!doc.date) {
        return 0.0;
    }
    const auto age = std::max<std::int64_t>(0, now.days_since_epoch() - doc.date->days_since_epoch());
    return std::exp(-double(age) / tau_days);
}

double impact_score(const Document& doc) {
    if (!doc.impact_factor) {
        return 0.0;
    }
    return *doc.impact_factor / (1.0 + *doc.impact_factor);
}

std::vector<ScoredCandidate> blend_metadata(std::vector<ScoredCandidate> ranked, const PhraseIndex& index,
                                            const Corpus& corpus, const MetadataWeights& weights, const Date& now) {
    for (auto& sc : ranked) {
        double meta = 0.0;
        if (!weights.all_zero()) {
            const auto d = corpus.find(index.doc_id_of(sc.phrase_id));
            if (!d) {
                throw Error("phrase " + std::to_string(sc.phrase_id) + " references a document missing from the corpus");
            }
            const auto& doc = corpus[*d];
            meta = weights.recency * recency_score(doc, now, weights.tau_days) +
                   weights.impact * impact_score(doc) + weights.external * doc.external_score.value_or(0.0);
        }
        sc.total = sc.total - sc.metadata_score + meta;
        sc.metadata_score = meta;
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return ranks_before(a, b); });
    return ranked;
}

std::vector<Answer> assemble_answers(std::span<const ScoredCandidate> ranked, const PhraseIndex& index,
                                     const Corpus& corpus, const MentionTable& mentions, std::size_t k) {
    std::vector<Answer> out;
    std::set<std::pair<std::string, std::uint32_t>> seen;
    for (const auto& sc : ranked) {
        if (out.size() >= k) {
            break;
        }
        const auto cand = index.candidate(sc.phrase_id);
        if (!seen.emplace(cand.doc_id, cand.sent_index).second) {
            continue;
        }
        const auto d = corpus.find(cand.doc_id);
        if (!d) {
            throw Error("answer document '" + cand.doc_id + "' missing from the corpus");
        }
        const auto& doc = corpus[*d];
        const auto sent = index.sentence_of(sc.phrase_id).span;
        if (sent.end > doc.abstract.size() || !sent.contains(cand.char_span)) {
            throw Error("index spans do not match document '" + cand.doc_id + "'");
        }

        Answer a;
        a.phrase_id = sc.phrase_id;
        a.doc_id = cand.doc_id;
        a.sent_index = cand.sent_index;
        a.sentence_text = doc.abstract.substr(sent.begin, sent.size());
        a.phrase_text = doc.abstract.substr(cand.char_span.begin, cand.char_span.size());
        a.answer_span = {cand.char_span.begin - sent.begin, cand.char_span.end - sent.begin};
        a.title = doc.title;
        a.date = doc.date;
        a.venue = doc.venue;
        a.url = doc.url;
        a.authors = doc.authors;
        a.scores = sc;
        for (auto m : mentions.at(cand.doc_id, cand.sent_index)) {
            if (!sent.contains(m.char_span)) {
                continue;
            }
            m.char_span = {m.char_span.begin - sent.begin, m.char_span.end - sent.begin};
            a.entities.push_back(std::move(m));
        }
        out.push_back(std::move(a));
    }
    return out;
}

} // namespace phraseqa
