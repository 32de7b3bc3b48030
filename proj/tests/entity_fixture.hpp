#pragma once

// 100-document entity fixture and a linear-scan reference for entity search.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "phraseqa/entity.hpp"

namespace phraseqa::test {

inline EntityDictionary covid_dictionary() {
    EntityDictionary d;
    d.add({"D006331", "Heart Diseases", EntityType::disease, {"heart disease", "heart diseases"}});
    d.add({"D006330", "Heart", EntityType::other, {"heart"}});
    d.add({"D002318", "Cardiovascular Diseases", EntityType::disease, {"cardiovascular disease", "CVD"}});
    d.add({"D000086382", "COVID-19", EntityType::disease, {"covid-19", "covid"}});
    d.add({"C000606551", "remdesivir", EntityType::drug, {}});
    d.add({"D006886", "Hydroxychloroquine", EntityType::drug, {"HCQ"}});
    d.add({"9606", "Homo sapiens", EntityType::species, {"human", "humans", "patients"}});
    d.add({"2697049", "SARS-CoV-2", EntityType::species, {}});
    d.add({"D003371", "Cough", EntityType::disease, {}});
    d.add({"D005334", "Fever", EntityType::disease, {}});
    return d;
}


// 100 documents drawn from filler words and dictionary surfaces.
inline Corpus fixture_corpus() {
    static const std::vector<std::string> filler{
        "patients", "were", "treated", "with", "and", "showed", "reduced", "risk", "of", "severe", "outcomes",
        "in", "the", "cohort", "study", "trial", "viral", "load", "mortality", "increased", "among", "adults",
        "children", "symptoms", "included", "onset", "days", "after", "exposure", "therapy"};
    static const std::vector<std::string> entities{"heart disease", "heart", "cardiovascular disease", "COVID-19",
                                                   "remdesivir",    "HCQ",   "SARS-CoV-2",             "cough",
                                                   "fever",         "humans"};
    std::mt19937_64 rng(1234);
    std::vector<Document> docs;
    for (int d = 0; d < 100; ++d) {
        std::string text;
        const int sentences = 1 + int(rng() % 3);
        for (int s = 0; s < sentences; ++s) {
            const int len = 5 + int(rng() % 10);
            for (int i = 0; i < len; ++i) {
                std::string w = (rng() % 4 == 0) ? entities[rng() % entities.size()] : filler[rng() % filler.size()];
                if (i == 0) w[0] = char(std::toupper(static_cast<unsigned char>(w[0])));
                text += (i == 0 ? "" : " ") + w;
            }
            text += ". ";
        }
        text.pop_back();
        Document doc;
        doc.doc_id = "doc" + std::to_string(d);
        doc.title = "Fixture " + std::to_string(d);
        doc.abstract = text;
        docs.push_back(std::move(doc));
    }
    return Corpus(docs);
}

// Linear-scan entity search written straight from the scoring definition.
inline std::vector<EntitySearchResult> brute_force_search(const Corpus& corpus, const EntityDictionary& dict,
                                                   const std::string& query, std::size_t top_k) {
    const double k1 = 1.2, b = 0.75;
    const std::size_t n = corpus.size();
    std::vector<std::map<std::string, int>> tf(n);
    std::vector<double> len(n, 0.0);
    std::vector<std::map<std::string, int>> counts(n);
    for (std::size_t d = 0; d < n; ++d) {
        for (const auto& t : tokenize(corpus[d].abstract)) {
            if (t.punct) continue;
            ++tf[d][t.norm];
            len[d] += 1;
        }
        for (const auto& m : tag_mentions(corpus[d].abstract, dict)) ++counts[d][m.cui];
    }
    std::uint64_t total = 0;
    for (double l : len) total += std::uint64_t(l);
    const double avgdl = double(total) / double(n);

    std::set<std::string> qterms;
    for (const auto& t : tokenize(query)) {
        if (!t.punct) qterms.insert(t.norm);
    }
    std::vector<double> bm25(n, 0.0);
    for (const auto& term : qterms) {
        double df = 0;
        for (std::size_t d = 0; d < n; ++d) df += tf[d].count(term) ? 1 : 0;
        if (df == 0) continue;
        const double idf = std::log(1.0 + (double(n) - df + 0.5) / (df + 0.5));
        for (std::size_t d = 0; d < n; ++d) {
            auto it = tf[d].find(term);
            if (it == tf[d].end()) continue;
            const double f = it->second;
            bm25[d] += idf * (f * (k1 + 1.0)) / (f + k1 * (1.0 - b + b * len[d] / avgdl));
        }
    }
    std::map<std::string, double> score;
    std::map<std::string, std::vector<std::pair<double, std::size_t>>> support;
    for (std::size_t d = 0; d < n; ++d) {
        if (bm25[d] <= 0) continue;
        for (const auto& [cui, c] : counts[d]) {
            const double contrib = bm25[d] * std::log(1.0 + c);
            score[cui] += contrib;
            support[cui].emplace_back(contrib, d);
        }
    }
    std::vector<EntitySearchResult> out;
    for (const auto& [cui, s] : score) {
        const Concept* c = dict.find_cui(cui);
        auto sup = support[cui];
        std::sort(sup.begin(), sup.end(), [](auto& x, auto& y) { return x.first > y.first || (x.first == y.first && x.second < y.second); });
        EntitySearchResult r{cui, c->canonical_name, c->etype, s, {}};
        for (std::size_t i = 0; i < sup.size() && i < 5; ++i) r.doc_ids.push_back(corpus[sup[i].second].doc_id);
        out.push_back(r);
    }
    std::stable_sort(out.begin(), out.end(), [](auto& x, auto& y) { return x.score > y.score; });
    if (out.size() > top_k) out.resize(top_k);
    return out;
}

inline const std::vector<std::string> kFixtureQueries{
    "heart disease risk",     "remdesivir therapy",        "COVID-19 mortality in adults", "fever and cough onset",
    "viral load",             "children symptoms",         "severe outcomes",               "treated with HCQ",
    "cohort study exposure",  "humans",                    "SARS-CoV-2 days after exposure", "trial",
    "unrelated zebra words",  "the of and",                "reduced risk of severe outcomes", "heart"};

} // namespace phraseqa::test
