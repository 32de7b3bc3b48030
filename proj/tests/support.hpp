#pragma once

// Fixtures shared by the unit suites and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "phraseqa/corpus.hpp"
#include "phraseqa/dense_index.hpp"
#include "phraseqa/eval.hpp"

#ifndef PHRASEQA_TEST_DATA
#define PHRASEQA_TEST_DATA "tests/data"
#endif

namespace phraseqa::test {

inline std::filesystem::path data_path(const std::string& name) {
    return std::filesystem::path(PHRASEQA_TEST_DATA) / name;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("phraseqa_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::vector<float> random_unit(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<float> nd(0.0f, 1.0f);
    std::vector<float> v(dim);
    double n2 = 0.0;
    for (auto& x : v) {
        x = nd(rng);
        n2 += double(x) * x;
    }
    const float inv = float(1.0 / std::sqrt(n2));
    for (auto& x : v) {
        x *= inv;
    }
    return v;
}

/// Index input over bare vectors: one fake sentence per entry.
inline IndexInput synthetic_input(const std::vector<std::vector<float>>& vectors) {
    IndexInput in;
    in.doc_ids.push_back("synthetic");
    in.sparse.emplace_back();
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        in.sentences.push_back({0, static_cast<std::uint32_t>(i), {0, 1}});
        PhraseEntry e;
        e.sentence = static_cast<std::uint32_t>(i);
        e.sparse = 0;
        e.tokens = {0, 1};
        e.chars = {0, 1};
        e.dense.values = vectors[i];
        in.entries.push_back(std::move(e));
    }
    return in;
}

inline std::vector<std::vector<float>> random_vectors(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<float>> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(random_unit(rng, dim));
    }
    return out;
}

inline double recall_at(const std::vector<SearchHit>& got, const std::vector<SearchHit>& truth) {
    if (truth.empty()) {
        return 1.0;
    }
    std::set<std::uint32_t> want;
    for (const auto& h : truth) {
        want.insert(h.phrase_id);
    }
    std::size_t hit = 0;
    for (const auto& h : got) {
        hit += want.count(h.phrase_id);
    }
    return double(hit) / double(truth.size());
}

struct PlantedQuery {
    std::string query;
    std::string answer;
    std::string doc_id;
    std::uint32_t sent_index = 0;
    std::string sentence;
};

struct PlantedSuite {
    Corpus corpus;
    std::vector<PlantedQuery> queries;
};

/// Abstracts of random pseudo-words. Each query is a verbatim 3-5 token run
/// of one sentence that also carries a unique marker answer.
inline PlantedSuite make_planted_suite(std::size_t num_docs = 200, std::size_t num_queries = 20,
                                       std::size_t sentences_per_doc = 3, std::uint64_t seed = 42) {
    std::mt19937_64 rng(seed);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

    std::set<std::string> vocab_set;
    while (vocab_set.size() < 3000) {
        std::string w;
        const std::size_t len = 4 + pick(5);
        for (std::size_t i = 0; i < len; ++i) {
            w.push_back(static_cast<char>('a' + pick(26)));
        }
        vocab_set.insert(w);
    }
    const std::vector<std::string> vocab(vocab_set.begin(), vocab_set.end());

    std::vector<std::vector<std::vector<std::string>>> words(num_docs);
    for (auto& doc : words) {
        doc.resize(sentences_per_doc);
        for (auto& s : doc) {
            const std::size_t len = 8 + pick(3);
            for (std::size_t i = 0; i < len; ++i) {
                s.push_back(vocab[pick(vocab.size())]);
            }
        }
    }

    PlantedSuite suite;
    std::vector<std::size_t> doc_order(num_docs);
    for (std::size_t i = 0; i < num_docs; ++i) {
        doc_order[i] = i;
    }
    std::shuffle(doc_order.begin(), doc_order.end(), rng);

    struct Plant {
        std::size_t doc, sent, qbegin, qlen;
        std::string marker;
    };
    std::vector<Plant> plants;
    for (std::size_t q = 0; q < num_queries; ++q) {
        Plant p{doc_order[q], pick(sentences_per_doc), 0, 3 + pick(3), "ans" + std::to_string(1000 + q) + "x"};
        auto& s = words[p.doc][p.sent];
        s.insert(s.begin() + static_cast<std::ptrdiff_t>(1 + pick(s.size() - 1)), p.marker);
        // query window avoids the marker
        for (;;) {
            p.qbegin = pick(s.size() - p.qlen + 1);
            bool has_marker = false;
            for (std::size_t i = p.qbegin; i < p.qbegin + p.qlen; ++i) {
                has_marker |= s[i] == p.marker;
            }
            if (!has_marker) {
                break;
            }
        }
        plants.push_back(p);
    }

    std::vector<Document> docs;
    for (std::size_t d = 0; d < num_docs; ++d) {
        Document doc;
        doc.doc_id = "doc" + std::to_string(d);
        doc.title = "Synthetic abstract " + std::to_string(d);
        for (std::size_t s = 0; s < sentences_per_doc; ++s) {
            std::string text;
            for (std::size_t i = 0; i < words[d][s].size(); ++i) {
                if (i > 0) {
                    text += ' ';
                }
                std::string w = words[d][s][i];
                if (i == 0) {
                    w[0] = static_cast<char>(w[0] - 'a' + 'A');
                }
                text += w;
            }
            if (!doc.abstract.empty()) {
                doc.abstract += ' ';
            }
            doc.abstract += text + '.';
        }
        doc.date = Date{2020, 1 + static_cast<unsigned>(d % 12), 1 + static_cast<unsigned>(d % 28)};
        docs.push_back(std::move(doc));
    }
    suite.corpus = Corpus(std::move(docs));

    for (const auto& p : plants) {
        const auto& doc = suite.corpus[p.doc];
        const auto sentences = segment_sentences(doc);
        const auto& sp = sentences.at(p.sent).char_span;
        const std::string sentence = doc.abstract.substr(sp.begin, sp.size());
        // rebuild the query from the sentence text so the run is verbatim
        const auto tokens = tokenize(sentence);
        const auto qb = tokens.at(p.qbegin).span.begin;
        const auto qe = tokens.at(p.qbegin + p.qlen - 1).span.end;
        suite.queries.push_back({sentence.substr(qb, qe - qb), p.marker, doc.doc_id,
                                 static_cast<std::uint32_t>(p.sent), sentence});
    }
    return suite;
}

/// 111 records: query_log 4/9, kaggle 28/28, cdc_who 21/21 (interrogative/keyword).
inline std::string covid_questions_shape() {
    struct Block {
        const char* source;
        int interrogative;
        int keyword;
    };
    const Block blocks[] = {{"query_log", 4, 9}, {"kaggle", 28, 28}, {"cdc_who", 21, 21}};
    std::ostringstream out;
    int n = 0;
    for (const auto& b : blocks) {
        for (int i = 0; i < b.interrogative + b.keyword; ++i, ++n) {
            const bool inter = i < b.interrogative;
            out << R"({"question": ")" << (inter ? "What is question " : "keyword topic ") << n
                << R"(", "answers": ["answer )" << n << R"("], "type": ")" << (inter ? "interrogative" : "keyword")
                << R"(", "source": ")" << b.source << "\"}\n";
        }
    }
    return out.str();
}

} // namespace phraseqa::test
