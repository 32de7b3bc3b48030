#include "phraseqa/dense_index.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <tuple>

#include "binary_io.hpp"
#include "phraseqa/error.hpp"
#include "phraseqa/simd/kernels.hpp"

namespace phraseqa {
namespace {

constexpr std::string_view kHeaderMagic = "PQAHDR01";
constexpr std::string_view kPostingsMagic = "PQAPST01";
constexpr std::string_view kEntriesMagic = "PQAENT01";
constexpr std::uint32_t kFormatVersion = 1;

struct WorstOnTop {
    bool operator()(const SearchHit& a, const SearchHit& b) const noexcept { return ranks_before(a, b); }
};

// Bounded selection of the best `top_n` hits.
class TopN {
public:
    explicit TopN(std::size_t n) : n_(n) { heap_.reserve(n); }

    void offer(SearchHit h) {
        if (n_ == 0) {
            return;
        }
        if (heap_.size() < n_) {
            heap_.push_back(h);
            std::push_heap(heap_.begin(), heap_.end(), WorstOnTop{});
        } else if (ranks_before(h, heap_.front())) {
            std::pop_heap(heap_.begin(), heap_.end(), WorstOnTop{});
            heap_.back() = h;
            std::push_heap(heap_.begin(), heap_.end(), WorstOnTop{});
        }
    }

    std::vector<SearchHit> take() && {
        std::sort(heap_.begin(), heap_.end(), ranks_before);
        return std::move(heap_);
    }

private:
    std::size_t n_;
    std::vector<SearchHit> heap_;
};

} // namespace

std::vector<SearchHit> exact_search(const MatrixView& vectors, std::span<const float> query, std::size_t top_n) {
    if (query.size() != vectors.dim) {
        throw Error("query dimension " + std::to_string(query.size()) + " does not match index dimension " +
                    std::to_string(vectors.dim));
    }
    const auto& kern = simd::active_kernels();
    TopN top(top_n);
    for (std::size_t i = 0; i < vectors.rows; ++i) {
        top.offer({static_cast<std::uint32_t>(i), kern.dot(query.data(), vectors.row(i).data(), vectors.dim)});
    }
    return std::move(top).take();
}

PhraseCandidate PhraseIndex::candidate(std::uint32_t phrase_id) const {
    const auto& e = entry(phrase_id);
    const auto& s = sentences_.at(e.sentence);
    return PhraseCandidate{doc_ids_.at(s.doc), s.sent_index, e.tokens, e.chars};
}

std::vector<SearchHit> PhraseIndex::search_dense(std::span<const float> query, std::size_t top_n,
                                                 std::size_t nprobe, SearchStats* stats) const {
    if (query.size() != dim_) {
        throw Error("query dimension " + std::to_string(query.size()) + " does not match index dimension " +
                    std::to_string(dim_));
    }
    const auto& kern = simd::active_kernels();
    nprobe = std::clamp<std::size_t>(nprobe, 1, k_);

    std::vector<float> cscore(k_);
    kern.dot_rows(query.data(), centroids_.data(), k_, dim_, cscore.data());
    std::vector<std::uint32_t> order(k_);
    std::iota(order.begin(), order.end(), 0u);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(nprobe), order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                          return cscore[a] > cscore[b] || (cscore[a] == cscore[b] && a < b);
                      });

    TopN top(top_n);
    std::size_t scanned = 0;
    for (std::size_t p = 0; p < nprobe; ++p) {
        for (std::uint32_t id : postings_[order[p]]) {
            top.offer({id, kern.dot(query.data(), matrix_.data() + std::size_t(id) * dim_, dim_)});
        }
        scanned += postings_[order[p]].size();
    }
    if (stats != nullptr) {
        stats->centroids_scored = k_;
        stats->probed_entries = scanned;
        stats->inner_products = k_ + scanned;
    }
    return std::move(top).take();
}

std::vector<SearchHit> PhraseIndex::exact_search(std::span<const float> query, std::size_t top_n) const {
    return phraseqa::exact_search(vectors(), query, top_n);
}

PhraseIndex build_index(IndexInput input, const IndexConfig& cfg, BuildReport* report) {
    if (input.entries.empty()) {
        throw Error("build_index: no phrase entries");
    }
    const std::size_t n = input.entries.size();
    const std::size_t dim = input.entries.front().dense.dim();
    if (dim == 0) {
        throw Error("build_index: empty dense vectors");
    }

    PhraseIndex idx;
    idx.cfg_ = cfg;
    idx.dim_ = dim;
    idx.matrix_.reserve(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        auto& e = input.entries[i];
        if (e.dense.dim() != dim) {
            throw Error("build_index: entry " + std::to_string(i) + " has dimension " + std::to_string(e.dense.dim()) +
                        ", expected " + std::to_string(dim));
        }
        if (e.sentence >= input.sentences.size() || e.sparse >= input.sparse.size()) {
            throw Error("build_index: entry " + std::to_string(i) + " references a missing sentence or sparse vector");
        }
        idx.matrix_.insert(idx.matrix_.end(), e.dense.values.begin(), e.dense.values.end());
        e.dense.values.clear();
        e.dense.values.shrink_to_fit();
    }
    for (const auto& s : input.sentences) {
        if (s.doc >= input.doc_ids.size()) {
            throw Error("build_index: sentence references a missing document");
        }
    }

    std::size_t k = std::max<std::size_t>(cfg.num_centroids, 1);
    BuildReport local;
    local.requested_centroids = cfg.num_centroids;
    if (k > n) {
        local.warnings.push_back("num_centroids " + std::to_string(cfg.num_centroids) + " exceeds entry count " +
                                 std::to_string(n) + "; clamped to " + std::to_string(n));
        std::cerr << "phraseqa: warning: " << local.warnings.back() << '\n';
        k = n;
    }

    const MatrixView view{idx.matrix_, n, dim};
    auto km = kmeans(view, k, cfg.kmeans_iters, cfg.seed);
    idx.k_ = k;
    idx.centroids_ = std::move(km.centroids);
    idx.postings_.assign(k, {});
    for (std::size_t i = 0; i < n; ++i) {
        idx.postings_[km.assignments[i]].push_back(static_cast<std::uint32_t>(i));
    }
    local.num_centroids = k;
    local.kmeans_iterations = km.iterations;

    idx.idf_ = std::move(input.idf);
    idx.doc_ids_ = std::move(input.doc_ids);
    idx.sentences_ = std::move(input.sentences);
    idx.sparse_ = std::move(input.sparse);
    idx.entries_ = std::move(input.entries);
    if (report != nullptr) {
        *report = std::move(local);
    }
    return idx;
}

void PhraseIndex::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    {
        io::Writer w(dir / "header.bin");
        w.put_bytes(kHeaderMagic);
        w.put<std::uint32_t>(kFormatVersion);
        w.put<std::uint64_t>(cfg_.num_centroids);
        w.put<std::uint64_t>(cfg_.kmeans_iters);
        w.put<std::uint64_t>(cfg_.seed);
        w.put<std::uint64_t>(cfg_.encoder.dense_dim);
        w.put<std::uint32_t>(cfg_.encoder.sparse_dim);
        w.put<float>(cfg_.encoder.context_weight);
        w.put<std::uint64_t>(cfg_.encoder.seed);
        w.put<std::uint64_t>(cfg_.encoder.max_phrase_len);
        w.put<std::uint64_t>(dim_);
        w.put<std::uint64_t>(k_);
        w.put<std::uint64_t>(idf_.num_sentences());
        w.put<std::uint64_t>(idf_.document_frequencies().size());
        for (const auto& [term, df] : idf_.document_frequencies()) {
            w.put<std::uint32_t>(term);
            w.put<std::uint32_t>(df);
        }
        w.put_array(centroids_);
        w.close();
    }
    {
        io::Writer w(dir / "postings.bin");
        w.put_bytes(kPostingsMagic);
        w.put<std::uint32_t>(kFormatVersion);
        w.put<std::uint64_t>(postings_.size());
        for (const auto& p : postings_) {
            w.put<std::uint64_t>(p.size());
            w.put_array(p);
        }
        w.close();
    }
    {
        io::Writer w(dir / "entries.bin");
        w.put_bytes(kEntriesMagic);
        w.put<std::uint32_t>(kFormatVersion);
        w.put<std::uint64_t>(doc_ids_.size());
        for (const auto& id : doc_ids_) {
            w.put_string(id);
        }
        w.put<std::uint64_t>(sentences_.size());
        for (const auto& s : sentences_) {
            w.put<std::uint32_t>(s.doc);
            w.put<std::uint32_t>(s.sent_index);
            w.put<std::uint64_t>(s.span.begin);
            w.put<std::uint64_t>(s.span.end);
        }
        w.put<std::uint64_t>(sparse_.size());
        for (const auto& sv : sparse_) {
            w.put<std::uint64_t>(sv.entries.size());
            for (const auto& e : sv.entries) {
                w.put<std::uint32_t>(e.term_id);
                w.put<float>(e.weight);
            }
        }
        w.put<std::uint64_t>(entries_.size());
        for (const auto& e : entries_) {
            w.put<std::uint32_t>(e.sentence);
            w.put<std::uint32_t>(e.sparse);
            w.put<std::uint32_t>(e.tokens.begin);
            w.put<std::uint32_t>(e.tokens.end);
            w.put<std::uint64_t>(e.chars.begin);
            w.put<std::uint64_t>(e.chars.end);
        }
        w.put_array(matrix_);
        w.close();
    }
}

PhraseIndex PhraseIndex::load(const std::filesystem::path& dir) {
    PhraseIndex idx;
    {
        io::Reader r(dir / "header.bin");
        r.expect_magic(kHeaderMagic, kFormatVersion);
        idx.cfg_.num_centroids = r.get<std::uint64_t>();
        idx.cfg_.kmeans_iters = r.get<std::uint64_t>();
        idx.cfg_.seed = r.get<std::uint64_t>();
        idx.cfg_.encoder.dense_dim = r.get<std::uint64_t>();
        idx.cfg_.encoder.sparse_dim = r.get<std::uint32_t>();
        idx.cfg_.encoder.context_weight = r.get<float>();
        idx.cfg_.encoder.seed = r.get<std::uint64_t>();
        idx.cfg_.encoder.max_phrase_len = r.get<std::uint64_t>();
        idx.dim_ = r.get<std::uint64_t>();
        idx.k_ = r.get<std::uint64_t>();
        const auto num_sentences = r.get<std::uint64_t>();
        const auto nterms = r.get<std::uint64_t>();
        std::vector<std::pair<std::uint32_t, std::uint32_t>> df;
        df.reserve(nterms);
        for (std::uint64_t i = 0; i < nterms; ++i) {
            const auto term = r.get<std::uint32_t>();
            const auto count = r.get<std::uint32_t>();
            df.emplace_back(term, count);
        }
        idx.idf_ = IdfTable(num_sentences, std::move(df));
        idx.centroids_ = r.get_array<float>(idx.k_ * idx.dim_);
        r.expect_end();
    }
    {
        io::Reader r(dir / "postings.bin");
        r.expect_magic(kPostingsMagic, kFormatVersion);
        const auto k = r.get<std::uint64_t>();
        if (k != idx.k_) {
            throw Error("postings.bin: centroid count mismatch");
        }
        idx.postings_.resize(k);
        for (auto& p : idx.postings_) {
            p = r.get_array<std::uint32_t>(r.get<std::uint64_t>());
        }
        r.expect_end();
    }
    {
        io::Reader r(dir / "entries.bin");
        r.expect_magic(kEntriesMagic, kFormatVersion);
        idx.doc_ids_.resize(r.get<std::uint64_t>());
        for (auto& id : idx.doc_ids_) {
            id = r.get_string();
        }
        idx.sentences_.resize(r.get<std::uint64_t>());
        for (auto& s : idx.sentences_) {
            s.doc = r.get<std::uint32_t>();
            s.sent_index = r.get<std::uint32_t>();
            s.span.begin = r.get<std::uint64_t>();
            s.span.end = r.get<std::uint64_t>();
            if (s.doc >= idx.doc_ids_.size()) {
                throw Error("entries.bin: sentence references a missing document");
            }
        }
        idx.sparse_.resize(r.get<std::uint64_t>());
        for (auto& sv : idx.sparse_) {
            sv.entries.resize(r.get<std::uint64_t>());
            for (auto& e : sv.entries) {
                e.term_id = r.get<std::uint32_t>();
                e.weight = r.get<float>();
            }
        }
        idx.entries_.resize(r.get<std::uint64_t>());
        for (auto& e : idx.entries_) {
            e.sentence = r.get<std::uint32_t>();
            e.sparse = r.get<std::uint32_t>();
            e.tokens.begin = r.get<std::uint32_t>();
            e.tokens.end = r.get<std::uint32_t>();
            e.chars.begin = r.get<std::uint64_t>();
            e.chars.end = r.get<std::uint64_t>();
            if (e.sentence >= idx.sentences_.size() || e.sparse >= idx.sparse_.size()) {
                throw Error("entries.bin: entry references a missing sentence or sparse vector");
            }
        }
        idx.matrix_ = r.get_array<float>(idx.entries_.size() * idx.dim_);
        r.expect_end();
    }

    std::vector<std::uint8_t> seen(idx.entries_.size(), 0);
    for (const auto& p : idx.postings_) {
        for (auto id : p) {
            if (id >= seen.size() || seen[id]++ != 0) {
                throw Error("postings.bin: phrase ids must appear exactly once");
            }
        }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
        throw Error("postings.bin: phrase missing from postings");
    }
    return idx;
}

IndexInput encode_corpus(const Corpus& corpus, const Encoder& encoder) {
    IndexInput in;
    in.idf = encoder.idf();
    const std::size_t max_len = encoder.config().max_phrase_len;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        const auto doc_ord = static_cast<std::uint32_t>(in.doc_ids.size());
        in.doc_ids.push_back(corpus[d].doc_id);
        for (const auto& s : analyze(corpus[d])) {
            const auto sent_ref = static_cast<std::uint32_t>(in.sentences.size());
            in.sentences.push_back({doc_ord, s.sentence.sent_index, s.sentence.char_span});
            in.sparse.push_back(encoder.encode_sentence_sparse(s));
            const auto cands = enumerate_phrases(s, max_len);
            auto dense = encoder.encode_sentence_dense(s, cands);
            for (std::size_t c = 0; c < cands.size(); ++c) {
                in.entries.push_back({sent_ref, sent_ref, cands[c].token_span, cands[c].char_span, std::move(dense[c])});
            }
        }
    }
    return in;
}

IndexInput input_from_vectors(const Corpus& corpus, const PhraseVectorMap& vectors, IdfTable idf) {
    // Group by (doc, sentence), keeping corpus order and (i, j) order within.
    std::vector<std::tuple<std::size_t, std::uint32_t, TokenSpan, const PhraseVectorMap::value_type*>> items;
    items.reserve(vectors.size());
    for (const auto& kv : vectors) {
        const auto d = corpus.find(kv.first.doc_id);
        if (!d) {
            throw Error("vector for unknown doc_id '" + kv.first.doc_id + "'");
        }
        items.emplace_back(*d, kv.first.sent_index, kv.first.token_span, &kv);
    }
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        return std::tie(std::get<0>(a), std::get<1>(a), std::get<2>(a)) <
               std::tie(std::get<0>(b), std::get<1>(b), std::get<2>(b));
    });

    IndexInput in;
    in.idf = std::move(idf);
    std::size_t cur_doc = SIZE_MAX;
    std::uint32_t cur_sent = UINT32_MAX;
    std::vector<Sentence> sentences;
    for (const auto& [d, sent, span, kv] : items) {
        if (d != cur_doc) {
            cur_doc = d;
            cur_sent = UINT32_MAX;
            in.doc_ids.push_back(corpus[d].doc_id);
            sentences = segment_sentences(corpus[d]);
        }
        if (sent != cur_sent) {
            cur_sent = sent;
            in.sentences.push_back({static_cast<std::uint32_t>(in.doc_ids.size() - 1), sent,
                                    sentences.at(sent).char_span});
            in.sparse.push_back(kv->second.sparse);
        } else if (!(in.sparse.back() == kv->second.sparse)) {
            in.sparse.push_back(kv->second.sparse);
        }
        in.entries.push_back({static_cast<std::uint32_t>(in.sentences.size() - 1),
                              static_cast<std::uint32_t>(in.sparse.size() - 1), kv->first.token_span,
                              kv->first.char_span, kv->second.dense});
    }
    return in;
}

} // namespace phraseqa
