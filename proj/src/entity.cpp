#include "phraseqa/entity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>

#include "json.hpp"

#include "phraseqa/error.hpp"

namespace phraseqa {

using json = nlohmann::json;

std::string_view to_string(EntityType t) noexcept {
    switch (t) {
    case EntityType::disease: return "disease";
    case EntityType::drug: return "drug";
    case EntityType::gene: return "gene";
    case EntityType::species: return "species";
    case EntityType::other: return "other";
    }
    return "other";
}

std::optional<EntityType> parse_entity_type(std::string_view s) noexcept {
    for (auto t : {EntityType::disease, EntityType::drug, EntityType::gene, EntityType::species, EntityType::other}) {
        if (to_string(t) == s) {
            return t;
        }
    }
    return std::nullopt;
}

std::string EntityDictionary::key_of(std::string_view surface) {
    std::string key;
    for (const auto& tok : tokenize(surface)) {
        if (!key.empty()) {
            key.push_back(' ');
        }
        key += tok.norm;
    }
    return key;
}

void EntityDictionary::add(Concept c) {
    if (c.cui.empty()) {
        throw Error("dictionary concept without cui");
    }
    if (by_cui_.contains(c.cui)) {
        throw Error("duplicate cui '" + c.cui + "'");
    }
    if (std::find(c.synonyms.begin(), c.synonyms.end(), c.canonical_name) == c.synonyms.end()) {
        c.synonyms.insert(c.synonyms.begin(), c.canonical_name);
    }
    const std::size_t idx = concepts_.size();
    std::vector<std::string> keys;
    for (const auto& syn : c.synonyms) {
        auto key = key_of(syn);
        if (key.empty()) {
            continue;
        }
        if (auto it = by_key_.find(key); it != by_key_.end() && it->second != idx) {
            throw Error("synonym '" + syn + "' of '" + c.cui + "' already maps to '" + concepts_[it->second].cui + "'");
        }
        keys.push_back(std::move(key));
    }
    for (auto& key : keys) {
        const std::size_t ntok = static_cast<std::size_t>(std::count(key.begin(), key.end(), ' ')) + 1;
        max_tokens_ = std::max(max_tokens_, ntok);
        by_key_.emplace(std::move(key), idx);
    }
    by_cui_.emplace(c.cui, idx);
    concepts_.push_back(std::move(c));
}

const Concept* EntityDictionary::lookup(std::string_view normalized_key) const {
    auto it = by_key_.find(std::string(normalized_key));
    return it == by_key_.end() ? nullptr : &concepts_[it->second];
}

const Concept* EntityDictionary::find_cui(std::string_view cui) const {
    auto it = by_cui_.find(std::string(cui));
    return it == by_cui_.end() ? nullptr : &concepts_[it->second];
}

EntityDictionary EntityDictionary::parse(std::istream& in) {
    EntityDictionary dict;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const auto j = json::parse(line);
            Concept c;
            c.cui = j.at("cui").get<std::string>();
            c.canonical_name = j.at("canonical_name").get<std::string>();
            const auto etype = j.value("etype", std::string("other"));
            auto t = parse_entity_type(etype);
            if (!t) {
                throw ParseError(line_no, "etype", "unknown etype '" + etype + "'");
            }
            c.etype = *t;
            if (auto it = j.find("synonyms"); it != j.end()) {
                c.synonyms = it->get<std::vector<std::string>>();
            }
            dict.add(std::move(c));
        } catch (const json::exception& e) {
            throw ParseError(line_no, "", std::string("bad dictionary record: ") + e.what());
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(line_no, "synonyms", e.what());
        }
    }
    return dict;
}

EntityDictionary EntityDictionary::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open dictionary " + path.string());
    }
    return parse(in);
}

void EntityDictionary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write dictionary " + path.string());
    }
    for (const auto& c : concepts_) {
        json j{{"cui", c.cui},
               {"canonical_name", c.canonical_name},
               {"etype", std::string(to_string(c.etype))},
               {"synonyms", c.synonyms}};
        out << j.dump() << '\n';
    }
}

std::vector<EntityMention> tag_mentions(std::string_view text, const EntityDictionary& dict, std::size_t base) {
    std::vector<EntityMention> out;
    if (dict.empty()) {
        return out;
    }
    const auto tokens = tokenize(text, base);
    const std::size_t n = tokens.size();
    std::size_t i = 0;
    while (i < n) {
        bool matched = false;
        for (std::size_t len = std::min(dict.max_tokens(), n - i); len >= 1; --len) {
            std::string key = tokens[i].norm;
            for (std::size_t t = i + 1; t < i + len; ++t) {
                key.push_back(' ');
                key += tokens[t].norm;
            }
            if (const Concept* c = dict.lookup(key)) {
                EntityMention m;
                m.char_span = {tokens[i].span.begin, tokens[i + len - 1].span.end};
                m.surface = std::string(text.substr(m.char_span.begin - base, m.char_span.size()));
                m.cui = c->cui;
                m.canonical_name = c->canonical_name;
                m.etype = c->etype;
                m.link_url = link_url_for(c->cui, c->etype);
                out.push_back(std::move(m));
                i += len;
                matched = true;
                break;
            }
        }
        if (!matched) {
            ++i;
        }
    }
    return out;
}

std::vector<EntityMention> tag_sentence(const Document& doc, const AnalyzedSentence& sentence,
                                        const EntityDictionary& dict) {
    const auto span = sentence.sentence.char_span;
    auto out = tag_mentions(std::string_view(doc.abstract).substr(span.begin, span.size()), dict, span.begin);
    for (auto& m : out) {
        m.doc_id = doc.doc_id;
        m.sent_index = sentence.sentence.sent_index;
    }
    return out;
}

namespace {

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string_view strip_prefix(std::string_view s, std::string_view prefix) {
    if (s.size() > prefix.size() && ascii_lower(s.substr(0, prefix.size())) == ascii_lower(prefix)) {
        return s.substr(prefix.size());
    }
    return s;
}

} // namespace

std::string link_url_for(std::string_view cui, EntityType etype) {
    const auto mesh = strip_prefix(cui, "MESH:");
    if (mesh.size() >= 2 && (mesh[0] == 'D' || mesh[0] == 'C') && all_digits(mesh.substr(1))) {
        const std::string_view type = etype == EntityType::drug ? "chem" : (etype == EntityType::gene ? "gene" : "disease");
        return "https://ctdbase.org/detail.go?type=" + std::string(type) + "&acc=MESH:" + std::string(mesh);
    }
    const auto taxon = strip_prefix(cui, "NCBITaxon:");
    if (all_digits(taxon)) {
        return "https://www.ncbi.nlm.nih.gov/Taxonomy/Browser/wwwtax.cgi?id=" + std::string(taxon);
    }
    return {};
}

std::pair<std::string, std::string> link_mention(const EntityMention& mention, const EntityDictionary& dict) {
    const Concept* c = dict.lookup(EntityDictionary::key_of(mention.surface));
    if (c == nullptr) {
        throw Error("surface '" + mention.surface + "' is not in the dictionary");
    }
    return {c->cui, link_url_for(c->cui, c->etype)};
}

void MentionTable::add(EntityMention m) {
    auto& bucket = by_sentence_[{m.doc_id, m.sent_index}];
    bucket.push_back(std::move(m));
    std::sort(bucket.begin(), bucket.end(),
              [](const auto& a, const auto& b) { return a.char_span.begin < b.char_span.begin; });
    ++count_;
}

const std::vector<EntityMention>& MentionTable::at(std::string_view doc_id, std::uint32_t sent_index) const {
    static const std::vector<EntityMention> empty;
    auto it = by_sentence_.find(std::pair<std::string, std::uint32_t>(doc_id, sent_index));
    return it == by_sentence_.end() ? empty : it->second;
}

std::vector<EntityMention> MentionTable::all() const {
    std::vector<EntityMention> out;
    out.reserve(count_);
    for (const auto& [key, ms] : by_sentence_) {
        out.insert(out.end(), ms.begin(), ms.end());
    }
    return out;
}

void MentionTable::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write mentions " + path.string());
    }
    for (const auto& m : all()) {
        json j{{"doc_id", m.doc_id},
               {"sent_index", m.sent_index},
               {"start", m.char_span.begin},
               {"end", m.char_span.end},
               {"surface", m.surface},
               {"cui", m.cui},
               {"canonical_name", m.canonical_name},
               {"etype", std::string(to_string(m.etype))},
               {"link_url", m.link_url}};
        out << j.dump() << '\n';
    }
}

MentionTable MentionTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open mentions " + path.string());
    }
    MentionTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const auto j = json::parse(line);
            EntityMention m;
            m.doc_id = j.at("doc_id").get<std::string>();
            m.sent_index = j.at("sent_index").get<std::uint32_t>();
            m.char_span = {j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>()};
            m.surface = j.at("surface").get<std::string>();
            m.cui = j.at("cui").get<std::string>();
            m.canonical_name = j.at("canonical_name").get<std::string>();
            m.etype = parse_entity_type(j.at("etype").get<std::string>()).value_or(EntityType::other);
            m.link_url = j.value("link_url", std::string());
            table.add(std::move(m));
        } catch (const json::exception& e) {
            throw ParseError(line_no, "", std::string("bad mention record: ") + e.what());
        }
    }
    return table;
}

MentionTable tag_corpus(const Corpus& corpus, const EntityDictionary& dict) {
    MentionTable table;
    for (const auto& doc : corpus) {
        for (const auto& s : analyze(doc)) {
            for (auto& m : tag_sentence(doc, s, dict)) {
                table.add(std::move(m));
            }
        }
    }
    return table;
}

std::vector<std::string> index_terms(std::string_view text) {
    std::vector<std::string> out;
    for (auto& t : tokenize(text)) {
        if (!t.punct) {
            out.push_back(std::move(t.norm));
        }
    }
    return out;
}

EntityIndex build_entity_index(const Corpus& corpus, const EntityDictionary& dict) {
    EntityIndex idx;
    std::map<std::string, std::map<std::uint32_t, std::uint32_t>> cui_doc_counts;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        const auto& doc = corpus[d];
        const auto doc_ord = static_cast<std::uint32_t>(d);
        idx.doc_ids_.push_back(doc.doc_id);

        std::map<std::string, std::uint32_t> tf;
        std::uint32_t len = 0;
        for (auto& term : index_terms(doc.abstract)) {
            ++tf[std::move(term)];
            ++len;
        }
        idx.doc_lengths_.push_back(len);
        for (auto& [term, count] : tf) {
            idx.postings_[term].push_back({doc_ord, count});
        }

        for (const auto& s : analyze(doc)) {
            for (const auto& m : tag_sentence(doc, s, dict)) {
                ++cui_doc_counts[m.cui][doc_ord];
            }
        }
    }

    idx.doc_entities_.assign(corpus.size(), {});
    for (const auto& [cui, per_doc] : cui_doc_counts) {
        const Concept* c = dict.find_cui(cui);
        const auto ent = static_cast<std::uint32_t>(idx.entities_.size());
        idx.entities_.push_back({cui, c->canonical_name, c->etype});
        for (const auto& [doc, count] : per_doc) {
            idx.doc_entities_[doc].push_back({ent, count});
        }
    }
    return idx;
}

std::uint32_t EntityIndex::count(std::string_view cui, std::string_view doc_id) const {
    auto eit = std::lower_bound(entities_.begin(), entities_.end(), cui,
                                [](const EntityInfo& e, std::string_view c) { return e.cui < c; });
    if (eit == entities_.end() || eit->cui != cui) {
        return 0;
    }
    const auto ent = static_cast<std::uint32_t>(eit - entities_.begin());
    auto dit = std::find(doc_ids_.begin(), doc_ids_.end(), doc_id);
    if (dit == doc_ids_.end()) {
        return 0;
    }
    for (const auto& ec : doc_entities_[static_cast<std::size_t>(dit - doc_ids_.begin())]) {
        if (ec.entity == ent) {
            return ec.count;
        }
    }
    return 0;
}

std::vector<EntitySearchResult> EntityIndex::search(std::string_view query, std::size_t top_k,
                                                    const Bm25Params& params, std::size_t max_support) const {
    std::vector<EntitySearchResult> results;
    const std::size_t n = doc_ids_.size();
    if (n == 0 || top_k == 0) {
        return results;
    }
    std::uint64_t total_len = 0;
    for (auto l : doc_lengths_) {
        total_len += l;
    }
    const double avgdl = double(total_len) / double(n);

    const auto terms = index_terms(query);
    const std::set<std::string> unique_terms(terms.begin(), terms.end());

    std::vector<double> bm25(n, 0.0);
    for (const auto& term : unique_terms) {
        auto it = postings_.find(term);
        if (it == postings_.end()) {
            continue;
        }
        const double df = double(it->second.size());
        const double idf = std::log(1.0 + (double(n) - df + 0.5) / (df + 0.5));
        for (const auto& p : it->second) {
            const double tf = p.tf;
            const double norm = params.k1 * (1.0 - params.b + params.b * double(doc_lengths_[p.doc]) / avgdl);
            bm25[p.doc] += idf * (tf * (params.k1 + 1.0)) / (tf + norm);
        }
    }

    std::vector<double> score(entities_.size(), 0.0);
    std::vector<std::vector<std::pair<double, std::uint32_t>>> support(entities_.size());
    for (std::size_t d = 0; d < n; ++d) {
        if (bm25[d] <= 0.0) {
            continue;
        }
        for (const auto& ec : doc_entities_[d]) {
            const double contrib = bm25[d] * std::log(1.0 + double(ec.count));
            score[ec.entity] += contrib;
            support[ec.entity].emplace_back(contrib, static_cast<std::uint32_t>(d));
        }
    }

    std::vector<std::uint32_t> order;
    for (std::uint32_t e = 0; e < entities_.size(); ++e) {
        if (score[e] > 0.0) {
            order.push_back(e);
        }
    }
    // entities_ is sorted by cui, so the ordinal breaks ties by cui.
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return score[a] > score[b] || (score[a] == score[b] && a < b);
    });
    if (order.size() > top_k) {
        order.resize(top_k);
    }
    for (auto e : order) {
        auto& sup = support[e];
        std::sort(sup.begin(), sup.end(),
                  [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
        EntitySearchResult r{entities_[e].cui, entities_[e].canonical_name, entities_[e].etype, score[e], {}};
        for (std::size_t i = 0; i < sup.size() && i < max_support; ++i) {
            r.doc_ids.push_back(doc_ids_[sup[i].second]);
        }
        results.push_back(std::move(r));
    }
    return results;
}

void EntityIndex::save(const std::filesystem::path& path) const {
    json j;
    j["format"] = "phraseqa-entity-index";
    j["version"] = 1;
    j["doc_ids"] = doc_ids_;
    j["doc_lengths"] = doc_lengths_;
    json terms = json::object();
    for (const auto& [term, plist] : postings_) {
        json arr = json::array();
        for (const auto& p : plist) {
            arr.push_back({p.doc, p.tf});
        }
        terms[term] = std::move(arr);
    }
    j["postings"] = std::move(terms);
    json ents = json::array();
    for (const auto& e : entities_) {
        ents.push_back({{"cui", e.cui}, {"canonical_name", e.canonical_name}, {"etype", std::string(to_string(e.etype))}});
    }
    j["entities"] = std::move(ents);
    json de = json::array();
    for (const auto& counts : doc_entities_) {
        json arr = json::array();
        for (const auto& ec : counts) {
            arr.push_back({ec.entity, ec.count});
        }
        de.push_back(std::move(arr));
    }
    j["doc_entities"] = std::move(de);

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write entity index " + path.string());
    }
    out << j.dump() << '\n';
}

EntityIndex EntityIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open entity index " + path.string());
    }
    EntityIndex idx;
    try {
        const auto j = json::parse(in);
        if (j.at("format") != "phraseqa-entity-index" || j.at("version") != 1) {
            throw Error(path.string() + ": not a version 1 entity index");
        }
        idx.doc_ids_ = j.at("doc_ids").get<std::vector<std::string>>();
        idx.doc_lengths_ = j.at("doc_lengths").get<std::vector<std::uint32_t>>();
        for (const auto& [term, arr] : j.at("postings").items()) {
            auto& plist = idx.postings_[term];
            for (const auto& p : arr) {
                plist.push_back({p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>()});
            }
        }
        for (const auto& e : j.at("entities")) {
            idx.entities_.push_back({e.at("cui").get<std::string>(), e.at("canonical_name").get<std::string>(),
                                     parse_entity_type(e.at("etype").get<std::string>()).value_or(EntityType::other)});
        }
        for (const auto& arr : j.at("doc_entities")) {
            auto& counts = idx.doc_entities_.emplace_back();
            for (const auto& ec : arr) {
                counts.push_back({ec.at(0).get<std::uint32_t>(), ec.at(1).get<std::uint32_t>()});
            }
        }
    } catch (const json::exception& e) {
        throw Error(path.string() + ": malformed entity index: " + e.what());
    }
    if (idx.doc_lengths_.size() != idx.doc_ids_.size() || idx.doc_entities_.size() != idx.doc_ids_.size()) {
        throw Error(path.string() + ": inconsistent entity index sizes");
    }
    return idx;
}

} // namespace phraseqa
