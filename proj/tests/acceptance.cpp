// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "phraseqa/dense_index.hpp"
#include "phraseqa/entity.hpp"
#include "phraseqa/eval.hpp"
#include "phraseqa/service.hpp"
#include "entity_fixture.hpp"
#include "metric_cases.hpp"
#include "support.hpp"

using namespace phraseqa;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (!o.pass) {
        ++failures;
    }
    std::printf("%s  %-32s %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// Shared IVF fixture: 5,000 entries, dim 64, 64 centroids, 100 queries.
struct IvfSuite {
    std::vector<std::vector<float>> vectors;
    std::vector<std::vector<float>> queries;
    PhraseIndex index;
    double build_seconds = 0.0;
};

const IvfSuite& ivf_suite() {
    static const IvfSuite suite = [] {
        IvfSuite s;
        const auto t0 = Clock::now();
        s.vectors = test::random_vectors(5000, 64, 101);
        s.queries = test::random_vectors(100, 64, 202);
        IndexConfig cfg;
        cfg.num_centroids = 64;
        cfg.encoder.dense_dim = 64;
        s.index = build_index(test::synthetic_input(s.vectors), cfg);
        s.build_seconds = seconds_since(t0);
        return s;
    }();
    return suite;
}

// Planted-answer corpus indexed with default settings.
struct PlantedIndex {
    test::PlantedSuite suite;
    std::filesystem::path dir;
    std::shared_ptr<const Engine> engine;
    BuildSummary summary;
    double build_seconds = 0.0;
};

const PlantedIndex& planted() {
    static const PlantedIndex p = [] {
        PlantedIndex out;
        const auto t0 = Clock::now();
        out.suite = test::make_planted_suite(200, 20);
        const auto root = test::scratch_dir("acceptance_planted");
        save_corpus(root / "corpus.jsonl", out.suite.corpus);
        out.dir = root / "index";
        out.summary = build_artifacts(root / "corpus.jsonl", out.dir, BuildOptions{});
        out.engine = Engine::open(out.dir);
        out.build_seconds = seconds_since(t0);
        return out;
    }();
    return p;
}

AskOptions planted_options(const Engine& engine) {
    AskOptions o;
    o.nprobe = engine.index().num_centroids();
    o.now = Date{2020, 12, 31};
    return o;
}

Outcome exhaustive_probe() {
    const auto t0 = Clock::now();
    const auto& s = ivf_suite();
    std::size_t mismatches = 0;
    for (const auto& q : s.queries) {
        if (s.index.search_dense(q, 10, 64) != s.index.exact_search(q, 10)) {
            ++mismatches;
        }
    }
    const double secs = seconds_since(t0);
    return {mismatches == 0 && secs < 30.0,
            std::to_string(s.index.size()) + " entries, " + std::to_string(s.index.num_centroids()) + " centroids, " +
                std::to_string(mismatches) + "/100 mismatches, " + fmt("%.2f s", secs) + " (limit 30 s)"};
}

Outcome recall_monotonicity() {
    const auto& s = ivf_suite();
    std::vector<double> recalls;
    for (std::size_t nprobe : {1, 2, 4, 8, 16, 32, 64}) {
        double total = 0.0;
        for (const auto& q : s.queries) {
            total += test::recall_at(s.index.search_dense(q, 10, nprobe), s.index.exact_search(q, 10));
        }
        recalls.push_back(total / double(s.queries.size()));
    }
    bool monotone = true;
    std::string detail = "recall@10:";
    for (std::size_t i = 0; i < recalls.size(); ++i) {
        monotone &= i == 0 || recalls[i] >= recalls[i - 1];
        detail += fmt(" %.3f", recalls[i]);
    }
    return {monotone && recalls.back() == 1.0, detail};
}

Outcome work_bound() {
    const auto& s = ivf_suite();
    std::size_t checked = 0, violations = 0, max_ip = 0;
    for (const auto& q : s.queries) {
        for (std::size_t nprobe : {1, 2, 4, 8, 16, 32, 64}) {
            SearchStats st;
            s.index.search_dense(q, 10, nprobe, &st);
            ++checked;
            violations += st.inner_products > s.index.num_centroids() + st.probed_entries;
            max_ip = std::max(max_ip, st.inner_products);
        }
    }
    return {violations == 0, std::to_string(checked) + " searches, " + std::to_string(violations) +
                                 " over bound, max inner products " + std::to_string(max_ip)};
}

Outcome planted_answers() {
    const auto t0 = Clock::now();
    const auto& p = planted();
    std::vector<EvalExample> ds;
    for (const auto& q : p.suite.queries) {
        ds.push_back({q.query, {q.answer}, QuestionType::keyword, "planted"});
    }
    const auto opts = [&] {
        auto o = planted_options(*p.engine);
        o.k = 50;
        return o;
    }();
    const QaSystem system = [&](const std::string& q) {
        std::vector<std::string> out;
        for (auto& a : p.engine->ask(q, opts).phrase_results) {
            out.push_back(std::move(a.sentence_text));
        }
        return out;
    };
    const auto r = evaluate_qa(ds, system, {1, 50});
    const double secs = seconds_since(t0);
    const double em1 = r.overall.em_at_k[0], em50 = r.overall.em_at_k[1];
    return {em1 >= 0.9 && em50 == 1.0 && secs < 60.0,
            std::to_string(p.summary.phrases) + " phrases, " + std::to_string(p.engine->index().num_centroids()) +
                " centroids, EM_sent@1 " + fmt("%.2f", em1) + ", EM_sent@50 " + fmt("%.2f", em50) + ", " +
                fmt("%.2f s", secs) + " incl. build (limit 60 s)"};
}

Outcome metric_oracles() {
    std::size_t em_ok = 0;
    const auto cases = test::em_cases();
    for (const auto& c : cases) {
        em_ok += test::run_em_case(c) == c.expected;
    }

    std::ifstream in(test::data_path("ir_oracle.json"));
    const auto instances = json::parse(in);
    std::size_t ir_ok = 0;
    double worst = 0.0;
    for (const auto& inst : instances) {
        std::vector<RunEntry> run;
        for (const auto& e : inst["run"]) run.push_back({e[0], e[1], e[2].get<std::size_t>(), e[3].get<double>()});
        std::vector<QRel> qrels;
        for (const auto& q : inst["qrels"]) qrels.push_back({q[0], q[1], q[2].get<int>()});
        const auto r = ir_metrics(run, qrels);
        bool ok = r.evaluated == inst["evaluated"].get<std::size_t>();
        auto near = [&](double a, double b) {
            worst = std::max(worst, std::abs(a - b));
            return std::abs(a - b) <= 1e-9;
        };
        ok &= near(r.p_at_k, inst["means"]["p5"]) && near(r.ndcg, inst["means"]["ndcg10"]) &&
              near(r.map, inst["means"]["ap"]) && near(r.bpref, inst["means"]["bpref"]);
        for (const auto& t : r.topics) {
            const auto& m = inst["topics"][t.topic_id];
            if (m.is_null()) {
                ok &= !t.defined;
                continue;
            }
            ok &= near(t.p_at_k, m["p5"]) && near(t.ndcg, m["ndcg10"]) && near(t.ap, m["ap"]) && near(t.bpref, m["bpref"]);
        }
        ir_ok += ok;
    }

    std::size_t hand_ok = 0;
    const auto hand = test::ir_hand_cases();
    for (const auto& c : hand) {
        const auto r = ir_metrics(c.run, c.qrels);
        bool ok = r.evaluated == 1;
        if (c.ap >= 0) ok &= r.map == c.ap;
        if (c.ndcg >= 0) ok &= r.ndcg == c.ndcg;
        if (c.bpref >= 0) ok &= r.bpref == c.bpref;
        hand_ok += ok;
    }
    return {em_ok == cases.size() && ir_ok == instances.size() && hand_ok == hand.size(),
            "EM " + std::to_string(em_ok) + "/" + std::to_string(cases.size()) + ", random IR " + std::to_string(ir_ok) +
                "/" + std::to_string(instances.size()) + " (max |diff| " + fmt("%.1e", worst) + "), hand IR " +
                std::to_string(hand_ok) + "/" + std::to_string(hand.size())};
}

Outcome argmax_realization() {
    const auto& p = planted();
    auto opts = planted_options(*p.engine);
    opts.lambda = 0.0;
    opts.metadata = {};
    std::size_t agree = 0;
    for (const auto& q : p.suite.queries) {
        const auto r = p.engine->ask(q.query, opts);
        const auto qv = p.engine->encoder().encode_query(q.query);
        const auto top = p.engine->index().exact_search(qv.dense.span(), 1);
        agree += !r.phrase_results.empty() && !top.empty() && r.phrase_results[0].phrase_id == top[0].phrase_id;
    }
    return {agree == p.suite.queries.size(),
            std::to_string(agree) + "/" + std::to_string(p.suite.queries.size()) + " top answers equal exact top-1"};
}

Outcome entity_suite() {
    std::size_t tag_ok = 0, tag_total = 0;
    {
        const auto dict = test::covid_dictionary();
        const auto ms = tag_mentions("preexisting cardiovascular disease (CVD)", dict);
        tag_ok += !ms.empty() && ms[0].surface == "cardiovascular disease";
        ++tag_total;
        EntityDictionary hd;
        hd.add({"H1", "heart", EntityType::other, {}});
        hd.add({"H2", "heart disease", EntityType::disease, {}});
        const auto h = tag_mentions("heart disease", hd);
        tag_ok += h.size() == 1 && h[0].surface == "heart disease" && h[0].cui == "H2";
        ++tag_total;
        tag_ok += tag_mentions("", dict).empty();
        ++tag_total;
    }

    const auto corpus = test::fixture_corpus();
    const auto dict = test::covid_dictionary();
    const auto idx = build_entity_index(corpus, dict);
    std::size_t brute_ok = 0, brute_total = 0;
    for (const auto& q : test::kFixtureQueries) {
        for (std::size_t k : {1, 3, 10}) {
            brute_ok += idx.search(q, k) == test::brute_force_search(corpus, dict, q, k);
            ++brute_total;
        }
    }

    const auto dir = test::scratch_dir("acceptance_entity");
    idx.save(dir / "entities.json");
    const auto back = EntityIndex::load(dir / "entities.json");
    std::size_t rt_ok = 0;
    for (const auto& q : test::kFixtureQueries) {
        rt_ok += back.search(q, 10) == idx.search(q, 10);
    }
    return {tag_ok == tag_total && brute_ok == brute_total && rt_ok == test::kFixtureQueries.size() && back == idx,
            "tagging " + std::to_string(tag_ok) + "/" + std::to_string(tag_total) + ", brute force " +
                std::to_string(brute_ok) + "/" + std::to_string(brute_total) + " on " + std::to_string(corpus.size()) +
                " docs, save/load " + std::to_string(rt_ok) + "/" + std::to_string(test::kFixtureQueries.size())};
}

Outcome dataset_plumbing() {
    std::istringstream in(test::covid_questions_shape());
    const auto ds = parse_dataset(in);
    const QaSystem system = [](const std::string& q) { return std::vector<std::string>{"stub answer for " + q}; };
    const auto r = evaluate_qa(ds, system, {1, 50});
    const auto count = [](const std::map<std::string, SplitScores>& m, const char* key) {
        auto it = m.find(key);
        return it == m.end() ? std::size_t{0} : it->second.count;
    };
    const std::size_t inter = count(r.by_type, "interrogative"), kw = count(r.by_type, "keyword");
    const std::size_t ql = count(r.by_source, "query_log"), kg = count(r.by_source, "kaggle"),
                      cw = count(r.by_source, "cdc_who");
    std::size_t ql_i = 0, kg_i = 0, cw_i = 0;
    for (const auto& e : ds) {
        if (e.qtype != QuestionType::interrogative) continue;
        ql_i += e.source == "query_log";
        kg_i += e.source == "kaggle";
        cw_i += e.source == "cdc_who";
    }
    const bool pass = ds.size() == 111 && r.overall.count == 111 && inter == 53 && kw == 58 && ql == 13 && kg == 56 &&
                      cw == 42 && ql_i == 4 && kg_i == 28 && cw_i == 21 && r.per_example.size() == 111;
    return {pass, std::to_string(ds.size()) + " records, interrogative " + std::to_string(inter) + ", keyword " +
                      std::to_string(kw) + ", query_log " + std::to_string(ql_i) + "/" + std::to_string(ql - ql_i) +
                      ", kaggle " + std::to_string(kg_i) + "/" + std::to_string(kg - kg_i) + ", cdc_who " +
                      std::to_string(cw_i) + "/" + std::to_string(cw - cw_i)};
}

Outcome determinism() {
    const auto& p = planted();
    const auto root = test::scratch_dir("acceptance_rebuild");
    const auto summary = build_artifacts(p.dir / "corpus.jsonl", root / "index", BuildOptions{});
    std::size_t files = 0, same = 0;
    for (const auto& e : std::filesystem::directory_iterator(p.dir)) {
        ++files;
        same += read_file(e.path()) == read_file(root / "index" / e.path().filename());
    }

    // in-memory engine over the same artifacts versus the one loaded from disk
    const auto corpus = load_corpus(p.dir / "corpus.jsonl");
    EncoderConfig ecfg = IndexConfig{}.encoder;
    const Encoder enc(ecfg, build_idf(corpus, ecfg));
    auto index = build_index(encode_corpus(corpus, enc), IndexConfig{});
    const Engine fresh(corpus, std::move(index), build_entity_index(corpus, EntityDictionary{}), MentionTable{},
                       p.engine->version());
    const auto loaded = Engine::open(root / "index");
    std::size_t equal = 0;
    const auto opts = planted_options(*loaded);
    for (const auto& q : p.suite.queries) {
        equal += to_json(fresh.ask(q.query, opts), false) == to_json(loaded->ask(q.query, opts), false);
    }
    return {files > 0 && same == files && summary.version == p.summary.version && equal == p.suite.queries.size(),
            std::to_string(same) + "/" + std::to_string(files) + " files byte-identical, " + std::to_string(equal) + "/" +
                std::to_string(p.suite.queries.size()) + " responses identical after save/load"};
}

} // namespace

int main() {
    std::printf("phraseqa acceptance\n");
    report("exhaustive-probe equivalence", exhaustive_probe);
    report("recall monotonicity", recall_monotonicity);
    report("work bound", work_bound);
    report("planted-answer end-to-end", planted_answers);
    report("metric oracles", metric_oracles);
    report("argmax realization", argmax_realization);
    report("entity suite", entity_suite);
    report("dataset plumbing", dataset_plumbing);
    report("determinism and round-trip", determinism);
    std::printf("%d failed\n", failures);
    return failures == 0 ? 0 : 1;
}
