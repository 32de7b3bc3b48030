#include "phraseqa/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "phraseqa/error.hpp"
#include "phraseqa/text.hpp"

namespace phraseqa {

using json = nlohmann::json;

std::string_view to_string(QuestionType t) noexcept {
    return t == QuestionType::interrogative ? "interrogative" : "keyword";
}

std::vector<EvalExample> parse_dataset(std::istream& in) {
    std::vector<EvalExample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(line_no, "", std::string("invalid JSON: ") + e.what());
        }
        EvalExample ex;
        try {
            ex.question = j.at("question").get<std::string>();
            ex.answers = j.at("answers").get<std::vector<std::string>>();
            ex.source = j.value("source", std::string());
        } catch (const json::exception& e) {
            throw ParseError(line_no, "", std::string("bad dataset record: ") + e.what());
        }
        if (ex.answers.empty()) {
            throw ParseError(line_no, "answers", "at least one answer is required");
        }
        const auto type = j.value("type", std::string());
        if (type == "interrogative") {
            ex.qtype = QuestionType::interrogative;
        } else if (type == "keyword") {
            ex.qtype = QuestionType::keyword;
        } else {
            throw ParseError(line_no, "type", "type must be 'interrogative' or 'keyword', got '" + type + "'");
        }
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<EvalExample> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open dataset " + path.string());
    }
    return parse_dataset(in);
}

int em_sent(std::string_view sentence, const std::vector<std::string>& golds) {
    const auto norm_sentence = normalize_answer(sentence);
    if (norm_sentence.empty()) {
        return 0;
    }
    for (const auto& g : golds) {
        const auto ng = normalize_answer(g);
        if (!ng.empty() && norm_sentence.find(ng) != std::string::npos) {
            return 1;
        }
    }
    return 0;
}

int em_sent_at_k(const std::vector<std::string>& sentences, const std::vector<std::string>& golds, std::size_t k) {
    const std::size_t n = std::min(k, sentences.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (em_sent(sentences[i], golds) == 1) {
            return 1;
        }
    }
    return 0;
}

QaReport evaluate_qa(const std::vector<EvalExample>& dataset, const QaSystem& system, std::vector<std::size_t> ks,
                     std::size_t threads) {
    for (auto k : ks) {
        if (k == 0) {
            throw Error("evaluate_qa: k must be >= 1");
        }
    }
    QaReport report;
    report.ks = std::move(ks);
    const std::size_t n = dataset.size();
    report.per_example.assign(n, std::vector<int>(report.ks.size(), 0));
    std::vector<double> seconds(n, 0.0);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto sentences = system(dataset[i].question);
            seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            for (std::size_t j = 0; j < report.ks.size(); ++j) {
                report.per_example[i][j] = em_sent_at_k(sentences, dataset[i].answers, report.ks[j]);
            }
        }
    };
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    auto accumulate = [&](SplitScores& s, std::size_t i) {
        if (s.em_at_k.empty()) {
            s.em_at_k.assign(report.ks.size(), 0.0);
        }
        ++s.count;
        for (std::size_t j = 0; j < report.ks.size(); ++j) {
            s.em_at_k[j] += report.per_example[i][j];
        }
    };
    double total_seconds = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        accumulate(report.overall, i);
        accumulate(report.by_type[std::string(to_string(dataset[i].qtype))], i);
        accumulate(report.by_source[dataset[i].source], i);
        total_seconds += seconds[i];
    }
    auto finish = [&](SplitScores& s) {
        if (s.em_at_k.empty()) {
            s.em_at_k.assign(report.ks.size(), 0.0);
        }
        for (auto& v : s.em_at_k) {
            v = s.count == 0 ? 0.0 : v / double(s.count);
        }
    };
    finish(report.overall);
    for (auto& [_, s] : report.by_type) finish(s);
    for (auto& [_, s] : report.by_source) finish(s);
    report.seconds_per_query = n == 0 ? 0.0 : total_seconds / double(n);
    return report;
}

namespace {

json split_json(const SplitScores& s, const std::vector<std::size_t>& ks) {
    json j;
    j["count"] = s.count;
    json em = json::object();
    for (std::size_t i = 0; i < ks.size(); ++i) {
        em["EM_sent@" + std::to_string(ks[i])] = s.em_at_k[i];
    }
    j["em"] = std::move(em);
    return j;
}

std::string fixed4(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

} // namespace

json QaReport::to_json() const {
    json j;
    j["ks"] = ks;
    j["overall"] = split_json(overall, ks);
    for (const auto& [name, s] : by_type) j["by_type"][name] = split_json(s, ks);
    for (const auto& [name, s] : by_source) j["by_source"][name] = split_json(s, ks);
    j["seconds_per_query"] = seconds_per_query;
    return j;
}

std::string QaReport::to_text() const {
    std::ostringstream os;
    auto row = [&](const std::string& name, const SplitScores& s) {
        os << std::left << std::setw(22) << name << std::right << std::setw(6) << s.count;
        for (double v : s.em_at_k) {
            os << std::setw(14) << fixed4(v);
        }
        os << '\n';
    };
    os << std::left << std::setw(22) << "split" << std::right << std::setw(6) << "n";
    for (auto k : ks) {
        os << std::setw(14) << ("EM_sent@" + std::to_string(k));
    }
    os << '\n';
    row("overall", overall);
    for (const auto& [name, s] : by_type) row("type:" + name, s);
    for (const auto& [name, s] : by_source) row("source:" + (name.empty() ? std::string("-") : name), s);
    os << "s/Q " << fixed4(seconds_per_query) << '\n';
    return os.str();
}

std::vector<RunEntry> parse_run(std::istream& in) {
    std::vector<RunEntry> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string topic, q0, doc, tag;
        long long rank = 0;
        double score = 0.0;
        if (!(ls >> topic)) {
            continue;
        }
        if (!(ls >> q0 >> doc >> rank >> score)) {
            throw ParseError(line_no, "", "expected 'topic Q0 docid rank score tag'");
        }
        if (rank < 1) {
            throw ParseError(line_no, "rank", "rank must be >= 1");
        }
        out.push_back({topic, doc, static_cast<std::size_t>(rank), score});
    }
    return out;
}

std::vector<QRel> parse_qrels(std::istream& in) {
    std::vector<QRel> out;
    std::string line;
    std::size_t line_no = 0;
    std::set<std::pair<std::string, std::string>> seen;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string topic, iter, doc;
        int grade = 0;
        if (!(ls >> topic)) {
            continue;
        }
        if (!(ls >> iter >> doc >> grade)) {
            throw ParseError(line_no, "", "expected 'topic iteration docid grade'");
        }
        if (!seen.emplace(topic, doc).second) {
            throw ParseError(line_no, "docid", "duplicate judgment for (" + topic + ", " + doc + ")");
        }
        // Negative grades (e.g. -1 for "unjudgeable") count as judged non-relevant.
        out.push_back({topic, doc, std::max(grade, 0)});
    }
    return out;
}

std::vector<RunEntry> load_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open run " + path.string());
    }
    return parse_run(in);
}

std::vector<QRel> load_qrels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open qrels " + path.string());
    }
    return parse_qrels(in);
}

IrReport ir_metrics(const std::vector<RunEntry>& run, const std::vector<QRel>& qrels, const IrConfig& cfg) {
    std::map<std::string, std::unordered_map<std::string, int>> judged;
    for (const auto& q : qrels) {
        judged[q.topic_id][q.doc_id] = q.grade;
    }
    std::map<std::string, std::vector<const RunEntry*>> by_topic;
    for (const auto& r : run) {
        by_topic[r.topic_id].push_back(&r);
    }

    auto gain = [&](int grade) {
        return cfg.gain == GainKind::linear ? double(grade) : std::exp2(double(grade)) - 1.0;
    };

    IrReport report;
    report.config = cfg;
    for (auto& [topic, entries] : by_topic) {
        std::sort(entries.begin(), entries.end(), [](const auto* a, const auto* b) { return a->rank < b->rank; });
        std::set<std::string> docs;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (i > 0 && entries[i]->rank == entries[i - 1]->rank) {
                throw Error("topic " + topic + ": duplicate rank " + std::to_string(entries[i]->rank));
            }
            if (!docs.insert(entries[i]->doc_id).second) {
                throw Error("topic " + topic + ": document " + entries[i]->doc_id + " retrieved twice");
            }
        }

        TopicMetrics m;
        m.topic_id = topic;
        m.retrieved = entries.size();
        static const std::unordered_map<std::string, int> kNone;
        auto jt = judged.find(topic);
        const auto& judgments = jt == judged.end() ? kNone : jt->second;
        std::vector<int> grades;
        for (const auto& [doc, g] : judgments) {
            if (g > 0) {
                ++m.num_relevant;
                grades.push_back(g);
            } else {
                ++m.num_nonrelevant;
            }
        }
        if (m.num_relevant == 0) {
            report.topics.push_back(m);
            continue;
        }
        m.defined = true;
        const double R = double(m.num_relevant);
        const std::size_t bpref_denom = std::min(m.num_relevant, m.num_nonrelevant);

        std::size_t rel_seen = 0;
        std::size_t nonrel_seen = 0;
        std::size_t rel_in_p = 0;
        double dcg = 0.0;
        double ap_sum = 0.0;
        double bpref_sum = 0.0;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const std::size_t rank = i + 1;
            auto g = judgments.find(entries[i]->doc_id);
            if (g == judgments.end()) {
                continue; // unjudged
            }
            if (g->second > 0) {
                ++rel_seen;
                if (rank <= cfg.k_p) ++rel_in_p;
                if (rank <= cfg.k_ndcg) dcg += gain(g->second) / std::log2(double(rank) + 1.0);
                ap_sum += double(rel_seen) / double(rank);
                bpref_sum += bpref_denom == 0
                                 ? 1.0
                                 : 1.0 - double(std::min(nonrel_seen, bpref_denom)) / double(bpref_denom);
            } else {
                ++nonrel_seen;
            }
        }
        std::sort(grades.begin(), grades.end(), std::greater<>());
        double idcg = 0.0;
        for (std::size_t i = 0; i < grades.size() && i < cfg.k_ndcg; ++i) {
            idcg += gain(grades[i]) / std::log2(double(i + 1) + 1.0);
        }
        m.p_at_k = cfg.k_p == 0 ? 0.0 : double(rel_in_p) / double(cfg.k_p);
        m.ndcg = idcg > 0.0 ? dcg / idcg : 0.0;
        m.ap = ap_sum / R;
        m.bpref = bpref_sum / R;
        report.topics.push_back(m);
    }

    for (const auto& m : report.topics) {
        if (!m.defined) {
            continue;
        }
        ++report.evaluated;
        report.p_at_k += m.p_at_k;
        report.ndcg += m.ndcg;
        report.map += m.ap;
        report.bpref += m.bpref;
    }
    if (report.evaluated > 0) {
        const double n = double(report.evaluated);
        report.p_at_k /= n;
        report.ndcg /= n;
        report.map /= n;
        report.bpref /= n;
    }
    return report;
}

json IrReport::to_json() const {
    json j;
    const auto p_name = "P@" + std::to_string(config.k_p);
    const auto n_name = "NDCG@" + std::to_string(config.k_ndcg);
    j["evaluated_topics"] = evaluated;
    j["mean"] = {{p_name, p_at_k}, {n_name, ndcg}, {"MAP", map}, {"Bpref", bpref}};
    json topics_json = json::array();
    for (const auto& t : topics) {
        json tj{{"topic", t.topic_id}, {"defined", t.defined}, {"relevant", t.num_relevant},
                {"nonrelevant", t.num_nonrelevant}, {"retrieved", t.retrieved}};
        if (t.defined) {
            tj[p_name] = t.p_at_k;
            tj[n_name] = t.ndcg;
            tj["AP"] = t.ap;
            tj["Bpref"] = t.bpref;
        }
        topics_json.push_back(std::move(tj));
    }
    j["topics"] = std::move(topics_json);
    return j;
}

std::string IrReport::to_text() const {
    std::ostringstream os;
    os << std::left << std::setw(12) << "topic" << std::right << std::setw(10) << ("P@" + std::to_string(config.k_p))
       << std::setw(10) << ("NDCG@" + std::to_string(config.k_ndcg)) << std::setw(10) << "AP" << std::setw(10)
       << "Bpref" << '\n';
    for (const auto& t : topics) {
        os << std::left << std::setw(12) << t.topic_id << std::right;
        if (t.defined) {
            os << std::setw(10) << fixed4(t.p_at_k) << std::setw(10) << fixed4(t.ndcg) << std::setw(10) << fixed4(t.ap)
               << std::setw(10) << fixed4(t.bpref) << '\n';
        } else {
            os << std::setw(10) << "undef" << std::setw(10) << "undef" << std::setw(10) << "undef" << std::setw(10)
               << "undef" << '\n';
        }
    }
    os << std::left << std::setw(12) << "all" << std::right << std::setw(10) << fixed4(p_at_k) << std::setw(10)
       << fixed4(ndcg) << std::setw(10) << fixed4(map) << std::setw(10) << fixed4(bpref) << '\n';
    os << "evaluated topics: " << evaluated << '\n';
    return os.str();
}

} // namespace phraseqa
