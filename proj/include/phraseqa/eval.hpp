#pragma once

// QA evaluation (in-sentence exact match at k, seconds per query) and
// TREC-style IR metrics (P@k, NDCG@k, MAP, Bpref).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace phraseqa {

enum class QuestionType { interrogative, keyword };

std::string_view to_string(QuestionType t) noexcept;

struct EvalExample {
    std::string question;
    std::vector<std::string> answers;
    QuestionType qtype = QuestionType::interrogative;
    std::string source;
};

/// Line-delimited {question, answers, type, source}.
std::vector<EvalExample> parse_dataset(std::istream& in);
std::vector<EvalExample> load_dataset(const std::filesystem::path& path);

/// 1 iff some normalized gold answer is a substring of the normalized
/// sentence. Golds that normalize to "" never match.
int em_sent(std::string_view sentence, const std::vector<std::string>& golds);

/// 1 iff em_sent holds for any of the first min(k, size) sentences.
int em_sent_at_k(const std::vector<std::string>& sentences, const std::vector<std::string>& golds, std::size_t k);

/// Maps a question to its ranked answer sentences.
using QaSystem = std::function<std::vector<std::string>(const std::string& question)>;

struct SplitScores {
    std::size_t count = 0;
    std::vector<double> em_at_k; // parallel to QaReport::ks

    friend bool operator==(const SplitScores&, const SplitScores&) = default;
};

struct QaReport {
    std::vector<std::size_t> ks;
    SplitScores overall;
    std::map<std::string, SplitScores> by_type;
    std::map<std::string, SplitScores> by_source;
    double seconds_per_query = 0.0;
    /// per_example[i][j] = EM_sent@ks[j] of example i.
    std::vector<std::vector<int>> per_example;

    nlohmann::json to_json() const;
    std::string to_text() const;
};

/// Runs the system on every example (across `threads` workers) and
/// aggregates in dataset order. s/Q is mean wall-clock time per call.
QaReport evaluate_qa(const std::vector<EvalExample>& dataset, const QaSystem& system, std::vector<std::size_t> ks,
                     std::size_t threads = 1);

struct QRel {
    std::string topic_id;
    std::string doc_id;
    int grade = 0;
};

struct RunEntry {
    std::string topic_id;
    std::string doc_id;
    std::size_t rank = 0; // 1-based
    double score = 0.0;
};

/// `topic Q0 docid rank score tag`
std::vector<RunEntry> parse_run(std::istream& in);
/// `topic iteration docid grade`
std::vector<QRel> parse_qrels(std::istream& in);
std::vector<RunEntry> load_run(const std::filesystem::path& path);
std::vector<QRel> load_qrels(const std::filesystem::path& path);

enum class GainKind { linear, exponential };

struct IrConfig {
    std::size_t k_p = 5;
    std::size_t k_ndcg = 10;
    GainKind gain = GainKind::linear;
};

struct TopicMetrics {
    std::string topic_id;
    bool defined = false; // false when the topic has no relevant documents
    std::size_t num_relevant = 0;
    std::size_t num_nonrelevant = 0;
    std::size_t retrieved = 0;
    double p_at_k = 0.0;
    double ndcg = 0.0;
    double ap = 0.0;
    double bpref = 0.0;
};

struct IrReport {
    IrConfig config;
    std::vector<TopicMetrics> topics; // sorted by topic id
    std::size_t evaluated = 0;
    double p_at_k = 0.0;
    double ndcg = 0.0;
    double map = 0.0;
    double bpref = 0.0;

    nlohmann::json to_json() const;
    std::string to_text() const;
};

/// Evaluates every topic present in the run. Topics without relevant
/// judgments are reported as undefined and excluded from the means.
/// Throws Error on duplicate ranks or documents within a topic.
IrReport ir_metrics(const std::vector<RunEntry>& run, const std::vector<QRel>& qrels, const IrConfig& cfg = {});

} // namespace phraseqa
