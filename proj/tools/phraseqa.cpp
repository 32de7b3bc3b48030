// phraseqa command-line entry point.

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "phraseqa/config.hpp"
#include "phraseqa/eval.hpp"
#include "phraseqa/http_server.hpp"
#include "phraseqa/service.hpp"

using namespace phraseqa;

namespace {

struct Overrides {
    std::optional<std::size_t> k;
    std::optional<std::size_t> nprobe;
    std::optional<double> lambda;
    std::optional<std::size_t> num_centroids;
    std::optional<std::uint64_t> seed;
    std::optional<int> port;
    std::optional<std::string> host;
    std::optional<std::size_t> threads;
    bool skip_malformed = false;
};

std::vector<std::size_t> parse_ks(const std::string& s) {
    std::vector<std::size_t> ks;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t pos = 0;
        const unsigned long v = std::stoul(item, &pos);
        if (pos != item.size() || v == 0) {
            throw Error("bad --ks value '" + item + "'");
        }
        ks.push_back(v);
    }
    if (ks.empty()) {
        throw Error("--ks is empty");
    }
    return ks;
}

void print_answers(const AskResponse& r) {
    std::cout << "query: " << r.query << "\n";
    std::cout << "phrase answers:\n";
    if (r.phrase_results.empty()) {
        std::cout << "  (none)\n";
    }
    for (std::size_t i = 0; i < r.phrase_results.size(); ++i) {
        const auto& a = r.phrase_results[i];
        const auto& s = a.sentence_text;
        std::cout << "  " << (i + 1) << ". [" << a.doc_id << "] " << a.title << "  score=" << a.scores.total << "\n     "
                  << s.substr(0, a.answer_span.begin) << "[[" << a.phrase_text << "]]" << s.substr(a.answer_span.end)
                  << "\n";
    }
    std::cout << "entities:\n";
    if (r.entity_results.empty()) {
        std::cout << "  (none)\n";
    }
    for (std::size_t i = 0; i < r.entity_results.size(); ++i) {
        const auto& e = r.entity_results[i];
        std::cout << "  " << (i + 1) << ". " << e.canonical_name << " (" << e.cui << ", " << to_string(e.etype)
                  << ")  score=" << e.score << "\n";
    }
    std::cout << "time: " << r.timing.total_ms << " ms\n";
}

int run_serve(const std::string& index_dir, const Settings& settings) {
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    sigaddset(&signals, SIGHUP);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    EngineHandle handle;
    try {
        handle.reset(Engine::open(index_dir));
    } catch (const std::exception& e) {
        std::cerr << "warning: " << e.what() << "; serving 503 until reload (SIGHUP)\n";
    }
    ApiServer server(handle, settings.ask);
    const int port = server.bind(settings.host, settings.port);
    std::cerr << "listening on " << settings.host << ":" << port << "\n";

    std::thread watcher([&] {
        for (;;) {
            int sig = 0;
            sigwait(&signals, &sig);
            if (sig == SIGHUP) {
                try {
                    handle.reload(index_dir);
                    std::cerr << "reloaded index " << handle.get()->version() << "\n";
                } catch (const std::exception& e) {
                    std::cerr << "reload failed: " << e.what() << "\n";
                }
                continue;
            }
            server.stop();
            return;
        }
    });
    server.listen();
    watcher.join();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phrase-indexed question answering over scientific abstracts"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides ov;
    bool as_json = false;
    app.add_option("--config", config_path, "JSON settings file")->check(CLI::ExistingFile);

    std::string corpus_path, out_dir, recent_after, dict_path, vectors_path;
    auto* index_cmd = app.add_subcommand("index", "Build an index directory from a JSONL corpus");
    index_cmd->add_option("--corpus", corpus_path, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    index_cmd->add_option("--out", out_dir, "Output directory")->required();
    index_cmd->add_option("--recent-after", recent_after, "Keep documents dated after YYYY-MM-DD");
    index_cmd->add_option("--dict", dict_path, "Entity dictionary JSONL")->check(CLI::ExistingFile);
    index_cmd->add_option("--vectors", vectors_path, "Precomputed phrase vectors JSONL")->check(CLI::ExistingFile);
    index_cmd->add_option("--num-centroids", ov.num_centroids, "IVF centroid count");
    index_cmd->add_option("--seed", ov.seed, "k-means seed");
    index_cmd->add_flag("--skip-malformed", ov.skip_malformed, "Skip malformed corpus lines");

    std::string index_dir, question;
    auto* ask_cmd = app.add_subcommand("ask", "Answer one question");
    ask_cmd->add_option("--index", index_dir, "Index directory")->required();
    ask_cmd->add_option("question", question, "Question text")->required();
    ask_cmd->add_option("-k,--k", ov.k, "Number of answers");
    ask_cmd->add_option("--nprobe", ov.nprobe, "Probed centroids");
    ask_cmd->add_option("--lambda", ov.lambda, "Sparse weight");
    ask_cmd->add_flag("--json", as_json, "Print the JSON response");

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
    serve_cmd->add_option("--index", index_dir, "Index directory")->required();
    serve_cmd->add_option("--port", ov.port, "Port (0 picks a free one)");
    serve_cmd->add_option("--host", ov.host, "Bind address");

    std::string dataset_path, ks_arg = "1,50";
    auto* eval_cmd = app.add_subcommand("eval", "EM_sent@k over a question dataset");
    eval_cmd->add_option("--index", index_dir, "Index directory")->required();
    eval_cmd->add_option("--dataset", dataset_path, "Dataset JSONL")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--ks", ks_arg, "Comma-separated cutoffs");
    eval_cmd->add_option("--nprobe", ov.nprobe, "Probed centroids");
    eval_cmd->add_option("--threads", ov.threads, "Worker threads");
    eval_cmd->add_flag("--json", as_json, "Print the JSON report");

    std::string run_path, qrels_path;
    auto* ir_cmd = app.add_subcommand("ir-eval", "P@5, NDCG@10, MAP and Bpref of a run");
    ir_cmd->add_option("--run", run_path, "TREC run file")->required()->check(CLI::ExistingFile);
    ir_cmd->add_option("--qrels", qrels_path, "TREC qrels file")->required()->check(CLI::ExistingFile);
    ir_cmd->add_flag("--json", as_json, "Print the JSON report");

    CLI11_PARSE(app, argc, argv);

    try {
        Settings settings;
        if (!config_path.empty()) {
            apply_config_file(settings, config_path);
        }
        apply_env(settings);
        if (ov.k) settings.ask.k = *ov.k;
        if (ov.nprobe) settings.ask.nprobe = *ov.nprobe;
        if (ov.lambda) settings.ask.lambda = *ov.lambda;
        if (ov.num_centroids) settings.index.num_centroids = *ov.num_centroids;
        if (ov.seed) settings.index.seed = *ov.seed;
        if (ov.port) settings.port = *ov.port;
        if (ov.host) settings.host = *ov.host;
        if (ov.threads) settings.eval_threads = *ov.threads;
        if (ov.skip_malformed) settings.skip_malformed = true;

        if (*index_cmd) {
            BuildOptions opts;
            opts.index = settings.index;
            opts.load.skip_malformed = settings.skip_malformed;
            if (!recent_after.empty()) {
                opts.recent_after = Date::parse(recent_after);
                if (!opts.recent_after) {
                    throw Error("--recent-after expects YYYY-MM-DD, got '" + recent_after + "'");
                }
            }
            if (!dict_path.empty()) opts.dictionary = dict_path;
            if (!vectors_path.empty()) opts.vectors = vectors_path;
            const auto s = build_artifacts(corpus_path, out_dir, opts);
            std::cout << "documents " << s.documents << " (skipped lines " << s.skipped_lines << ")\n"
                      << "sentences " << s.sentences << "\n"
                      << "phrases " << s.phrases << "\n"
                      << "centroids " << s.index.num_centroids << " (k-means iterations " << s.index.kmeans_iterations
                      << ")\n"
                      << "mentions " << s.mentions << ", entities " << s.entities << "\n"
                      << "version " << s.version << "\n";
            return 0;
        }
        if (*ask_cmd) {
            const auto engine = Engine::open(index_dir);
            const auto r = engine->ask(question, settings.ask);
            if (as_json) {
                std::cout << to_json(r).dump(2) << "\n";
            } else {
                print_answers(r);
            }
            return 0;
        }
        if (*serve_cmd) {
            return run_serve(index_dir, settings);
        }
        if (*eval_cmd) {
            const auto ks = parse_ks(ks_arg);
            const auto dataset = load_dataset(dataset_path);
            const auto engine = Engine::open(index_dir);
            AskOptions opts = settings.ask;
            opts.k = *std::max_element(ks.begin(), ks.end());
            opts.entity_top_k = 0;
            const QaSystem system = [&](const std::string& q) {
                std::vector<std::string> sentences;
                try {
                    for (auto& a : engine->ask(q, opts).phrase_results) {
                        sentences.push_back(std::move(a.sentence_text));
                    }
                } catch (const QueryError&) {
                }
                return sentences;
            };
            const auto report = evaluate_qa(dataset, system, ks, settings.eval_threads);
            std::cout << (as_json ? report.to_json().dump(2) + "\n" : report.to_text());
            return 0;
        }
        if (*ir_cmd) {
            const auto report = ir_metrics(load_run(run_path), load_qrels(qrels_path));
            std::cout << (as_json ? report.to_json().dump(2) + "\n" : report.to_text());
            return 0;
        }
    } catch (const QueryError& e) {
        std::cerr << "error (" << e.code() << "): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
