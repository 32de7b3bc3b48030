#include "phraseqa/http_server.hpp"

#include <charconv>
#include <optional>

#include "httplib.h"

namespace phraseqa {

namespace {

constexpr std::size_t kMaxK = 1000;
constexpr std::size_t kMaxQueryBytes = 4096;

std::optional<std::size_t> parse_count(std::string_view s) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
        return std::nullopt;
    }
    return v;
}

HttpReply error_reply(int status, std::string_view code, std::string_view message) {
    return {status, error_json(code, message).dump()};
}

} // namespace

HttpReply handle_ask(const EngineHandle& handle, const AskOptions& defaults, const QueryParams& params) {
    auto q = params.find("q");
    if (q == params.end() || q->second.find_first_not_of(" \t\r\n") == std::string::npos) {
        return error_reply(400, "bad_parameter", "missing query parameter 'q'");
    }
    if (q->second.size() > kMaxQueryBytes) {
        return error_reply(400, "bad_parameter", "query too long");
    }
    AskOptions opts = defaults;
    if (auto it = params.find("k"); it != params.end()) {
        auto v = parse_count(it->second);
        if (!v || *v < 1 || *v > kMaxK) {
            return error_reply(400, "bad_parameter", "k must be an integer in [1, 1000]");
        }
        opts.k = *v;
    }
    if (auto it = params.find("nprobe"); it != params.end()) {
        auto v = parse_count(it->second);
        if (!v || *v < 1) {
            return error_reply(400, "bad_parameter", "nprobe must be a positive integer");
        }
        opts.nprobe = *v;
    }
    auto engine = handle.get();
    if (!engine) {
        return error_reply(503, "index_unavailable", "no index loaded");
    }
    try {
        return {200, to_json(engine->ask(q->second, opts)).dump()};
    } catch (const QueryError& e) {
        return error_reply(e.http_status(), e.code(), e.what());
    } catch (const std::exception& e) {
        return error_reply(500, "internal", e.what());
    }
}

HttpReply handle_health(const EngineHandle& handle) {
    auto engine = handle.get();
    if (!engine) {
        nlohmann::json j{{"status", "unavailable"}};
        return {503, j.dump()};
    }
    nlohmann::json j{{"status", "ok"},
                     {"index_version", engine->version()},
                     {"documents", engine->corpus().size()},
                     {"phrases", engine->index().size()},
                     {"centroids", engine->index().num_centroids()},
                     {"entities", engine->entity_index().entities().size()}};
    return {200, j.dump()};
}

struct ApiServer::Impl {
    Impl(EngineHandle& h, AskOptions d) : handle(h), defaults(std::move(d)) {}

    EngineHandle& handle;
    AskOptions defaults;
    httplib::Server server;
};

ApiServer::ApiServer(EngineHandle& handle, AskOptions defaults)
    : impl_(std::make_unique<Impl>(handle, std::move(defaults))) {
    auto send = [](httplib::Response& res, const HttpReply& reply) {
        res.status = reply.status;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_content(reply.body, "application/json");
    };
    impl_->server.Get("/api/ask", [this, send](const httplib::Request& req, httplib::Response& res) {
        QueryParams params;
        for (const auto& [key, value] : req.params) {
            params.emplace(key, value);
        }
        send(res, handle_ask(impl_->handle, impl_->defaults, params));
    });
    impl_->server.Get("/api/health", [this, send](const httplib::Request&, httplib::Response& res) {
        send(res, handle_health(impl_->handle));
    });
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) {
        throw Error("cannot bind " + host + ":" + std::to_string(port));
    }
    return bound;
}

void ApiServer::listen() { impl_->server.listen_after_bind(); }

void ApiServer::stop() {
    if (impl_) {
        impl_->server.stop();
    }
}

} // namespace phraseqa
