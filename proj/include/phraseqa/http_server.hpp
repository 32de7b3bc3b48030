#pragma once

// JSON-over-HTTP front end: GET /api/ask and GET /api/health.

#include <map>
#include <memory>
#include <string>

#include "phraseqa/service.hpp"

namespace phraseqa {

struct HttpReply {
    int status = 200;
    std::string body;
};

using QueryParams = std::map<std::string, std::string, std::less<>>;

/// Parameters: q (required), k, nprobe. Errors come back as JSON bodies.
HttpReply handle_ask(const EngineHandle& handle, const AskOptions& defaults, const QueryParams& params);
HttpReply handle_health(const EngineHandle& handle);

class ApiServer {
public:
    ApiServer(EngineHandle& handle, AskOptions defaults);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Port 0 binds any free port. Returns the bound port; throws Error on failure.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace phraseqa
