#pragma once

#include <memory>
#include <string>
#include <thread>

#include "conductor/platform.hpp"

namespace conductor {

// HTTP surface over a Platform:
//   POST /query   {user_id, role, attributes, prompt, verbose?}
//   GET  /metrics
//   GET  /health
//   POST /bench   {scenario|scenarios, repetitions?, fixture?|queries?}
class GatewayServer {
public:
    explicit GatewayServer(Platform& platform);
    ~GatewayServer();

    GatewayServer(const GatewayServer&) = delete;
    GatewayServer& operator=(const GatewayServer&) = delete;

    // Blocks until stop(); false when the port cannot be bound.
    bool listen(const std::string& host, int port);

    // Binds an ephemeral port and serves on a background thread (tests).
    int start_async(const std::string& host);

    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::thread worker_;
};

} // namespace conductor
