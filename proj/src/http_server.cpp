#include "conductor/http_server.hpp"

#include <httplib.h>

#include "conductor/bench.hpp"
#include "conductor/errors.hpp"

namespace conductor {

struct GatewayServer::Impl {
    explicit Impl(Platform& p) : platform(p) {}
    Platform& platform;
    httplib::Server server;
};

namespace {

void reply_json(httplib::Response& res, const nlohmann::json& body) {
    bool is_error = body.is_object() && body.contains("error");
    res.status = is_error ? 400 : 200;
    res.set_content(body.dump(2), "application/json");
}

nlohmann::json parse_body(const httplib::Request& req) {
    try {
        return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception& e) {
        throw PipelineError(errors::kRequest, "parse-error",
                            std::string("request body is not valid JSON: ") + e.what());
    }
}

} // namespace

GatewayServer::GatewayServer(Platform& platform) : impl_(std::make_unique<Impl>(platform)) {
    auto& server = impl_->server;
    auto& p = impl_->platform;

    server.Post("/query", [&p](const httplib::Request& req, httplib::Response& res) {
        try {
            reply_json(res, p.handle_query_json(parse_body(req)));
        } catch (const PipelineError& e) {
            reply_json(res, error_document(e));
        }
    });

    server.Get("/metrics", [&p](const httplib::Request&, httplib::Response& res) {
        reply_json(res, p.metrics_json());
    });

    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        reply_json(res, nlohmann::json{{"status", "ok"}});
    });

    server.Post("/bench", [&p](const httplib::Request& req, httplib::Response& res) {
        try {
            auto body = parse_body(req);
            std::vector<Scenario> scenarios;
            if (body.contains("scenarios")) {
                for (const auto& s : body.at("scenarios"))
                    scenarios.push_back(scenario_from_string(s.get<std::string>()));
            } else {
                scenarios.push_back(
                    scenario_from_string(body.value("scenario", std::string{"cache_and_rules"})));
            }
            int repetitions = body.value("repetitions", 2);
            std::vector<BenchQuery> queries;
            if (body.contains("queries")) {
                queries = bench_queries_from_json(body);
            } else if (body.contains("fixture")) {
                queries = load_bench_fixture(body.at("fixture").get<std::string>());
            } else {
                throw PipelineError(errors::kBench, "bad-request",
                                    "bench request needs 'queries' or a 'fixture' path");
            }
            reply_json(res, run_bench(p, scenarios, queries, repetitions).to_json());
        } catch (const PipelineError& e) {
            reply_json(res, error_document(e));
        } catch (const std::exception& e) {
            reply_json(res, error_document(PipelineError(errors::kBench, "internal-error",
                                                         e.what())));
        }
    });
}

GatewayServer::~GatewayServer() {
    stop();
}

bool GatewayServer::listen(const std::string& host, int port) {
    return impl_->server.listen(host, port);
}

int GatewayServer::start_async(const std::string& host) {
    int port = impl_->server.bind_to_any_port(host);
    if (port <= 0) return -1;
    worker_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void GatewayServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
    if (worker_.joinable()) worker_.join();
}

} // namespace conductor
