#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "conductor/config.hpp"
#include "conductor/errors.hpp"

namespace conductor {

struct QueryRequest {
    std::string user_id;
    std::string role;
    std::map<std::string, Scalar> attributes;
    std::string prompt;
    bool verbose = false;
};

QueryRequest query_request_from_json(const nlohmann::json& body);

nlohmann::json error_document(const PipelineError& e);

// The running gateway state: an immutable config/graph/service snapshot that
// reload() swaps atomically, plus the semantic cache and metrics, which
// survive reloads. handle_query runs the full pipeline:
// validate_context -> decompose -> plan -> execute.
class Platform {
public:
    explicit Platform(PlatformConfig config);
    explicit Platform(const std::filesystem::path& config_path);

    AggregateResponse handle_query(const QueryRequest& request); // throws PipelineError
    // JSON-in/JSON-out wrapper that never throws: either the reply document
    // or {error:{stage, code, message}}.
    nlohmann::json handle_query_json(const nlohmann::json& body);

    void reload(PlatformConfig config);
    void reload_from_file(const std::filesystem::path& path);

    nlohmann::json metrics_json() const;

    SemanticCache& cache() { return cache_; }
    std::shared_ptr<const PlatformConfig> config() const;
    std::shared_ptr<const GraphRegistry> graphs() const;
    std::shared_ptr<const ServiceRegistry> services() const;
    const std::filesystem::path& config_path() const { return config_path_; }

    // Sub-prompt list for a request after context validation (bench reuse).
    std::vector<SubPrompt> decompose_request(const QueryRequest& request) const;

private:
    struct Snapshot {
        std::shared_ptr<const PlatformConfig> config;
        std::shared_ptr<GraphRegistry> graphs;
        std::shared_ptr<ServiceRegistry> services;
    };
    static Snapshot build_snapshot(PlatformConfig config);
    std::shared_ptr<const Snapshot> snapshot() const;

    void record_query(double latency_ms, int steps);

    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const Snapshot> snapshot_;
    std::filesystem::path config_path_;

    SemanticCache cache_;

    mutable std::mutex metrics_mutex_;
    std::vector<double> latencies_ms_;
    std::vector<int> step_counts_;
};

} // namespace conductor
