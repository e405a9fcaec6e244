#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "conductor/scalar.hpp"

namespace conductor {

// Identifier the cache uses in ServiceResponse.source_service for hits.
inline constexpr const char* kCacheServiceId = "semantic-cache";

struct UserContext {
    std::string user_id;
    std::string role;
    std::map<std::string, Scalar> attributes;
};

// Throws unless user_id is non-empty. Role/attribute declarations are
// checked later against the loaded configuration (validate_context in
// config.hpp).
UserContext make_user_context(std::string user_id, std::string role,
                              std::map<std::string, Scalar> attributes = {});

struct Prompt {
    std::string text;
    UserContext context;
    std::chrono::system_clock::time_point received_at;
};

// Trims the text and rejects prompts that are empty afterwards.
Prompt make_prompt(std::string text, UserContext context);

struct SubPrompt {
    int id = 0;                       // ordinal within the decomposition, 1-based
    std::string intent;
    std::string text_template;        // may contain {R<k>} chaining placeholders
    std::set<int> depends_on;
    std::string target_domain;
};

// Enforces: id >= 1, non-empty intent/domain, no self-dependency, and every
// {R<k>} placeholder referencing a member of depends_on.
SubPrompt make_sub_prompt(int id, std::string intent, std::string text_template,
                          std::set<int> depends_on, std::string target_domain);

// List-level checks for a decomposition: ids unique, dependencies reference
// present ids, relation acyclic. Returns ids in a valid topological order.
std::vector<int> validate_decomposition(const std::vector<SubPrompt>& subs);

struct ServiceResponse {
    int sub_prompt_id = 0;
    std::string text;
    std::map<std::string, Scalar> facts;
    std::string source_service;
    bool from_cache = false;
    std::chrono::microseconds elapsed{0};
};

// Enforces: non-empty text, and from_cache implying source_service ==
// kCacheServiceId (a hit never masquerades as an AI service).
ServiceResponse make_service_response(int sub_prompt_id, std::string text,
                                      std::map<std::string, Scalar> facts,
                                      std::string source_service, bool from_cache,
                                      std::chrono::microseconds elapsed);

struct TraceRecord {
    int sub_prompt_id = 0;
    int stage = 0;                    // 0-based stage index
    bool cache_hit = false;
    int kg_queries = 0;
    int service_invocations = 0;
    std::chrono::microseconds elapsed{0};
};

struct ExecutionTrace {
    std::vector<TraceRecord> records; // ordered by sub_prompt_id
    int step_count = 0;
    std::chrono::microseconds total_elapsed{0};
};

struct AggregateResponse {
    std::string prompt_echo;
    std::string final_text;
    std::vector<ServiceResponse> parts; // ordered by sub_prompt_id
    ExecutionTrace trace;
};

nlohmann::json facts_to_json(const std::map<std::string, Scalar>& facts);
std::map<std::string, Scalar> facts_from_json(const nlohmann::json& j);

// include_timings=false produces the canonical form used for determinism
// checks: identical runs serialize byte-identically regardless of latencies.
nlohmann::json to_json(const ServiceResponse& r, bool include_timings = true);
nlohmann::json to_json(const TraceRecord& r, bool include_timings = true);
nlohmann::json to_json(const ExecutionTrace& t, bool include_timings = true);
nlohmann::json to_json(const AggregateResponse& a, bool include_timings = true);
nlohmann::json to_json(const SubPrompt& s);

} // namespace conductor
