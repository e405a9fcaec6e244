#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "conductor/platform.hpp"

namespace conductor {

// baseline: per-sub-prompt independent service calls, no cache, no chaining,
//           whole-KG retrieval, concatenation-only answers (the manual flow).
// cache: orchestrated with cache and chaining, retrieval unnarrowed by rules
//        (whole-KG scans).
// cache_and_rules: the full pipeline.
enum class Scenario { baseline, cache, cache_and_rules };

Scenario scenario_from_string(const std::string& s);
std::string to_string(Scenario s);

struct BenchQuery {
    QueryRequest request;
    std::string golden_final_text;
};

// {queries: [{prompt, user_context{user_id, role, attributes}, golden_final_text}]}
std::vector<BenchQuery> bench_queries_from_json(const nlohmann::json& doc);
std::vector<BenchQuery> load_bench_fixture(const std::filesystem::path& path);

struct ScenarioReport {
    std::string scenario;
    int repetitions = 0;
    int query_count = 0;
    double mean_latency_ms = 0.0;
    double cold_latency_ms = 0.0;  // first repetition
    double warm_latency_ms = 0.0;  // repetitions after the first
    double accuracy = 0.0;         // normalized match vs golden, failures count wrong
    double cache_hit_rate = 0.0;
    double mean_steps = 0.0;
    int failures = 0;

    nlohmann::json to_json() const;
};

struct MetricsReport {
    std::vector<ScenarioReport> scenarios;
    nlohmann::json to_json() const;
};

// Runs every query `repetitions` times under one scenario against a freshly
// cleared cache. Deterministic apart from timing.
ScenarioReport run_scenario(Platform& platform, Scenario scenario,
                            const std::vector<BenchQuery>& queries, int repetitions);

MetricsReport run_bench(Platform& platform, const std::vector<Scenario>& scenarios,
                        const std::vector<BenchQuery>& queries, int repetitions);

} // namespace conductor
