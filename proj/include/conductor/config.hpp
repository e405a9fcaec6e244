#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "conductor/ai_services.hpp"
#include "conductor/decomposer.hpp"
#include "conductor/graph_store.hpp"
#include "conductor/orchestrator.hpp"
#include "conductor/rule_engine.hpp"
#include "conductor/semantic_cache.hpp"

namespace conductor {

struct ConclusionTemplate {
    std::set<std::string> intents; // exact intent set of the decomposition
    std::string text;
};

struct PlatformConfig {
    std::string version;
    std::vector<std::string> roles;
    std::vector<std::string> user_attribute_keys;
    IntentCatalog intent_catalog;
    RuleSet rule_set;
    std::vector<DataSourceDescriptor> kg_sources;
    std::vector<ServiceDescriptor> services;
    CachePolicy cache_policy;
    std::vector<ConclusionTemplate> conclusion_templates;
    StepCountingPolicy step_counting;
    int max_stage_concurrency = 0;

    // Template for this exact intent set, or empty when none is declared.
    std::string conclusion_for(const std::set<std::string>& intents) const;
};

// Parses and cross-validates. Referential-integrity violations are collected
// and reported together in one error message. `base_dir` resolves relative
// kg_source uris.
PlatformConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

// parse-error for unreadable/invalid files, then as parse_config.
PlatformConfig load_config(const std::filesystem::path& path);

// Returns ctx unchanged when its role and attribute keys are declared;
// otherwise throws unknown-role / unknown-attribute-key.
UserContext validate_context(const UserContext& ctx, const PlatformConfig& config);

} // namespace conductor
