#pragma once

#include <map>
#include <string>
#include <vector>

#include "conductor/ai_services.hpp"
#include "conductor/core.hpp"
#include "conductor/graph_store.hpp"
#include "conductor/rule_engine.hpp"
#include "conductor/semantic_cache.hpp"

namespace conductor {

// Rule and service chosen at plan time; the query itself is bound at
// execution time so chained facts can feed its placeholders.
struct PlannedBinding {
    Rule rule;
    std::string service_id;
};

struct ExecutionPlan {
    // Minimal-depth layering: each sub-prompt sits in the earliest stage its
    // dependencies allow; ids ascend within a stage.
    std::vector<std::vector<int>> stages;
    std::map<int, PlannedBinding> bindings;
};

ExecutionPlan plan(const std::vector<SubPrompt>& subs, const UserContext& ctx,
                   const RuleSet& rules, const ServiceRegistry& services);

// Step-counting parameters (knob names documented in the config schema):
// retrieval = #stages with any KG query or service invocation, floored at 1
// when cached_run_counts_one_retrieval is set (a fully cached run still
// performs one cache-retrieval step); bookkeeping = 1 once retrieval reaches
// bookkeeping_collapse_at (decompose/plan and aggregate merge into a single
// automated step), else 2. steps = bookkeeping + retrieval.
struct StepCountingPolicy {
    int bookkeeping_collapse_at = 2;
    bool cached_run_counts_one_retrieval = true;
};

enum class StepMode { baseline, orchestrated };

// Baseline mode emulates the manual flow: per sub-prompt one service
// selection plus one invocation, plus a final correlation step (2n + 1).
int count_steps(const ExecutionTrace& trace, StepMode mode, const StepCountingPolicy& policy);

struct ExecutionOptions {
    int max_stage_concurrency = 0; // 0 = unbounded (stage size)
    int service_retries = 1;       // extra attempts after the first failure
    StepCountingPolicy step_counting;
    std::string conclusion_template; // empty = concatenation only
    bool whole_graph_retrieval = false; // bench: scan the rule's KG unnarrowed
};

// Runs stages sequentially, sub-prompts within a stage concurrently:
// substitute {R<k>} chaining placeholders, consult the cache, on miss bind
// the rule, query the KG and invoke the service, then cache the response.
// Any sub-prompt failure fails the whole prompt (no partial answers).
AggregateResponse execute(const ExecutionPlan& plan_, const std::vector<SubPrompt>& subs,
                          const Prompt& prompt, SemanticCache& cache,
                          const GraphRegistry& graphs, const ServiceRegistry& services,
                          const CachePolicy& cache_policy, const ExecutionOptions& options);

// Deterministic consolidation: part texts joined in sub-prompt id order,
// then the conclusion template rendered from the merged facts (later parts
// win key collisions). Throws missing-fact-for-conclusion-template.
std::string aggregate(const std::vector<ServiceResponse>& parts,
                      const std::vector<SubPrompt>& subs,
                      const std::string& conclusion_template);

} // namespace conductor
