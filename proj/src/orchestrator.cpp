#include "conductor/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "conductor/errors.hpp"
#include "conductor/text.hpp"

namespace conductor {

ExecutionPlan plan(const std::vector<SubPrompt>& subs, const UserContext& ctx,
                   const RuleSet& rules, const ServiceRegistry& services) {
    auto topo_order = validate_decomposition(subs); // cycle-detected if malformed

    std::map<int, const SubPrompt*> by_id;
    for (const auto& s : subs) by_id[s.id] = &s;

    // Longest-path layering: stage(s) = 1 + max(stage(dep)).
    std::map<int, int> stage_of;
    for (int id : topo_order) {
        int stage = 0;
        for (int dep : by_id[id]->depends_on)
            stage = std::max(stage, stage_of[dep] + 1);
        stage_of[id] = stage;
    }

    ExecutionPlan out;
    int max_stage = 0;
    for (const auto& [id, st] : stage_of) max_stage = std::max(max_stage, st);
    out.stages.assign(static_cast<size_t>(max_stage) + 1, {});
    for (const auto& [id, st] : stage_of) out.stages[static_cast<size_t>(st)].push_back(id);
    for (auto& stage : out.stages) std::sort(stage.begin(), stage.end());

    for (const auto& s : subs) {
        const Rule& rule = match_rule(s, ctx, rules);
        auto service = services.require_domain(s.target_domain);
        out.bindings.emplace(s.id, PlannedBinding{rule, service->descriptor().service_id});
    }
    return out;
}

int count_steps(const ExecutionTrace& trace, StepMode mode, const StepCountingPolicy& policy) {
    if (mode == StepMode::baseline)
        return 2 * static_cast<int>(trace.records.size()) + 1;

    std::map<int, bool> stage_active;
    for (const auto& r : trace.records) {
        bool active = r.kg_queries > 0 || r.service_invocations > 0;
        stage_active[r.stage] = stage_active[r.stage] || active;
    }
    int retrieval = 0;
    for (const auto& [_, active] : stage_active)
        if (active) ++retrieval;
    if (retrieval == 0 && policy.cached_run_counts_one_retrieval) retrieval = 1;
    int bookkeeping = retrieval >= policy.bookkeeping_collapse_at ? 1 : 2;
    return bookkeeping + retrieval;
}

namespace {

struct SubOutcome {
    ServiceResponse response;
    TraceRecord record;
};

// Executes one sub-prompt: chaining substitution, cache probe, then the
// bind -> query -> invoke -> cache path on a miss.
SubOutcome run_sub_prompt(const SubPrompt& sub, int stage_index,
                          const PlannedBinding& binding,
                          const std::map<int, ServiceResponse>& completed,
                          const Prompt& prompt, SemanticCache& cache,
                          const GraphRegistry& graphs, const ServiceRegistry& services,
                          const CachePolicy& cache_policy, const ExecutionOptions& options) {
    auto start = std::chrono::steady_clock::now();
    TraceRecord record;
    record.sub_prompt_id = sub.id;
    record.stage = stage_index;

    // (1) Chaining: {R<k>} placeholders become dependency response texts and
    // dependency facts merge into prior_facts (ascending id, later wins).
    std::map<std::string, Scalar> prior_facts;
    for (int dep : sub.depends_on) {
        const auto& dep_response = completed.at(dep);
        for (const auto& [k, v] : dep_response.facts) prior_facts[k] = v;
    }
    std::string sub_text = text::substitute_placeholders(
        sub.text_template,
        [&](const std::string& name, const std::string&) -> std::optional<std::string> {
            if (name.size() < 2 || name[0] != 'R') return std::nullopt;
            int k = 0;
            for (size_t i = 1; i < name.size(); ++i) {
                if (!std::isdigit(static_cast<unsigned char>(name[i]))) return std::nullopt;
                k = k * 10 + (name[i] - '0');
            }
            auto it = completed.find(k);
            if (it == completed.end()) return std::nullopt;
            return it->second.text;
        });

    // (2) Cache probe.
    CacheKey key = make_cache_key(sub_text, prompt.context);
    if (auto hit = cache.get(key, cache_policy)) {
        record.cache_hit = true;
        record.elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
            std::chrono::steady_clock::now() - start);
        ServiceResponse response = std::move(*hit);
        response.sub_prompt_id = sub.id;
        response.elapsed = record.elapsed;
        return SubOutcome{std::move(response), record};
    }

    // (3) Bind the rule and retrieve context.
    auto graph = graphs.get(binding.rule.target_kg);
    if (!graph)
        throw PipelineError(errors::kExecution, "kg-query-error",
                            "knowledge graph '" + binding.rule.target_kg +
                                "' is not registered");
    ContextBundle bundle;
    try {
        if (options.whole_graph_retrieval) {
            bundle = graph->whole_bundle();
        } else {
            RuleBinding bound = bind_rule(binding.rule, sub, prompt.context, prior_facts);
            bundle = graph->query(bound.resolved_query);
        }
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(errors::kExecution, "kg-query-error", e.what());
    }
    ++record.kg_queries;
    bundle.sub_prompt_id = sub.id;

    // (4) Invoke the bound service, one retry on failure.
    auto service = services.require_domain(sub.target_domain);
    ServiceRequest request{sub.intent, sub_text, std::move(bundle)};
    ServiceResponse response;
    int attempts_left = 1 + std::max(0, options.service_retries);
    for (;;) {
        ++record.service_invocations;
        --attempts_left;
        try {
            response = service->invoke(request);
            break;
        } catch (const PipelineError& e) {
            bool retryable = e.code() == "service-unavailable";
            if (!retryable || attempts_left == 0) throw;
        }
    }
    response.sub_prompt_id = sub.id;

    // (5) Cache the fresh response.
    cache.put(key, response, cache_policy);

    record.elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::steady_clock::now() - start);
    response.elapsed = record.elapsed;
    return SubOutcome{std::move(response), record};
}

} // namespace

AggregateResponse execute(const ExecutionPlan& plan_, const std::vector<SubPrompt>& subs,
                          const Prompt& prompt, SemanticCache& cache,
                          const GraphRegistry& graphs, const ServiceRegistry& services,
                          const CachePolicy& cache_policy, const ExecutionOptions& options) {
    auto start = std::chrono::steady_clock::now();
    std::map<int, const SubPrompt*> by_id;
    for (const auto& s : subs) by_id[s.id] = &s;

    std::map<int, ServiceResponse> completed;
    std::vector<TraceRecord> records;

    for (size_t stage_index = 0; stage_index < plan_.stages.size(); ++stage_index) {
        const auto& stage = plan_.stages[stage_index];
        std::vector<SubOutcome> outcomes(stage.size());
        std::vector<std::string> failures(stage.size());

        size_t cap = options.max_stage_concurrency > 0
                         ? static_cast<size_t>(options.max_stage_concurrency)
                         : stage.size();
        std::atomic<size_t> next{0};
        auto worker = [&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= stage.size()) return;
                int id = stage[i];
                try {
                    outcomes[i] = run_sub_prompt(*by_id.at(id), static_cast<int>(stage_index),
                                                 plan_.bindings.at(id), completed, prompt,
                                                 cache, graphs, services, cache_policy,
                                                 options);
                } catch (const PipelineError& e) {
                    failures[i] = std::string(e.code()) + ": " + e.what();
                } catch (const std::exception& e) {
                    failures[i] = std::string("internal-error: ") + e.what();
                }
            }
        };
        if (stage.size() <= 1 || cap <= 1) {
            worker();
        } else {
            std::vector<std::thread> threads;
            size_t n_threads = std::min(cap, stage.size());
            threads.reserve(n_threads);
            for (size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
            for (auto& t : threads) t.join();
        }

        // Join before the next stage; fail the whole prompt on any failure.
        for (size_t i = 0; i < stage.size(); ++i) {
            if (!failures[i].empty())
                throw PipelineError(errors::kExecution, "sub-prompt-failed",
                                    "stage " + std::to_string(stage_index + 1) +
                                        ", sub-prompt P" + std::to_string(stage[i]) + ": " +
                                        failures[i]);
        }
        for (size_t i = 0; i < stage.size(); ++i) {
            completed.emplace(stage[i], outcomes[i].response);
            records.push_back(outcomes[i].record);
        }
    }

    AggregateResponse out;
    out.prompt_echo = prompt.text;
    out.parts.reserve(subs.size());
    for (const auto& [id, response] : completed) out.parts.push_back(response);
    std::sort(out.parts.begin(), out.parts.end(),
              [](const ServiceResponse& a, const ServiceResponse& b) {
                  return a.sub_prompt_id < b.sub_prompt_id;
              });
    out.final_text = aggregate(out.parts, subs, options.conclusion_template);

    std::sort(records.begin(), records.end(), [](const TraceRecord& a, const TraceRecord& b) {
        return a.sub_prompt_id < b.sub_prompt_id;
    });
    out.trace.records = std::move(records);
    out.trace.total_elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::steady_clock::now() - start);
    out.trace.step_count = count_steps(out.trace, StepMode::orchestrated, options.step_counting);
    return out;
}

std::string aggregate(const std::vector<ServiceResponse>& parts,
                      const std::vector<SubPrompt>& subs,
                      const std::string& conclusion_template) {
    if (parts.size() != subs.size())
        throw PipelineError(errors::kAggregation, "invalid-aggregation",
                            "expected exactly one response per sub-prompt");
    std::vector<const ServiceResponse*> ordered;
    ordered.reserve(parts.size());
    for (const auto& p : parts) ordered.push_back(&p);
    std::sort(ordered.begin(), ordered.end(),
              [](const ServiceResponse* a, const ServiceResponse* b) {
                  return a->sub_prompt_id < b->sub_prompt_id;
              });
    for (const auto& sub : subs) {
        bool present = std::any_of(ordered.begin(), ordered.end(), [&](const ServiceResponse* r) {
            return r->sub_prompt_id == sub.id;
        });
        if (!present)
            throw PipelineError(errors::kAggregation, "invalid-aggregation",
                                "missing response for sub-prompt P" + std::to_string(sub.id));
    }

    std::string final_text;
    std::map<std::string, Scalar> merged_facts;
    for (const ServiceResponse* r : ordered) {
        if (!final_text.empty()) final_text += "\n";
        final_text += r->text;
        for (const auto& [k, v] : r->facts) merged_facts[k] = v;
    }
    if (!conclusion_template.empty()) {
        std::string conclusion = render_fact_template(conclusion_template, merged_facts,
                                                      "missing-fact-for-conclusion-template");
        final_text += "\n" + conclusion;
    }
    return final_text;
}

} // namespace conductor
