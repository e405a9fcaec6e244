#include "conductor/bench.hpp"

#include <fstream>

#include "conductor/errors.hpp"
#include "conductor/text.hpp"

namespace conductor {

Scenario scenario_from_string(const std::string& s) {
    if (s == "baseline") return Scenario::baseline;
    if (s == "cache") return Scenario::cache;
    if (s == "cache_and_rules") return Scenario::cache_and_rules;
    throw PipelineError(errors::kBench, "unknown-scenario",
                        "unknown bench scenario '" + s + "'");
}

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::baseline: return "baseline";
        case Scenario::cache: return "cache";
        case Scenario::cache_and_rules: return "cache_and_rules";
    }
    return "baseline";
}

std::vector<BenchQuery> bench_queries_from_json(const nlohmann::json& doc) {
    std::vector<BenchQuery> out;
    for (const auto& q : doc.at("queries")) {
        BenchQuery bq;
        bq.request.prompt = q.at("prompt").get<std::string>();
        const auto& ctx = q.at("user_context");
        bq.request.user_id = ctx.at("user_id").get<std::string>();
        bq.request.role = ctx.at("role").get<std::string>();
        const auto attrs = ctx.value("attributes", nlohmann::json::object());
        for (auto it = attrs.begin(); it != attrs.end(); ++it)
            bq.request.attributes.emplace(it.key(), Scalar::from_json(it.value()));
        if (!q.contains("golden_final_text") || q.at("golden_final_text").get<std::string>().empty())
            throw PipelineError(errors::kBench, "fixture-missing-golden-answer",
                                "bench fixture query '" + bq.request.prompt +
                                    "' lacks golden_final_text");
        bq.golden_final_text = q.at("golden_final_text").get<std::string>();
        out.push_back(std::move(bq));
    }
    if (out.empty())
        throw PipelineError(errors::kBench, "fixture-missing-golden-answer",
                            "bench fixture contains no queries");
    return out;
}

std::vector<BenchQuery> load_bench_fixture(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw PipelineError(errors::kBench, "io-error",
                            "cannot read bench fixture '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw PipelineError(errors::kBench, "parse-error",
                            "invalid JSON in '" + path.string() + "': " + e.what());
    }
    return bench_queries_from_json(doc);
}

namespace {

struct RunResult {
    bool ok = false;
    bool accurate = false;
    double latency_ms = 0.0;
    int steps = 0;
};

// The manual flow: the user picks each (correct) service in turn, every
// retrieval scans the whole KG, answers are correlated by hand (no chaining,
// no conclusion).
RunResult run_baseline_query(Platform& platform, const BenchQuery& query) {
    auto config = platform.config();
    auto graphs = platform.graphs();
    auto services = platform.services();
    RunResult result;
    auto start = std::chrono::steady_clock::now();
    try {
        UserContext ctx = validate_context(
            make_user_context(query.request.user_id, query.request.role,
                              query.request.attributes),
            *config);
        Prompt prompt = make_prompt(query.request.prompt, std::move(ctx));
        std::vector<SubPrompt> subs = decompose(prompt, config->intent_catalog);
        result.steps = 2 * static_cast<int>(subs.size()) + 1;

        std::vector<ServiceResponse> parts;
        for (const auto& sub : subs) {
            // Manual service selection still lands on the right service and
            // its knowledge store; only the orchestration is missing.
            const Rule* kg_rule = nullptr;
            for (const auto& r : config->rule_set.rules)
                if (r.intent == sub.intent) { kg_rule = &r; break; }
            if (!kg_rule)
                throw PipelineError(errors::kBench, "no-rule-matched",
                                    "no knowledge store known for intent '" + sub.intent + "'");
            ContextBundle bundle = graphs->require(kg_rule->target_kg)->whole_bundle();
            bundle.sub_prompt_id = sub.id;
            auto service = services->require_domain(sub.target_domain);
            ServiceResponse r =
                service->invoke(ServiceRequest{sub.intent, sub.text_template, std::move(bundle)});
            r.sub_prompt_id = sub.id;
            parts.push_back(std::move(r));
        }
        std::string final_text = aggregate(parts, subs, "");
        result.ok = true;
        result.accurate =
            text::normalize(final_text) == text::normalize(query.golden_final_text);
    } catch (const PipelineError&) {
        result.ok = false;
    }
    result.latency_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start).count();
    return result;
}

RunResult run_orchestrated_query(Platform& platform, const BenchQuery& query,
                                 bool whole_graph_retrieval) {
    auto config = platform.config();
    auto graphs = platform.graphs();
    auto services = platform.services();
    RunResult result;
    auto start = std::chrono::steady_clock::now();
    try {
        UserContext ctx = validate_context(
            make_user_context(query.request.user_id, query.request.role,
                              query.request.attributes),
            *config);
        Prompt prompt = make_prompt(query.request.prompt, std::move(ctx));
        std::vector<SubPrompt> subs = decompose(prompt, config->intent_catalog);
        ExecutionPlan exec_plan = plan(subs, prompt.context, config->rule_set, *services);

        std::set<std::string> intents;
        for (const auto& s : subs) intents.insert(s.intent);
        ExecutionOptions options;
        options.max_stage_concurrency = config->max_stage_concurrency;
        options.step_counting = config->step_counting;
        options.conclusion_template = config->conclusion_for(intents);
        options.whole_graph_retrieval = whole_graph_retrieval;

        AggregateResponse response = execute(exec_plan, subs, prompt, platform.cache(),
                                             *graphs, *services, config->cache_policy, options);
        result.ok = true;
        result.steps = response.trace.step_count;
        result.accurate = text::normalize(response.final_text) ==
                          text::normalize(query.golden_final_text);
    } catch (const PipelineError&) {
        result.ok = false;
    }
    result.latency_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start).count();
    return result;
}

} // namespace

ScenarioReport run_scenario(Platform& platform, Scenario scenario,
                            const std::vector<BenchQuery>& queries, int repetitions) {
    if (repetitions < 1)
        throw PipelineError(errors::kBench, "invalid-repetitions", "repetitions must be >= 1");
    platform.cache().clear();

    ScenarioReport report;
    report.scenario = to_string(scenario);
    report.repetitions = repetitions;
    report.query_count = static_cast<int>(queries.size());

    double total = 0.0, cold = 0.0, warm = 0.0, steps = 0.0;
    int accurate = 0, runs = 0, warm_runs = 0;
    for (int rep = 0; rep < repetitions; ++rep) {
        for (const auto& query : queries) {
            RunResult r = scenario == Scenario::baseline
                              ? run_baseline_query(platform, query)
                              : run_orchestrated_query(platform, query,
                                                       scenario == Scenario::cache);
            ++runs;
            total += r.latency_ms;
            if (rep == 0) cold += r.latency_ms;
            else { warm += r.latency_ms; ++warm_runs; }
            steps += r.steps;
            if (r.accurate) ++accurate;
            if (!r.ok) ++report.failures;
        }
    }
    report.mean_latency_ms = runs ? total / runs : 0.0;
    report.cold_latency_ms = queries.empty() ? 0.0 : cold / static_cast<double>(queries.size());
    report.warm_latency_ms = warm_runs ? warm / warm_runs : 0.0;
    report.accuracy = runs ? static_cast<double>(accurate) / runs : 0.0;
    report.mean_steps = runs ? steps / runs : 0.0;

    CacheStats stats = platform.cache().stats();
    std::uint64_t lookups = stats.hits + stats.misses;
    report.cache_hit_rate = lookups ? static_cast<double>(stats.hits) / lookups : 0.0;
    return report;
}

MetricsReport run_bench(Platform& platform, const std::vector<Scenario>& scenarios,
                        const std::vector<BenchQuery>& queries, int repetitions) {
    MetricsReport report;
    for (Scenario s : scenarios)
        report.scenarios.push_back(run_scenario(platform, s, queries, repetitions));
    return report;
}

nlohmann::json ScenarioReport::to_json() const {
    return nlohmann::json{{"scenario", scenario},
                          {"repetitions", repetitions},
                          {"query_count", query_count},
                          {"mean_latency_ms", mean_latency_ms},
                          {"cold_latency_ms", cold_latency_ms},
                          {"warm_latency_ms", warm_latency_ms},
                          {"accuracy", accuracy},
                          {"cache_hit_rate", cache_hit_rate},
                          {"mean_steps", mean_steps},
                          {"failures", failures}};
}

nlohmann::json MetricsReport::to_json() const {
    auto arr = nlohmann::json::array();
    for (const auto& s : scenarios) arr.push_back(s.to_json());
    return nlohmann::json{{"scenarios", std::move(arr)}};
}

} // namespace conductor
