#include "conductor/platform.hpp"

#include <algorithm>
#include <cmath>

#include "conductor/errors.hpp"

namespace conductor {

QueryRequest query_request_from_json(const nlohmann::json& body) {
    try {
        QueryRequest req;
        req.user_id = body.at("user_id").get<std::string>();
        req.role = body.at("role").get<std::string>();
        const auto attrs = body.value("attributes", nlohmann::json::object());
        for (auto it = attrs.begin(); it != attrs.end(); ++it)
            req.attributes.emplace(it.key(), Scalar::from_json(it.value()));
        req.prompt = body.at("prompt").get<std::string>();
        req.verbose = body.value("verbose", false);
        return req;
    } catch (const nlohmann::json::exception& e) {
        throw PipelineError(errors::kRequest, "bad-request",
                            std::string("malformed query request: ") + e.what());
    } catch (const std::exception& e) {
        throw PipelineError(errors::kRequest, "bad-request",
                            std::string("malformed query request: ") + e.what());
    }
}

nlohmann::json error_document(const PipelineError& e) {
    return nlohmann::json{
        {"error", {{"stage", e.stage()}, {"code", e.code()}, {"message", e.what()}}}};
}

Platform::Platform(PlatformConfig config)
    : snapshot_(std::make_shared<const Snapshot>(build_snapshot(std::move(config)))) {}

Platform::Platform(const std::filesystem::path& config_path)
    : Platform(load_config(config_path)) {
    config_path_ = config_path;
}

Platform::Snapshot Platform::build_snapshot(PlatformConfig config) {
    Snapshot snap;
    snap.graphs = std::make_shared<GraphRegistry>();
    for (const auto& src : config.kg_sources)
        snap.graphs->register_graph(KnowledgeGraph::load(src));
    snap.services = std::make_shared<ServiceRegistry>();
    for (const auto& svc : config.services)
        snap.services->register_service(make_service(svc));
    snap.config = std::make_shared<const PlatformConfig>(std::move(config));
    return snap;
}

std::shared_ptr<const Platform::Snapshot> Platform::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
}

void Platform::reload(PlatformConfig config) {
    auto next = std::make_shared<const Snapshot>(build_snapshot(std::move(config)));
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = std::move(next);
}

void Platform::reload_from_file(const std::filesystem::path& path) {
    reload(load_config(path));
    config_path_ = path;
}

std::shared_ptr<const PlatformConfig> Platform::config() const { return snapshot()->config; }
std::shared_ptr<const GraphRegistry> Platform::graphs() const { return snapshot()->graphs; }
std::shared_ptr<const ServiceRegistry> Platform::services() const { return snapshot()->services; }

std::vector<SubPrompt> Platform::decompose_request(const QueryRequest& request) const {
    auto snap = snapshot();
    UserContext ctx = validate_context(
        make_user_context(request.user_id, request.role, request.attributes), *snap->config);
    Prompt prompt = make_prompt(request.prompt, std::move(ctx));
    return decompose(prompt, snap->config->intent_catalog);
}

AggregateResponse Platform::handle_query(const QueryRequest& request) {
    auto start = std::chrono::steady_clock::now();
    auto snap = snapshot(); // one consistent snapshot for the whole request
    const PlatformConfig& config = *snap->config;

    UserContext ctx = validate_context(
        make_user_context(request.user_id, request.role, request.attributes), config);
    Prompt prompt = make_prompt(request.prompt, std::move(ctx));

    std::vector<SubPrompt> subs = decompose(prompt, config.intent_catalog);
    ExecutionPlan exec_plan = plan(subs, prompt.context, config.rule_set, *snap->services);

    std::set<std::string> intent_set;
    for (const auto& s : subs) intent_set.insert(s.intent);

    ExecutionOptions options;
    options.max_stage_concurrency = config.max_stage_concurrency;
    options.step_counting = config.step_counting;
    options.conclusion_template = config.conclusion_for(intent_set);

    AggregateResponse response = execute(exec_plan, subs, prompt, cache_, *snap->graphs,
                                         *snap->services, config.cache_policy, options);
    double latency_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start).count();
    record_query(latency_ms, response.trace.step_count);
    return response;
}

nlohmann::json Platform::handle_query_json(const nlohmann::json& body) {
    try {
        QueryRequest request = query_request_from_json(body);
        AggregateResponse response = handle_query(request);
        nlohmann::json reply{{"final_text", response.final_text},
                             {"prompt_echo", response.prompt_echo}};
        auto parts = nlohmann::json::array();
        for (const auto& p : response.parts) parts.push_back(to_json(p));
        reply["parts"] = std::move(parts);
        if (request.verbose) reply["trace"] = to_json(response.trace);
        return reply;
    } catch (const PipelineError& e) {
        return error_document(e);
    } catch (const std::exception& e) {
        return error_document(
            PipelineError(errors::kRequest, "internal-error", e.what()));
    }
}

void Platform::record_query(double latency_ms, int steps) {
    std::lock_guard lock(metrics_mutex_);
    latencies_ms_.push_back(latency_ms);
    step_counts_.push_back(steps);
}

namespace {

double percentile(std::vector<double> values, double p) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    double rank = p * static_cast<double>(values.size() - 1);
    size_t lo = static_cast<size_t>(std::floor(rank));
    size_t hi = static_cast<size_t>(std::ceil(rank));
    double frac = rank - static_cast<double>(lo);
    return values[lo] + (values[hi] - values[lo]) * frac;
}

} // namespace

nlohmann::json Platform::metrics_json() const {
    CacheStats cache_stats = cache_.stats();
    std::vector<double> latencies;
    std::vector<int> steps;
    {
        std::lock_guard lock(metrics_mutex_);
        latencies = latencies_ms_;
        steps = step_counts_;
    }
    double mean = 0.0;
    for (double v : latencies) mean += v;
    if (!latencies.empty()) mean /= static_cast<double>(latencies.size());
    double steps_mean = 0.0;
    for (int v : steps) steps_mean += v;
    if (!steps.empty()) steps_mean /= static_cast<double>(steps.size());
    return nlohmann::json{
        {"cache",
         {{"hits", cache_stats.hits},
          {"misses", cache_stats.misses},
          {"evictions", cache_stats.evictions},
          {"size", cache_stats.size}}},
        {"latency",
         {{"p50", percentile(latencies, 0.50)},
          {"p95", percentile(latencies, 0.95)},
          {"mean", mean}}},
        {"steps",
         {{"last", steps.empty() ? 0 : steps.back()}, {"mean", steps_mean}}}};
}

} // namespace conductor
