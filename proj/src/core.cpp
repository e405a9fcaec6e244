#include "conductor/core.hpp"

#include <algorithm>
#include <deque>

#include "conductor/errors.hpp"
#include "conductor/text.hpp"

namespace conductor {

UserContext make_user_context(std::string user_id, std::string role,
                              std::map<std::string, Scalar> attributes) {
    if (text::trim(user_id).empty())
        throw PipelineError(errors::kContextValidation, "invalid-user-context",
                            "user_id must be non-empty");
    return UserContext{std::move(user_id), std::move(role), std::move(attributes)};
}

Prompt make_prompt(std::string raw_text, UserContext context) {
    std::string trimmed = text::trim(raw_text);
    if (trimmed.empty())
        throw PipelineError(errors::kRequest, "empty-prompt",
                            "prompt text must be non-empty after trimming");
    return Prompt{std::move(trimmed), std::move(context),
                  std::chrono::system_clock::now()};
}

SubPrompt make_sub_prompt(int id, std::string intent, std::string text_template,
                          std::set<int> depends_on, std::string target_domain) {
    if (id < 1)
        throw PipelineError(errors::kDecomposition, "invalid-sub-prompt",
                            "sub-prompt id must be >= 1");
    if (intent.empty() || target_domain.empty())
        throw PipelineError(errors::kDecomposition, "invalid-sub-prompt",
                            "sub-prompt intent and target_domain must be non-empty");
    if (depends_on.count(id))
        throw PipelineError(errors::kDecomposition, "invalid-sub-prompt",
                            "sub-prompt " + std::to_string(id) + " depends on itself");
    for (const auto& name : text::placeholder_names(text_template)) {
        if (name.size() < 2 || name[0] != 'R') continue;
        bool digits = std::all_of(name.begin() + 1, name.end(),
                                  [](unsigned char c) { return std::isdigit(c); });
        if (!digits) continue;
        int k = std::stoi(name.substr(1));
        if (!depends_on.count(k))
            throw PipelineError(errors::kDecomposition, "invalid-sub-prompt",
                                "placeholder {R" + std::to_string(k) +
                                    "} references a sub-prompt outside depends_on");
    }
    return SubPrompt{id, std::move(intent), std::move(text_template),
                     std::move(depends_on), std::move(target_domain)};
}

std::vector<int> validate_decomposition(const std::vector<SubPrompt>& subs) {
    std::map<int, const SubPrompt*> by_id;
    for (const auto& s : subs) {
        if (!by_id.emplace(s.id, &s).second)
            throw PipelineError(errors::kDecomposition, "invalid-decomposition",
                                "duplicate sub-prompt id " + std::to_string(s.id));
    }
    std::map<int, int> indegree;
    std::map<int, std::vector<int>> dependents;
    for (const auto& s : subs) {
        indegree.emplace(s.id, 0);
        for (int dep : s.depends_on) {
            if (!by_id.count(dep))
                throw PipelineError(errors::kDecomposition, "invalid-decomposition",
                                    "sub-prompt " + std::to_string(s.id) +
                                        " depends on missing id " + std::to_string(dep));
            ++indegree[s.id];
            dependents[dep].push_back(s.id);
        }
    }
    // Kahn's algorithm; the ready set is kept sorted for determinism.
    std::set<int> ready;
    for (const auto& [id, deg] : indegree)
        if (deg == 0) ready.insert(id);
    std::vector<int> order;
    order.reserve(subs.size());
    while (!ready.empty()) {
        int id = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(id);
        for (int next : dependents[id]) {
            if (--indegree[next] == 0) ready.insert(next);
        }
    }
    if (order.size() != subs.size())
        throw PipelineError(errors::kDecomposition, "cycle-detected",
                            "sub-prompt dependency relation contains a cycle");
    return order;
}

ServiceResponse make_service_response(int sub_prompt_id, std::string answer_text,
                                      std::map<std::string, Scalar> facts,
                                      std::string source_service, bool from_cache,
                                      std::chrono::microseconds elapsed) {
    if (answer_text.empty())
        throw PipelineError(errors::kService, "invalid-response",
                            "service response text must be non-empty");
    if (from_cache && source_service != kCacheServiceId)
        throw PipelineError(errors::kService, "invalid-response",
                            "cached response must name the cache as its source");
    return ServiceResponse{sub_prompt_id, std::move(answer_text), std::move(facts),
                           std::move(source_service), from_cache, elapsed};
}

nlohmann::json facts_to_json(const std::map<std::string, Scalar>& facts) {
    auto j = nlohmann::json::object();
    for (const auto& [k, v] : facts) j[k] = v.to_json();
    return j;
}

std::map<std::string, Scalar> facts_from_json(const nlohmann::json& j) {
    std::map<std::string, Scalar> facts;
    for (auto it = j.begin(); it != j.end(); ++it)
        facts.emplace(it.key(), Scalar::from_json(it.value()));
    return facts;
}

nlohmann::json to_json(const ServiceResponse& r, bool include_timings) {
    nlohmann::json j{{"sub_prompt_id", r.sub_prompt_id},
                     {"text", r.text},
                     {"facts", facts_to_json(r.facts)},
                     {"source_service", r.source_service},
                     {"from_cache", r.from_cache}};
    if (include_timings) j["elapsed_us"] = r.elapsed.count();
    return j;
}

nlohmann::json to_json(const TraceRecord& r, bool include_timings) {
    nlohmann::json j{{"sub_prompt_id", r.sub_prompt_id},
                     {"stage", r.stage},
                     {"cache_hit", r.cache_hit},
                     {"kg_queries", r.kg_queries},
                     {"service_invocations", r.service_invocations}};
    if (include_timings) j["elapsed_us"] = r.elapsed.count();
    return j;
}

nlohmann::json to_json(const ExecutionTrace& t, bool include_timings) {
    auto records = nlohmann::json::array();
    for (const auto& r : t.records) records.push_back(to_json(r, include_timings));
    nlohmann::json j{{"records", std::move(records)}, {"step_count", t.step_count}};
    if (include_timings) j["total_elapsed_us"] = t.total_elapsed.count();
    return j;
}

nlohmann::json to_json(const AggregateResponse& a, bool include_timings) {
    auto parts = nlohmann::json::array();
    for (const auto& p : a.parts) parts.push_back(to_json(p, include_timings));
    return nlohmann::json{{"prompt_echo", a.prompt_echo},
                          {"final_text", a.final_text},
                          {"parts", std::move(parts)},
                          {"trace", to_json(a.trace, include_timings)}};
}

nlohmann::json to_json(const SubPrompt& s) {
    return nlohmann::json{{"id", s.id},
                          {"intent", s.intent},
                          {"text_template", s.text_template},
                          {"depends_on", s.depends_on},
                          {"target_domain", s.target_domain}};
}

} // namespace conductor
