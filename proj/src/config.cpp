#include "conductor/config.hpp"

#include <algorithm>
#include <fstream>

#include "conductor/errors.hpp"

namespace conductor {

std::string PlatformConfig::conclusion_for(const std::set<std::string>& intents) const {
    for (const auto& c : conclusion_templates)
        if (c.intents == intents) return c.text;
    return {};
}

namespace {

std::vector<AttributeFilter> parse_filters(const nlohmann::json& arr) {
    std::vector<AttributeFilter> filters;
    for (const auto& f : arr) {
        filters.push_back(AttributeFilter{f.at("key").get<std::string>(),
                                          filter_op_from_string(f.at("op").get<std::string>()),
                                          Scalar::from_json(f.at("value"))});
    }
    return filters;
}

KGQuery parse_query_template(const nlohmann::json& j) {
    KGQuery q;
    q.node_kind = j.value("node_kind", std::string{});
    q.attribute_filters = parse_filters(j.value("filters", nlohmann::json::array()));
    for (const auto& rc : j.value("relations", nlohmann::json::array())) {
        RelationConstraint c;
        c.relation = rc.at("relation").get<std::string>();
        c.node_kind = rc.value("node_kind", std::string{});
        c.filters = parse_filters(rc.value("filters", nlohmann::json::array()));
        q.relation_constraints.push_back(std::move(c));
    }
    if (j.contains("limit")) q.limit = j.at("limit").get<int>();
    if (q.empty())
        throw PipelineError(errors::kConfig, "invalid-rule-set",
                            "rule query must constrain kind, attributes or relations");
    return q;
}

IntentCatalog parse_catalog(const nlohmann::json& j) {
    std::vector<IntentSpec> intents;
    for (const auto& it : j.value("intents", nlohmann::json::array())) {
        IntentSpec spec;
        spec.intent = it.at("intent").get<std::string>();
        spec.trigger_patterns = it.value("trigger_patterns", std::vector<std::string>{});
        spec.target_domain = it.at("target_domain").get<std::string>();
        spec.sub_prompt_template = it.at("sub_prompt_template").get<std::string>();
        auto deps = it.value("depends_on_intents", std::vector<std::string>{});
        spec.depends_on_intents = {deps.begin(), deps.end()};
        spec.priority = it.value("priority", 0);
        intents.push_back(std::move(spec));
    }
    return IntentCatalog(std::move(intents), j.value("version", std::string{"0"}));
}

RuleSet parse_rules(const nlohmann::json& j) {
    std::vector<Rule> rules;
    for (const auto& r : j.value("rules", nlohmann::json::array())) {
        Rule rule;
        rule.rule_id = r.at("rule_id").get<std::string>();
        rule.intent = r.at("intent").get<std::string>();
        if (r.contains("role")) rule.predicate.role = r.at("role").get<std::string>();
        const auto requires_ = r.value("requires", nlohmann::json::object());
        for (auto it = requires_.begin(); it != requires_.end(); ++it)
            rule.predicate.required_attributes.emplace(it.key(), Scalar::from_json(it.value()));
        rule.target_kg = r.at("target_kg").get<std::string>();
        rule.query_template = parse_query_template(r.at("query"));
        rule.priority = r.value("priority", 0);
        rules.push_back(std::move(rule));
    }
    return make_rule_set(std::move(rules), j.value("version", std::string{"0"}));
}

ServiceDescriptor parse_service(const nlohmann::json& j) {
    ServiceDescriptor d;
    d.service_id = j.at("service_id").get<std::string>();
    d.domain = j.at("domain").get<std::string>();
    d.kind = j.at("kind").get<std::string>();
    d.endpoint = j.value("endpoint", std::string{});
    const auto templates = j.value("answer_templates", nlohmann::json::object());
    for (auto it = templates.begin(); it != templates.end(); ++it)
        d.answer_templates.emplace(it.key(), it.value().get<std::string>());
    d.simulated_latency = std::chrono::milliseconds(j.value("simulated_latency_ms", 0));
    d.http_timeout = std::chrono::milliseconds(j.value("http_timeout_ms", 2000));
    d.max_in_flight = j.value("max_in_flight", 4);
    return make_service_descriptor(std::move(d));
}

} // namespace

PlatformConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    PlatformConfig config{
        doc.value("version", std::string{"0"}),
        doc.value("roles", std::vector<std::string>{}),
        doc.value("user_attribute_keys", std::vector<std::string>{}),
        parse_catalog(doc.at("intent_catalog")),
        parse_rules(doc.at("rules")),
        {},
        {},
        {},
        {},
        {},
        doc.value("max_stage_concurrency", 0)};

    for (const auto& s : doc.value("kg_sources", nlohmann::json::array())) {
        DataSourceDescriptor desc{s.at("source_id").get<std::string>(),
                                  s.at("uri").get<std::string>(),
                                  s.value("format", std::string{"json"})};
        if (desc.uri.empty())
            throw PipelineError(errors::kConfig, "invalid-kg-source",
                                "kg_source '" + desc.source_id + "' has empty uri");
        std::filesystem::path uri(desc.uri);
        if (uri.is_relative()) desc.uri = (base_dir / uri).string();
        config.kg_sources.push_back(std::move(desc));
    }
    for (const auto& s : doc.value("services", nlohmann::json::array()))
        config.services.push_back(parse_service(s));

    const auto cache = doc.value("cache_policy", nlohmann::json::object());
    std::optional<std::chrono::milliseconds> ttl;
    if (cache.contains("ttl_ms") && !cache.at("ttl_ms").is_null())
        ttl = std::chrono::milliseconds(cache.at("ttl_ms").get<std::int64_t>());
    config.cache_policy = make_cache_policy(cache.value("capacity", 1024),
                                            cache.value("similarity_threshold", 0.8), ttl);

    for (const auto& c : doc.value("conclusion_templates", nlohmann::json::array())) {
        auto intents = c.at("intents").get<std::vector<std::string>>();
        config.conclusion_templates.push_back(
            ConclusionTemplate{{intents.begin(), intents.end()},
                               c.at("template").get<std::string>()});
    }

    const auto steps = doc.value("step_counting", nlohmann::json::object());
    config.step_counting.bookkeeping_collapse_at = steps.value("bookkeeping_collapse_at", 2);
    config.step_counting.cached_run_counts_one_retrieval =
        steps.value("cached_run_counts_one_retrieval", true);

    // Referential integrity: collect every violation, report them together.
    std::vector<std::string> violations;
    std::set<std::string> kg_ids;
    for (const auto& src : config.kg_sources)
        if (!kg_ids.insert(src.source_id).second)
            violations.push_back("duplicate kg_source '" + src.source_id + "'");
    std::set<std::string> domains;
    std::map<std::string, const ServiceDescriptor*> service_by_domain;
    for (const auto& svc : config.services) {
        if (!domains.insert(svc.domain).second)
            violations.push_back("domain '" + svc.domain + "' declared by multiple services");
        service_by_domain[svc.domain] = &svc;
    }
    std::set<std::string> roles(config.roles.begin(), config.roles.end());
    std::set<std::string> attr_keys(config.user_attribute_keys.begin(),
                                    config.user_attribute_keys.end());
    std::set<std::string> intents;
    for (const auto& spec : config.intent_catalog.intents()) {
        intents.insert(spec.intent);
        if (!domains.count(spec.target_domain))
            violations.push_back("intent '" + spec.intent + "' targets undeclared domain '" +
                                 spec.target_domain + "'");
        auto it = service_by_domain.find(spec.target_domain);
        if (it != service_by_domain.end() && it->second->kind == "mock" &&
            !it->second->answer_templates.count(spec.intent))
            violations.push_back("mock service '" + it->second->service_id +
                                 "' lacks an answer template for intent '" + spec.intent + "'");
    }
    for (const auto& rule : config.rule_set.rules) {
        if (!kg_ids.count(rule.target_kg))
            violations.push_back("rule '" + rule.rule_id + "' targets undeclared KG '" +
                                 rule.target_kg + "'");
        if (!intents.count(rule.intent))
            violations.push_back("rule '" + rule.rule_id + "' serves undeclared intent '" +
                                 rule.intent + "'");
        if (rule.predicate.role && !roles.count(*rule.predicate.role))
            violations.push_back("rule '" + rule.rule_id + "' requires undeclared role '" +
                                 *rule.predicate.role + "'");
        for (const auto& [key, _] : rule.predicate.required_attributes)
            if (!attr_keys.count(key))
                violations.push_back("rule '" + rule.rule_id +
                                     "' requires undeclared attribute key '" + key + "'");
    }
    for (const auto& c : config.conclusion_templates)
        for (const auto& intent : c.intents)
            if (!intents.count(intent))
                violations.push_back("conclusion template references undeclared intent '" +
                                     intent + "'");
    if (config.roles.empty()) violations.push_back("roles list must declare at least one role");

    if (!violations.empty()) {
        std::string all;
        for (const auto& v : violations) {
            if (!all.empty()) all += "; ";
            all += v;
        }
        throw PipelineError(errors::kConfig, "referential-integrity-error", all);
    }
    return config;
}

PlatformConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw PipelineError(errors::kConfig, "parse-error",
                            "cannot read config file '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw PipelineError(errors::kConfig, "parse-error",
                            "invalid JSON in '" + path.string() + "': " + e.what());
    }
    try {
        return parse_config(doc, path.parent_path());
    } catch (const PipelineError&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw PipelineError(errors::kConfig, "parse-error",
                            "malformed config '" + path.string() + "': " + e.what());
    }
}

UserContext validate_context(const UserContext& ctx, const PlatformConfig& config) {
    if (std::find(config.roles.begin(), config.roles.end(), ctx.role) == config.roles.end())
        throw PipelineError(errors::kContextValidation, "unknown-role",
                            "role '" + ctx.role + "' is not declared in the configuration");
    for (const auto& [key, _] : ctx.attributes) {
        if (std::find(config.user_attribute_keys.begin(), config.user_attribute_keys.end(),
                      key) == config.user_attribute_keys.end())
            throw PipelineError(errors::kContextValidation, "unknown-attribute-key",
                                "attribute key '" + key +
                                    "' is not declared in the configuration");
    }
    return ctx;
}

} // namespace conductor
