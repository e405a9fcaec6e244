#include "conductor/rule_engine.hpp"

#include <algorithm>
#include <set>

#include "conductor/errors.hpp"
#include "conductor/text.hpp"

namespace conductor {

bool ContextPredicate::satisfied_by(const UserContext& ctx) const {
    if (role && *role != ctx.role) return false;
    for (const auto& [key, expected] : required_attributes) {
        auto it = ctx.attributes.find(key);
        if (it == ctx.attributes.end() || !(it->second == expected)) return false;
    }
    return true;
}

RuleSet make_rule_set(std::vector<Rule> rules, std::string version) {
    if (rules.empty())
        throw PipelineError(errors::kConfig, "invalid-rule-set",
                            "rule set must contain at least one rule");
    std::set<std::string> ids;
    for (const auto& r : rules) {
        if (r.rule_id.empty() || r.intent.empty() || r.target_kg.empty())
            throw PipelineError(errors::kConfig, "invalid-rule-set",
                                "rules require rule_id, intent and target_kg");
        if (!ids.insert(r.rule_id).second)
            throw PipelineError(errors::kConfig, "invalid-rule-set",
                                "duplicate rule_id '" + r.rule_id + "'");
    }
    return RuleSet{std::move(rules), std::move(version)};
}

const Rule& match_rule(const SubPrompt& sub, const UserContext& ctx, const RuleSet& rules) {
    const Rule* best = nullptr;
    for (const auto& r : rules.rules) {
        if (r.intent != sub.intent) continue;
        if (!r.predicate.satisfied_by(ctx)) continue;
        if (!best || r.priority > best->priority) best = &r; // ties keep declaration order
    }
    if (!best)
        throw PipelineError(errors::kPlanning, "no-rule-matched",
                            "no rule matches intent '" + sub.intent + "' for role '" +
                                ctx.role + "'");
    return *best;
}

namespace {

std::optional<Scalar> lookup_source(const std::string& name, const UserContext& ctx,
                                    const std::map<std::string, Scalar>& prior_facts) {
    if (name == "user_id") return Scalar(ctx.user_id);
    if (name == "role") return Scalar(ctx.role);
    if (auto it = ctx.attributes.find(name); it != ctx.attributes.end()) return it->second;
    if (auto it = prior_facts.find(name); it != prior_facts.end()) return it->second;
    return std::nullopt;
}

// Substitutes one template scalar. Whole-string placeholders preserve the
// source type so numeric filters keep comparing numerically.
Scalar substitute_scalar(const Scalar& tmpl, const UserContext& ctx,
                         const std::map<std::string, Scalar>& prior_facts,
                         std::vector<std::string>& unresolved) {
    if (!tmpl.is_string()) return tmpl;
    const std::string& s = tmpl.as_string();
    auto names = text::placeholder_names(s);
    if (names.empty()) return tmpl;
    if (names.size() == 1 && s == "{" + names.front() + "}") {
        if (auto v = lookup_source(names.front(), ctx, prior_facts)) return *v;
        unresolved.push_back(names.front());
        return tmpl;
    }
    std::string rendered = text::substitute_placeholders(
        s,
        [&](const std::string& name, const std::string&) -> std::optional<std::string> {
            if (auto v = lookup_source(name, ctx, prior_facts)) return v->display();
            return std::nullopt;
        },
        &unresolved);
    return Scalar(std::move(rendered));
}

} // namespace

RuleBinding bind_rule(const Rule& rule, const SubPrompt& sub, const UserContext& ctx,
                 const std::map<std::string, Scalar>& prior_facts) {
    std::vector<std::string> unresolved;
    KGQuery resolved = rule.query_template;
    for (auto& f : resolved.attribute_filters)
        f.value = substitute_scalar(f.value, ctx, prior_facts, unresolved);
    for (auto& rc : resolved.relation_constraints)
        for (auto& f : rc.filters)
            f.value = substitute_scalar(f.value, ctx, prior_facts, unresolved);

    if (!unresolved.empty()) {
        std::string names;
        for (const auto& n : unresolved) {
            if (!names.empty()) names += ", ";
            names += n;
        }
        throw PipelineError(errors::kExecution, "unresolved-placeholder",
                            "rule '" + rule.rule_id + "' query references unknown value(s): " +
                                names);
    }
    return RuleBinding{rule, std::move(resolved), sub.id};
}

} // namespace conductor
