#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "conductor/core.hpp"
#include "conductor/graph_store.hpp"

namespace conductor {

// Conjunction of attribute equality requirements plus an optional role
// requirement. Adding attributes to a context never un-satisfies a
// predicate that was already satisfied.
struct ContextPredicate {
    std::optional<std::string> role;
    std::map<std::string, Scalar> required_attributes;

    bool satisfied_by(const UserContext& ctx) const;
};

struct Rule {
    std::string rule_id;
    std::string intent;
    ContextPredicate predicate;
    std::string target_kg;
    // KGQuery whose string values may carry {placeholder}s, substituted by
    // bind() from user_id/role, context attributes and chained facts.
    KGQuery query_template;
    int priority = 0; // larger value wins
};

struct RuleSet {
    std::vector<Rule> rules;
    std::string version;
};

// Validates non-emptiness and rule_id uniqueness.
RuleSet make_rule_set(std::vector<Rule> rules, std::string version);

struct RuleBinding {
    Rule rule;
    KGQuery resolved_query; // no unsubstituted placeholders remain
    int sub_prompt_id = 0;
};

// Highest-priority rule whose intent matches and whose predicate the context
// satisfies; declaration order breaks ties. Throws no-rule-matched.
const Rule& match_rule(const SubPrompt& sub, const UserContext& ctx, const RuleSet& rules);

// Substitutes query-template placeholders. Sources, in precedence order:
// built-ins (user_id, role), context attributes, chained facts. A value that
// is exactly one placeholder keeps the source scalar's type; embedded
// placeholders render as text. Throws unresolved-placeholder.
RuleBinding bind_rule(const Rule& rule, const SubPrompt& sub, const UserContext& ctx,
                 const std::map<std::string, Scalar>& prior_facts);

} // namespace conductor
