#include <doctest.h>

#include <random>

#include "conductor/errors.hpp"
#include "conductor/rule_engine.hpp"
#include "../support/test_support.hpp"

using namespace conductor;
namespace ct = conductor::testing;

namespace {

RuleSet banking_rules() { return load_config(ct::banking_config_path()).rule_set; }

SubPrompt sub_for(const std::string& intent, int id = 1) {
    return make_sub_prompt(id, intent, "text", {}, "domain");
}

} // namespace

TEST_CASE("rule set validation") {
    Rule r{"R1", "intent", {}, "KG1", KGQuery{"kind", {}, {}, {}}, 0};
    CHECK_NOTHROW(make_rule_set({r}, "v"));
    CHECK_THROWS_AS(make_rule_set({}, "v"), PipelineError);
    CHECK_THROWS_AS(make_rule_set({r, r}, "v"), PipelineError); // duplicate rule_id
}

TEST_CASE("saving retail context selects Rule1 -> KG1") {
    auto rules = banking_rules();
    const Rule& r = match_rule(sub_for("account-summary"), ct::retail_ctx(), rules);
    CHECK(r.rule_id == "Rule1");
    CHECK(r.target_kg == "KG1");
}

TEST_CASE("fd and policy intents select Rule2/Rule3 for any retail context") {
    auto rules = banking_rules();
    CHECK(match_rule(sub_for("fd-catalog"), ct::retail_ctx(), rules).rule_id == "Rule2");
    CHECK(match_rule(sub_for("fd-catalog"), ct::retail_ctx(), rules).target_kg == "KG2");
    CHECK(match_rule(sub_for("fees-and-limits"), ct::retail_ctx(), rules).rule_id == "Rule3");
    CHECK(match_rule(sub_for("fees-and-limits"), ct::retail_ctx(), rules).target_kg == "KG3");
}

TEST_CASE("priority decides when several rules match; fallback covers the rest") {
    auto rules = banking_rules();
    // Retail/saving satisfies both Rule1 (priority 10) and the fallback
    // (priority 1): the higher priority wins.
    CHECK(match_rule(sub_for("account-summary"), ct::retail_ctx(), rules).rule_id == "Rule1");
    // A corporate context fails Rule1's predicate and lands on the fallback.
    auto corporate = make_user_context("C1", "corporate-customer",
                                       {{"account-type", Scalar("current")}});
    CHECK(match_rule(sub_for("account-summary"), corporate, rules).rule_id ==
          "RuleAccountFallback");
}

TEST_CASE("unmatched intent raises no-rule-matched") {
    auto rules = banking_rules();
    try {
        match_rule(sub_for("unknown-intent"), ct::retail_ctx(), rules);
        FAIL("expected no-rule-matched");
    } catch (const PipelineError& e) {
        CHECK(e.code() == "no-rule-matched");
    }
}

TEST_CASE("bind substitutes user attributes into the query template") {
    auto rules = banking_rules();
    auto ctx = ct::retail_ctx("XXX");
    const Rule& r = match_rule(sub_for("account-summary"), ctx, rules);
    RuleBinding binding = bind_rule(r, sub_for("account-summary"), ctx, {});
    REQUIRE(binding.resolved_query.attribute_filters.size() == 2);
    CHECK(binding.resolved_query.attribute_filters[0].key == "owner");
    CHECK(binding.resolved_query.attribute_filters[0].value == Scalar("XXX"));
    CHECK(binding.resolved_query.attribute_filters[1].key == "account_type");
    CHECK(binding.resolved_query.attribute_filters[1].value == Scalar("saving"));
}

TEST_CASE("placeholder-free templates bind verbatim") {
    auto rules = banking_rules();
    auto ctx = ct::retail_ctx();
    const Rule& r = match_rule(sub_for("fd-catalog"), ctx, rules);
    RuleBinding binding = bind_rule(r, sub_for("fd-catalog"), ctx, {});
    REQUIRE(binding.resolved_query.attribute_filters.size() == 1);
    CHECK(binding.resolved_query.attribute_filters[0].value == Scalar("active"));
}

TEST_CASE("missing substitution raises unresolved-placeholder") {
    Rule r{"RuleX", "fees-and-limits", {}, "KG3",
           KGQuery{"policy", {AttributeFilter{"transfer-scope", FilterOp::eq, Scalar("{scope}")}},
                   {}, {}},
           0};
    try {
        bind_rule(r, sub_for("fees-and-limits"), ct::retail_ctx(), /*prior_facts=*/{});
        FAIL("expected unresolved-placeholder");
    } catch (const PipelineError& e) {
        CHECK(e.code() == "unresolved-placeholder");
        CHECK(std::string(e.what()).find("scope") != std::string::npos);
    }
    // The same template resolves once a chained fact supplies the value.
    RuleBinding ok = bind_rule(r, sub_for("fees-and-limits"), ct::retail_ctx(),
                               {{"scope", Scalar("within-bank")}});
    CHECK(ok.resolved_query.attribute_filters[0].value == Scalar("within-bank"));
}

TEST_CASE("whole-string placeholders keep the source scalar type") {
    Rule r{"RuleY", "x", {}, "KG",
           KGQuery{"k",
                   {AttributeFilter{"amount", FilterOp::gt, Scalar("{threshold}")},
                    AttributeFilter{"label", FilterOp::eq, Scalar("limit is {threshold}")}},
                   {}, {}},
           0};
    RuleBinding binding =
        bind_rule(r, sub_for("x"), ct::retail_ctx(), {{"threshold", Scalar(100000)}});
    CHECK(binding.resolved_query.attribute_filters[0].value == Scalar(100000)); // numeric
    CHECK(binding.resolved_query.attribute_filters[1].value == Scalar("limit is 100000"));
}

TEST_CASE("property: exactly one rule or no-rule-matched, never several") {
    auto rules = banking_rules();
    std::vector<std::string> intents{"account-summary", "fd-catalog", "fees-and-limits",
                                     "fd-min-deposit", "transfer-limit", "nonexistent"};
    std::vector<UserContext> contexts{
        ct::retail_ctx(),
        make_user_context("C1", "corporate-customer", {{"account-type", Scalar("current")}}),
        make_user_context("U2", "retail-customer", {}),
    };
    for (const auto& intent : intents) {
        for (const auto& ctx : contexts) {
            try {
                const Rule& a = match_rule(sub_for(intent), ctx, rules);
                const Rule& b = match_rule(sub_for(intent), ctx, rules);
                CHECK(a.rule_id == b.rule_id); // deterministic single winner
            } catch (const PipelineError& e) {
                CHECK(e.code() == "no-rule-matched");
            }
        }
    }
}

TEST_CASE("property: adding attributes never un-matches a satisfied predicate") {
    std::mt19937 rng(31);
    for (int iter = 0; iter < 300; ++iter) {
        ContextPredicate pred;
        if (rng() % 2 == 0) pred.role = "retail-customer";
        for (int i = 0; i < static_cast<int>(rng() % 3); ++i)
            pred.required_attributes.emplace("k" + std::to_string(i),
                                             Scalar(static_cast<std::int64_t>(rng() % 3)));

        UserContext ctx = make_user_context("u", "retail-customer");
        for (const auto& [k, v] : pred.required_attributes) ctx.attributes[k] = v;
        if (!pred.satisfied_by(ctx)) continue;

        UserContext widened = ctx;
        widened.attributes["extra-" + std::to_string(rng() % 100)] =
            Scalar(static_cast<std::int64_t>(rng() % 9));
        CHECK(pred.satisfied_by(widened));
    }
}

TEST_CASE("property: bind is idempotent for identical inputs") {
    auto rules = banking_rules();
    auto ctx = ct::retail_ctx();
    const Rule& r = match_rule(sub_for("account-summary"), ctx, rules);
    auto once = bind_rule(r, sub_for("account-summary"), ctx, {});
    auto twice = bind_rule(r, sub_for("account-summary"), ctx, {});
    CHECK(once.resolved_query.to_json().dump() == twice.resolved_query.to_json().dump());
}
