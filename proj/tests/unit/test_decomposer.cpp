#include <doctest.h>

#include <random>

#include "conductor/decomposer.hpp"
#include "conductor/errors.hpp"
#include "../support/test_support.hpp"

using namespace conductor;
namespace ct = conductor::testing;

namespace {

IntentCatalog banking_catalog() {
    auto config = load_config(ct::banking_config_path());
    return config.intent_catalog;
}

Prompt banking_prompt(const std::string& text) {
    return make_prompt(text, ct::retail_ctx());
}

} // namespace

TEST_CASE("catalog construction validates labels, deps and chain references") {
    IntentSpec a{"a", {"alpha"}, "d1", "ta", {}, 0};
    IntentSpec b{"b", {"beta"}, "d2", "tb + {R1}", {"a"}, 0};
    CHECK_NOTHROW(IntentCatalog({a, b}, "v"));

    CHECK_THROWS_AS(IntentCatalog({}, "v"), PipelineError);              // empty
    CHECK_THROWS_AS(IntentCatalog({a, a}, "v"), PipelineError);          // duplicate label
    IntentSpec dangling{"c", {"x"}, "d", "t", {"nope"}, 0};
    CHECK_THROWS_AS(IntentCatalog({dangling}, "v"), PipelineError);      // undeclared dep
    IntentSpec self{"c", {"x"}, "d", "t", {"c"}, 0};
    CHECK_THROWS_AS(IntentCatalog({self}, "v"), PipelineError);          // self dep
    IntentSpec bad_ref{"c", {"x"}, "d", "t {R1}", {}, 0};
    CHECK_THROWS_AS(IntentCatalog({a, bad_ref}, "v"), PipelineError);    // {R1} not a dep
    IntentSpec cyc_a{"a", {"alpha"}, "d", "t", {"b"}, 0};
    IntentSpec cyc_b{"b", {"beta"}, "d", "t", {"a"}, 0};
    CHECK_THROWS_AS(IntentCatalog({cyc_a, cyc_b}, "v"), PipelineError);  // cycle
}

TEST_CASE("banking prompt matches all three chained intents in order") {
    auto catalog = banking_catalog();
    auto matched = match_intents(banking_prompt(ct::kBankingPrompt), catalog);
    REQUIRE(matched.size() == 3);
    CHECK(matched[0].intent == "account-summary");
    CHECK(matched[1].intent == "fd-catalog");
    CHECK(matched[2].intent == "fees-and-limits");
}

TEST_CASE("out-of-domain prompt yields no-intent-matched") {
    auto catalog = banking_catalog();
    try {
        match_intents(banking_prompt("what is the weather"), catalog);
        FAIL("expected no-intent-matched");
    } catch (const PipelineError& e) {
        CHECK(e.code() == "no-intent-matched");
    }
}

TEST_CASE("empty prompt is rejected before matching") {
    CHECK_THROWS_AS(banking_prompt("   "), PipelineError);
}

TEST_CASE("banking decomposition reproduces the three chained sub-prompts") {
    auto catalog = banking_catalog();
    auto subs = decompose(banking_prompt(ct::kBankingPrompt), catalog);
    REQUIRE(subs.size() == 3);

    CHECK(subs[0].id == 1);
    CHECK(subs[0].intent == "account-summary");
    CHECK(subs[0].text_template == "Fetch Customer Banking summary");
    CHECK(subs[0].depends_on.empty());

    CHECK(subs[1].id == 2);
    CHECK(subs[1].intent == "fd-catalog");
    CHECK(subs[1].text_template == "What are the active FD offered and its details + {R1}");
    CHECK(subs[1].depends_on == std::set<int>{1});

    CHECK(subs[2].id == 3);
    CHECK(subs[2].intent == "fees-and-limits");
    CHECK(subs[2].text_template == "Banks policy for limits, charges and others + {R2}");
    CHECK(subs[2].depends_on == std::set<int>{2});
}

TEST_CASE("dependency closure pulls prerequisites the user never asked for") {
    auto catalog = banking_catalog();
    auto subs = decompose(banking_prompt("What fixed deposits are on offer right now?"), catalog);
    REQUIRE(subs.size() == 2);
    CHECK(subs[0].intent == "account-summary"); // pulled in via closure
    CHECK(subs[1].intent == "fd-catalog");
    CHECK(subs[1].depends_on == std::set<int>{1});
}

TEST_CASE("single independent intent decomposes to one sub-prompt without deps") {
    auto catalog = banking_catalog();
    auto subs = decompose(banking_prompt("Show me my banking summary"), catalog);
    REQUIRE(subs.size() == 1);
    CHECK(subs[0].id == 1);
    CHECK(subs[0].depends_on.empty());
}

TEST_CASE("two independent intents land in one parallel-eligible decomposition") {
    // Hand-built two-intent catalog; expected decomposition computed by hand:
    // both sub-prompts present, ids by priority order, no dependencies.
    IntentSpec a{"alpha-intent", {"alpha"}, "d1", "do alpha", {}, 1};
    IntentSpec b{"beta-intent", {"beta"}, "d2", "do beta", {}, 2};
    IntentCatalog catalog({a, b}, "two");
    auto subs = decompose(banking_prompt("alpha and beta please"), catalog);
    REQUIRE(subs.size() == 2);
    CHECK(subs[0].intent == "beta-intent"); // priority 2 ranks first
    CHECK(subs[1].intent == "alpha-intent");
    CHECK(subs[0].depends_on.empty());
    CHECK(subs[1].depends_on.empty());
}

TEST_CASE("decomposition is deterministic (byte-identical serialization)") {
    auto catalog = banking_catalog();
    auto once = decompose(banking_prompt(ct::kBankingPrompt), catalog);
    auto twice = decompose(banking_prompt(ct::kBankingPrompt), catalog);
    auto dump = [](const std::vector<SubPrompt>& subs) {
        auto arr = nlohmann::json::array();
        for (const auto& s : subs) arr.push_back(to_json(s));
        return arr.dump();
    };
    CHECK(dump(once) == dump(twice));
}

namespace {

// Random catalogs: intent i may depend on any earlier-declared intents, so
// the catalog is acyclic by construction. Trigger word "w<i>" is unique.
IntentCatalog random_catalog(std::mt19937& rng, int n) {
    std::vector<IntentSpec> intents;
    for (int i = 0; i < n; ++i) {
        IntentSpec spec;
        spec.intent = "i" + std::to_string(i);
        spec.trigger_patterns = {"w" + std::to_string(i)};
        spec.target_domain = "d" + std::to_string(i % 3);
        spec.sub_prompt_template = "task " + std::to_string(i);
        for (int d = 0; d < i; ++d)
            if (rng() % 4 == 0) spec.depends_on_intents.insert("i" + std::to_string(d));
        spec.priority = static_cast<int>(rng() % 5);
        intents.push_back(std::move(spec));
    }
    return IntentCatalog(std::move(intents), "random");
}

} // namespace

TEST_CASE("properties: completeness, dependency soundness, closure") {
    std::mt19937 rng(23);
    auto ctx = ct::retail_ctx();
    for (int iter = 0; iter < 200; ++iter) {
        int n = 2 + static_cast<int>(rng() % 7);
        auto catalog = random_catalog(rng, n);

        // Pick a random non-empty subset of trigger words for the prompt.
        std::string prompt_text;
        std::set<std::string> asked;
        for (int i = 0; i < n; ++i) {
            if (rng() % 2 == 0) {
                prompt_text += " w" + std::to_string(i);
                asked.insert("i" + std::to_string(i));
            }
        }
        if (asked.empty()) continue;

        auto matched = match_intents(make_prompt(prompt_text, ctx), catalog);
        auto subs = decompose(make_prompt(prompt_text, ctx), catalog);

        // Completeness: one sub-prompt per matched intent.
        CHECK(subs.size() == matched.size());

        std::map<std::string, int> id_of;
        for (const auto& s : subs) id_of[s.intent] = s.id;

        // Closure: every matched intent's dependencies are present.
        for (const auto& spec : matched)
            for (const auto& dep : spec.depends_on_intents) CHECK(id_of.count(dep) == 1);
        // Every directly asked intent is present.
        for (const auto& a : asked) CHECK(id_of.count(a) == 1);

        // Dependency soundness: deps appear earlier in output order.
        for (const auto& s : subs)
            for (int dep : s.depends_on) CHECK(dep < s.id);

        validate_decomposition(subs); // acyclic by construction
    }
}
